#pragma once

#include <stdexcept>
#include <string>

namespace njr {

// Error codes surfaced to natural code through effect responses.
enum class ErrCode {
  ForbiddenVar,
  UndefinedVar,
  DanglingRef,
  BadLabel,
  TypeError,
  EvalError,
};

const char* err_code_name(ErrCode code);
ErrCode err_code_from_name(const std::string& name);

struct EffectErr {
  ErrCode code;
  std::string message;
};

// Thrown by host-side helpers (reify, shared eval, tools) and turned into an
// Err response by the handler; never escapes the effect dispatch layer.
struct EffectFailure : std::runtime_error {
  EffectErr err;
  explicit EffectFailure(EffectErr e) : std::runtime_error(e.message), err(std::move(e)) {}
  EffectFailure(ErrCode code, std::string message)
      : std::runtime_error(message), err{code, std::move(message)} {}
};

// Terminal error classes for a whole run, mapped to CLI exit codes.
enum class RunErrorClass {
  Parse,
  Runtime,
  Budget,
  Timeout,
  Agent,
};

struct RunError {
  RunErrorClass cls;
  std::string message;
};

const char* run_error_class_name(RunErrorClass cls);
int exit_code_for(RunErrorClass cls);

// Host-level runtime failure (type errors, dangling addresses, raise, ...).
struct RuntimeFailure : std::runtime_error {
  explicit RuntimeFailure(std::string message) : std::runtime_error(std::move(message)) {}
};

struct BudgetExceeded : std::runtime_error {
  int attempted;
  explicit BudgetExceeded(int attempted_effect)
      : std::runtime_error("effect budget exceeded at effect " + std::to_string(attempted_effect)),
        attempted(attempted_effect) {}
};

struct TimeoutExpired : std::runtime_error {
  explicit TimeoutExpired(double limit_s)
      : std::runtime_error("wall clock timeout of " + std::to_string(limit_s) + " s exceeded") {}
};

struct AgentFailure : std::runtime_error {
  explicit AgentFailure(std::string message) : std::runtime_error(std::move(message)) {}
};

struct ParseError : std::runtime_error {
  int line;
  int col;
  ParseError(std::string message, int line_, int col_)
      : std::runtime_error(std::move(message)), line(line_), col(col_) {}
};

}  // namespace njr
