#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "njr/agent.hpp"
#include "njr/ast.hpp"
#include "njr/cache.hpp"
#include "njr/env.hpp"
#include "njr/errors.hpp"
#include "njr/session.hpp"
#include "njr/trace.hpp"
#include "njr/value.hpp"

namespace njr {

struct RunConfig {
  HandlerMode mode = HandlerMode::SharedState;
  int max_effects = 300;
  double timeout_s = 1000.0;
  bool eager = true;
  bool shared_eval = true;
  int max_malformed = 3;
  int max_finalize_retries = 1;

  std::string digest() const;
};

// Line-oriented program I/O. Reads come from an injected source so
// interactive programs are scriptable; writes are captured in the transcript
// and optionally mirrored to a live stream.
struct Io {
  std::function<std::optional<std::string>()> read_line = [] {
    return std::optional<std::string>{};
  };
  std::ostream* live = nullptr;
  bool echo_input = true;
  std::string transcript;

  void write(std::string_view s);
  static Io from_lines(std::vector<std::string> lines);
};

struct RunResult {
  std::optional<RunError> error;
  Value value;
  std::string stdout_text;
  std::vector<SessionTrace> sessions;
  int effect_count = 0;
  int agent_invocations = 0;
  double wall_time_s = 0.0;
  Env::Frame globals;
  Heap heap;

  bool ok() const { return !error.has_value(); }
  int exit_code() const { return error ? exit_code_for(error->cls) : 0; }
};

// Control transfer in flight: thrown by unwind_to_label, caught at the
// matching label frame.
struct UnwindSignal {
  std::uint64_t target_frame_id;
  std::optional<Value> payload;
};

struct ControlFrame {
  std::string name;
  LabelKind kind;
  std::uint64_t frame_id;
  std::size_t env_depth;
};

// Tree-walking evaluator over the state triple of scope stack, heap and
// control state. One instance is confined to a single thread.
class Interpreter {
 public:
  Interpreter(const Program& program, Agent& agent, Io& io, const RunConfig& config,
              ToolRegistry* tools = nullptr, TraceCache* cache = nullptr);

  RunResult run();

  // --- surfaces used by the NFI layer and by tests ---

  Env& env() { return env_; }
  Heap& heap() { return heap_; }
  const std::vector<ControlFrame>& control() const { return control_; }
  const Program& program() const { return program_; }
  const RunConfig& config() const { return config_; }
  Io& io() { return io_; }
  ToolRegistry* tools() { return tools_; }

  // Canonical digest of the state triple; used by purity tests.
  std::string state_digest() const;

  // Dispatches one effect against the session. Err responses leave the state
  // triple untouched.
  EffectResponse handle_effect(Session& session, const Effect& effect);

  // Runs one natural block session to completion or control transfer.
  BlockOutcome run_natural_block(const NaturalBlock& block);

  AgentContext build_context(const NaturalBlock& block, const Session& session) const;

  // Evaluates source text as a host expression over the current scopes and
  // heap. On failure the heap is restored and EffectFailure(EvalError) is
  // thrown.
  WireValue eval_shared(const std::string& src);

  // Unwinds to the innermost active label with this name. Throws
  // RuntimeFailure (DeadLabel / payload rules) or UnwindSignal.
  [[noreturn]] void unwind_to_label(const std::string& name, std::optional<Value> payload);

  // Calls a top-level fn by name (the tool-mode registry is built on this).
  Value call_program_function(const std::string& name, std::vector<Value> args);

  std::size_t unwind_depth_mismatches() const { return depth_mismatches_; }
  const std::string& program_hash_hex() const { return program_hash_; }

 private:
  friend struct EnvFrameGuard;
  friend struct ControlGuard;

  Value eval(const Expr& e);
  Value eval_binop(const BinOp& node, const Expr& e);
  Value eval_call(const Call& node, const Expr& e);
  Value eval_builtin(const std::string& name, std::vector<Value> args, const Expr& e);
  Value call_function(const FnDef& fn, std::vector<Value> args);
  Value eval_while(const While& node);
  Value eval_natural(const NaturalExpr& node);

  void check_timeout();
  AgentStep next_step(Session& session, const AgentContext& ctx, const std::string& eager_canon);
  void record_session(const Session& session, const std::string& context_digest);

  const Program& program_;
  Agent& agent_;
  Io& io_;
  RunConfig config_;
  ToolRegistry* tools_ = nullptr;
  TraceCache* cache_ = nullptr;

  Env env_;
  Heap heap_;
  std::vector<ControlFrame> control_;
  std::uint64_t next_frame_id_ = 1;
  std::size_t control_barrier_ = 0;  // labels below this are invisible (shared eval)
  int eval_depth_ = 0;               // >0 while inside SharedEval
  bool in_session_ = false;

  std::vector<SessionTrace> sessions_;
  int effect_total_ = 0;
  std::size_t depth_mismatches_ = 0;
  std::string program_hash_;
  std::string config_digest_;
  std::chrono::steady_clock::time_point deadline_;
};

}  // namespace njr
