#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "njr/agent.hpp"
#include "njr/ast.hpp"
#include "njr/effect.hpp"

namespace njr {

class Interpreter;

// The three handler modes: the full shared-state vocabulary, tool calls only,
// or no effects at all. SharedEval is additionally gated by configuration.
enum class HandlerMode { SharedState, ToolUse, Isolated };

const char* handler_mode_name(HandlerMode mode);
std::optional<HandlerMode> handler_mode_from_name(std::string_view name);

class ToolRegistry {
 public:
  using Fn = std::function<WireValue(const WireValue&, Interpreter&)>;

  struct Tool {
    std::string name;
    std::string description;
    Fn fn;
  };

  // False on duplicate name.
  bool register_tool(std::string name, std::string description, Fn fn);
  const Tool* find(std::string_view name) const;
  std::vector<std::pair<std::string, std::string>> listing() const;

 private:
  std::vector<Tool> tools_;
};

// A suspended natural-code evaluation. One in-flight effect at a time; after
// cancellation or finish the agent is never stepped again.
struct Session {
  enum class Status { Running, Finished, Cancelled };

  const NaturalBlock* block = nullptr;
  HandlerMode mode = HandlerMode::SharedState;
  bool shared_eval_enabled = true;
  Status status = Status::Running;
  std::vector<TraceEntry> entries;
  int effects_used = 0;
  int finalize_failures = 0;
  std::size_t block_frame_index = 0;

  Session() = default;
  Session(const NaturalBlock* b, HandlerMode m, bool eval_enabled)
      : block(b), mode(m), shared_eval_enabled(eval_enabled) {}
};

struct BlockOutcome {
  enum class Kind { Completed, Control };
  Kind kind = Kind::Completed;
  Value value;  // reified Return payload (the block's value in expr position)
  std::string label;
  std::optional<Value> payload;

  bool completed() const { return kind == Kind::Completed; }
};

}  // namespace njr
