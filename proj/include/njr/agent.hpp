#pragma once

#include <string>
#include <vector>

#include "njr/effect.hpp"

namespace njr {

// One input variable loaded eagerly into the agent's context: name, host type
// name, serialized value, and a short preview for composites.
struct EagerVar {
  std::string name;
  std::string type;
  WireValue value;
  std::string preview;

  njson to_json() const;
};

std::string eager_vars_canonical(const std::vector<EagerVar>& vars);

// Everything an agent sees when asked for its next step. The history is the
// session trace so far; responses to prior effects arrive through it.
struct AgentContext {
  std::string block_text;
  std::string block_id;
  std::string mode;
  std::vector<EagerVar> eager_vars;
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, std::string>> tools;  // name, description
  const std::vector<TraceEntry>* history = nullptr;

  // Text the scripted agent's guards match against: the canonical eager
  // context plus every prior response in canonical encoding.
  std::string haystack() const;
};

// An agent step is an effect; a Return effect finishes the session.
struct AgentStep {
  Effect effect;
  bool is_finish() const { return effect.is_terminal(); }
};

// The natural code evaluation function: one step per invocation. After a
// finish or a cancellation the runtime never invokes the agent again.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual AgentStep next(const AgentContext& ctx) = 0;
  // Stable identity folded into cache keys (script digest, system prompt
  // digest, ...).
  virtual std::string identity_digest() const = 0;
  virtual void on_session_start(const AgentContext& ctx) { (void)ctx; }
  virtual void on_session_end(const AgentContext& ctx) { (void)ctx; }

  int invocations = 0;
};

}  // namespace njr
