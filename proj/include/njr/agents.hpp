#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "njr/agent.hpp"
#include "njr/trace.hpp"

namespace njr {

struct NoRuleMatch : AgentFailure {
  using AgentFailure::AgentFailure;
};
struct TraceMismatch : AgentFailure {
  using AgentFailure::AgentFailure;
};
struct TraceExhausted : AgentFailure {
  using AgentFailure::AgentFailure;
};

// Deterministic test double for the LLM. Rules are selected per step by
// first-match over the context haystack (eager context + prior responses);
// the step index within a rule is the number of entries so far.
struct ScriptRule {
  std::optional<std::string> guard;
  std::vector<Effect> steps;
};

class ScriptedAgent : public Agent {
 public:
  static ScriptedAgent from_json(const njson& j);
  static ScriptedAgent from_file(const std::string& path);

  AgentStep next(const AgentContext& ctx) override;
  std::string identity_digest() const override { return digest_; }

  const std::map<std::string, std::vector<ScriptRule>>& blocks() const { return blocks_; }

 private:
  std::map<std::string, std::vector<ScriptRule>> blocks_;
  std::string digest_;
};

// Replays a recorded trace verbatim, verifying byte-equality of each live
// response against the recording before advancing.
class ReplayAgent : public Agent {
 public:
  ReplayAgent(std::vector<SessionTrace> records, std::string expected_program_hash);
  static ReplayAgent from_file(const std::string& path, std::string expected_program_hash);

  void on_session_start(const AgentContext& ctx) override;
  void on_session_end(const AgentContext& ctx) override;
  AgentStep next(const AgentContext& ctx) override;
  std::string identity_digest() const override { return digest_; }

 private:
  const SessionTrace& current() const;
  void verify_history(const AgentContext& ctx, std::size_t upto);

  std::vector<SessionTrace> records_;
  std::string digest_;
  std::ptrdiff_t session_idx_ = -1;
};

}  // namespace njr
