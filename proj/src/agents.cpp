#include "njr/agents.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "njr/digest.hpp"

namespace njr {

ScriptedAgent ScriptedAgent::from_json(const njson& j) {
  ScriptedAgent agent;
  if (!j.is_object() || !j.contains("blocks") || !j["blocks"].is_object()) {
    throw AgentFailure("script: expected {\"blocks\": {...}}");
  }
  for (const auto& [block_id, rules] : j["blocks"].items()) {
    std::vector<ScriptRule> parsed;
    if (!rules.is_array()) throw AgentFailure("script: rules for " + block_id + " must be a list");
    for (const auto& rule : rules) {
      ScriptRule r;
      if (rule.contains("guard") && !rule["guard"].is_null()) {
        r.guard = rule["guard"].get<std::string>();
      }
      if (!rule.contains("steps") || !rule["steps"].is_array()) {
        throw AgentFailure("script: rule without steps in " + block_id);
      }
      for (const auto& step : rule["steps"]) {
        try {
          r.steps.push_back(Effect::from_json(step));
        } catch (const EffectFailure& f) {
          throw AgentFailure("script: " + f.err.message);
        }
      }
      parsed.push_back(std::move(r));
    }
    agent.blocks_[block_id] = std::move(parsed);
  }
  agent.digest_ = sha256_hex(j.dump());
  return agent;
}

ScriptedAgent ScriptedAgent::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AgentFailure("cannot open script file: " + path);
  njson j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw AgentFailure(fmt::format("script {}: {}", path, e.what()));
  }
  return from_json(j);
}

AgentStep ScriptedAgent::next(const AgentContext& ctx) {
  auto it = blocks_.find(ctx.block_id);
  if (it == blocks_.end()) {
    throw NoRuleMatch(fmt::format("script has no rules for block {}", ctx.block_id));
  }
  const std::string haystack = ctx.haystack();
  for (const ScriptRule& rule : it->second) {
    if (rule.guard && haystack.find(*rule.guard) == std::string::npos) continue;
    const std::size_t k = ctx.history ? ctx.history->size() : 0;
    if (k >= rule.steps.size()) {
      throw NoRuleMatch(
          fmt::format("script rule for block {} exhausted at step {}", ctx.block_id, k));
    }
    return AgentStep{rule.steps[k]};
  }
  throw NoRuleMatch(fmt::format("no script rule matched for block {}", ctx.block_id));
}

ReplayAgent::ReplayAgent(std::vector<SessionTrace> records, std::string expected_program_hash)
    : records_(std::move(records)) {
  digest_ = sha256_hex(trace_to_text(records_));
  for (const auto& r : records_) {
    if (r.program_hash != expected_program_hash) {
      throw TraceMismatch(fmt::format(
          "trace was recorded for program {} but the live program is {}",
          r.program_hash.substr(0, 12), expected_program_hash.substr(0, 12)));
    }
  }
}

ReplayAgent ReplayAgent::from_file(const std::string& path, std::string expected_program_hash) {
  return ReplayAgent(read_trace_file(path), std::move(expected_program_hash));
}

const SessionTrace& ReplayAgent::current() const {
  return records_[static_cast<std::size_t>(session_idx_)];
}

void ReplayAgent::on_session_start(const AgentContext& ctx) {
  ++session_idx_;
  if (session_idx_ >= static_cast<std::ptrdiff_t>(records_.size())) {
    throw TraceExhausted(
        fmt::format("trace has {} session(s) but the program needs more", records_.size()));
  }
  const SessionTrace& r = current();
  if (r.block_id != ctx.block_id) {
    throw TraceMismatch(fmt::format("trace session {} is for block {} but block {} is running",
                                    session_idx_, r.block_id, ctx.block_id));
  }
  if (r.mode != ctx.mode) {
    throw TraceMismatch(
        fmt::format("trace session {} was recorded in mode {} but mode {} is active",
                    session_idx_, r.mode, ctx.mode));
  }
  const std::string live_ctx = sha256_hex(eager_vars_canonical(ctx.eager_vars));
  if (r.context_digest != live_ctx) {
    throw TraceMismatch(fmt::format(
        "trace session {}: eager context diverges from the recording", session_idx_));
  }
}

void ReplayAgent::verify_history(const AgentContext& ctx, std::size_t upto) {
  const SessionTrace& r = current();
  for (std::size_t i = 0; i < upto; ++i) {
    const TraceEntry& live = (*ctx.history)[i];
    const TraceEntry& rec = r.entries[i];
    const std::string live_rsp = live.response.canonical();
    const std::string rec_rsp = rec.response.canonical();
    if (live_rsp != rec_rsp) {
      throw TraceMismatch(fmt::format(
          "trace mismatch at session {} step {}: recorded response {} but live response {}",
          session_idx_, i, rec_rsp, live_rsp));
    }
  }
}

AgentStep ReplayAgent::next(const AgentContext& ctx) {
  const SessionTrace& r = current();
  const std::size_t k = ctx.history ? ctx.history->size() : 0;
  if (k > r.entries.size()) {
    throw TraceExhausted(fmt::format("trace session {} exhausted at step {}", session_idx_, k));
  }
  verify_history(ctx, k);
  if (k == r.entries.size()) {
    throw TraceExhausted(fmt::format(
        "trace session {} has {} step(s) but the program needs more", session_idx_, k));
  }
  return AgentStep{r.entries[k].effect};
}

void ReplayAgent::on_session_end(const AgentContext& ctx) {
  const std::size_t k = ctx.history ? ctx.history->size() : 0;
  verify_history(ctx, std::min(k, current().entries.size()));
}

}  // namespace njr
