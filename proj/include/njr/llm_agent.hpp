#pragma once

#include <memory>
#include <string>

#include "njr/agent.hpp"

namespace njr {

struct LlmConfig {
  std::string base_url;  // chat-completions-compatible endpoint
  std::string api_key;
  std::string model = "gpt-4.1";
  std::string system_prompt;  // empty -> built-in default
  int max_attempts = 3;       // transport retries
  double backoff_s = 1.0;     // exponential, starting here
  int max_malformed = 3;      // re-prompts for unparseable model output

  // Reads NJR_LLM_BASE_URL / NJR_LLM_API_KEY / NJR_LLM_SYSTEM_PROMPT_FILE.
  static LlmConfig from_env();
};

// Chat-API agent: one tool per effect kind (lookup/assign/deref/ref/set/
// goto/eval/call/done); each prior (effect, response) pair is rendered as a
// tool call plus tool result.
class LlmAgent : public Agent {
 public:
  explicit LlmAgent(LlmConfig config);
  ~LlmAgent() override;

  AgentStep next(const AgentContext& ctx) override;
  std::string identity_digest() const override;

  // Exposed for tests.
  static njson effect_to_tool_call(const Effect& e);
  static Effect tool_call_to_effect(const std::string& name, const njson& args);
  njson build_request(const AgentContext& ctx) const;

 private:
  struct Impl;
  LlmConfig config_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace njr
