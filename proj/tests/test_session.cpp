#include <doctest.h>

#include <chrono>
#include <thread>

#include "njr/interp.hpp"
#include "njr/parser.hpp"

using namespace njr;

namespace {

// Replays a fixed step list indexed by the history length; remembers every
// response it observed for the resume-law check.
struct StepAgent : Agent {
  std::vector<Effect> steps;
  std::vector<std::string> observed_responses;

  explicit StepAgent(std::vector<Effect> s) : steps(std::move(s)) {}

  AgentStep next(const AgentContext& ctx) override {
    const std::size_t k = ctx.history ? ctx.history->size() : 0;
    if (k > 0) observed_responses.push_back(ctx.history->back().response.canonical());
    if (k >= steps.size()) throw AgentFailure("step agent exhausted");
    return AgentStep{steps[k]};
  }
  std::string identity_digest() const override { return "step-agent"; }
};

RunResult run_with(const std::string& src, Agent& agent, RunConfig cfg = {},
                   std::vector<std::string> input = {}) {
  Program p = parse_program(src);
  Io io = Io::from_lines(std::move(input));
  Interpreter interp(p, agent, io, cfg);
  return interp.run();
}

const char* kLoopBlock = R"(
let query = input("Q: ");
while true do
  natural """handle <query> and save a <:response>""";
  print("A: " + response)
end
)";

}  // namespace

TEST_CASE("a Goto effect breaks out of the loop with no prints after it") {
  StepAgent agent({Effect::lookup("query"), Effect::goto_label("break")});
  RunResult r = run_with(kLoopBlock, agent, {}, {"Exit, please."});
  REQUIRE(r.ok());
  CHECK(r.stdout_text == "Q: Exit, please.\n");  // no "A:" line
  CHECK(r.agent_invocations == 2);
  // the lookup response reached the agent unmodified (resume law)
  REQUIRE(agent.observed_responses.size() == 1);
  CHECK(agent.observed_responses[0] == "{\"ok\":{\"string\":\"Exit, please.\"}}");
}

TEST_CASE("cancel law: the agent is never stepped after a control transfer") {
  StepAgent agent({Effect::lookup("query"), Effect::goto_label("break"),
                   Effect::lookup("query")});  // third step must stay unused
  RunResult r = run_with(kLoopBlock, agent, {}, {"Exit, please."});
  REQUIRE(r.ok());
  CHECK(r.agent_invocations == 2);
  CHECK(r.effect_count == 2);
}

TEST_CASE("Assign then Return completes the block; outputs merge into the enclosing scope") {
  StepAgent agent({Effect::assign("response", WireValue::str("Graph updated.")),
                   Effect::ret(WireValue::null()),
                   Effect::goto_label("break")});
  // after the block completes once, the loop would run again: second session
  // re-runs the same steps; cut it short with one more session's Goto by
  // making the stdin line only matter once.
  Program p = parse_program(R"(
let query = "do it";
let done = ref false;
while not(!done) do
  natural """handle <query> and save a <:response>""";
  print("A: " + response);
  done := true
end
)");
  Io io;
  RunConfig cfg;
  Interpreter interp(p, agent, io, cfg);
  RunResult r = interp.run();
  REQUIRE(r.ok());
  CHECK(r.stdout_text == "A: Graph updated.\n");
  CHECK(r.agent_invocations == 2);
  REQUIRE(r.sessions.size() == 1);
  CHECK(r.sessions[0].entries.size() == 2);
  CHECK(r.sessions[0].entries[1].response.canonical() == "{\"ok\":null}");
}

TEST_CASE("missing outputs: one Err resume, then agent error") {
  StepAgent agent({Effect::ret(WireValue::null()), Effect::ret(WireValue::null())});
  RunResult r = run_with(R"(
let query = "q";
natural """handle <query> and save a <:response>"""
)", agent);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error->cls == RunErrorClass::Agent);
  CHECK(r.exit_code() == 6);
  REQUIRE(r.sessions.size() == 1);
  REQUIRE(r.sessions[0].entries.size() == 2);
  CHECK(r.sessions[0].entries[0].response.canonical() ==
        "{\"err\":{\"code\":\"UndefinedVar\",\"message\":\"output variable 'response' "
        "undefined\"}}");
  // the agent observed the error response before failing (errors are resumable)
  REQUIRE(agent.observed_responses.size() == 1);
  CHECK(agent.observed_responses[0].find("UndefinedVar") != std::string::npos);
}

TEST_CASE("an agent that binds the output after the first finalize error succeeds") {
  StepAgent agent({Effect::ret(WireValue::null()),
                   Effect::assign("response", WireValue::str("ok")),
                   Effect::ret(WireValue::null())});
  RunResult r = run_with(R"(
let query = "q";
natural """handle <query> and save a <:response>""";
print(response)
)", agent);
  REQUIRE(r.ok());
  CHECK(r.stdout_text == "ok\n");
}

TEST_CASE("budget: the (max+1)-th attempted effect fails with exit code 4") {
  std::vector<Effect> steps;
  for (int i = 0; i < 10; ++i) steps.push_back(Effect::lookup("query"));
  StepAgent agent(std::move(steps));
  RunConfig cfg;
  cfg.max_effects = 3;
  RunResult r = run_with(R"(
let query = "q";
natural """loop forever over <query> with <:response>"""
)", agent, cfg);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error->cls == RunErrorClass::Budget);
  CHECK(r.exit_code() == 4);
  CHECK(r.error->message.find("effect 4") != std::string::npos);
  CHECK(r.effect_count == 3);
  REQUIRE(r.sessions.size() == 1);
  CHECK(r.sessions[0].entries.size() == 3);  // trace carries the three handled effects
}

TEST_CASE("a block completing in exactly max_effects steps is fine") {
  StepAgent agent({Effect::lookup("query"), Effect::ret(WireValue::null())});
  RunConfig cfg;
  cfg.max_effects = 2;
  RunResult r = run_with("let query = \"q\";\nnatural \"\"\"peek <query>\"\"\"", agent, cfg);
  CHECK(r.ok());
  CHECK(r.effect_count == 2);
}

TEST_CASE("a sleeping agent trips the wall clock timeout") {
  struct SleepyAgent : Agent {
    AgentStep next(const AgentContext&) override {
      std::this_thread::sleep_for(std::chrono::milliseconds(1200));
      return AgentStep{Effect::ret(WireValue::null())};
    }
    std::string identity_digest() const override { return "sleepy"; }
  } agent;
  RunConfig cfg;
  cfg.timeout_s = 1.0;
  RunResult r = run_with("natural \"\"\"nap\"\"\"", agent, cfg);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error->cls == RunErrorClass::Timeout);
  CHECK(r.exit_code() == 5);
}

TEST_CASE("exit code mapping is total") {
  CHECK(exit_code_for(RunErrorClass::Parse) == 2);
  CHECK(exit_code_for(RunErrorClass::Runtime) == 3);
  CHECK(exit_code_for(RunErrorClass::Budget) == 4);
  CHECK(exit_code_for(RunErrorClass::Timeout) == 5);
  CHECK(exit_code_for(RunErrorClass::Agent) == 6);
}

TEST_CASE("blocks in expression position take the reified return payload") {
  StepAgent agent({Effect::ret(WireValue::integer(41))});
  RunResult r = run_with("let v = natural \"\"\"compute\"\"\" in v + 1", agent);
  REQUIRE(r.ok());
  CHECK(r.value == Value::integer(42));
}

TEST_CASE("unbound inputs fail before any agent step") {
  StepAgent agent({Effect::ret(WireValue::null())});
  RunResult r = run_with("natural \"\"\"uses <ghost>\"\"\"", agent);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error->cls == RunErrorClass::Runtime);
  CHECK(r.agent_invocations == 0);
}

TEST_CASE("nested natural blocks via eval are rejected, session survives") {
  StepAgent agent({Effect::shared_eval("(natural \"\"\"inner\"\"\")"),
                   Effect::ret(WireValue::null())});
  RunResult r = run_with("natural \"\"\"outer\"\"\"", agent);
  REQUIRE(r.ok());  // Err was resumable; agent then returned
  REQUIRE(r.sessions.size() == 1);
  CHECK(r.sessions[0].entries[0].response.is_err());
  CHECK(r.sessions[0].entries[0].response.err.code == ErrCode::EvalError);
}

TEST_CASE("scratch bindings vanish, outputs persist") {
  StepAgent agent({Effect::assign("nj__thought", WireValue::str("plan")),
                   Effect::assign("response", WireValue::str("done")),
                   Effect::ret(WireValue::null())});
  RunResult r = run_with(R"(
let query = "q";
natural """work on <query> giving <:response>""";
print(response)
)", agent);
  REQUIRE(r.ok());
  CHECK(r.stdout_text == "done\n");
  bool thought_leaked = false;
  for (const auto& [k, v] : r.globals.slots) thought_leaked |= (k == "nj__thought");
  CHECK_FALSE(thought_leaked);
}

TEST_CASE("isolated mode leaves the state triple untouched") {
  StepAgent agent({Effect::ret(WireValue::str("summary"))});
  Program p = parse_program(R"(
let data = [1, 2, 3];
let note = natural """summarize""" in print(note)
)");
  Io io;
  RunConfig cfg;
  cfg.mode = HandlerMode::Isolated;
  Interpreter interp(p, agent, io, cfg);
  RunResult r = interp.run();
  REQUIRE(r.ok());
  CHECK(r.stdout_text == "summary\n");
}

TEST_CASE("isolated mode rejects every effect but still resumes") {
  StepAgent agent({Effect::assign("response", WireValue::str("x")),
                   Effect::ret(WireValue::null())});
  RunConfig cfg;
  cfg.mode = HandlerMode::Isolated;
  RunResult r = run_with("natural \"\"\"try to write\"\"\"", agent, cfg);
  REQUIRE(r.ok());
  REQUIRE(r.sessions.size() == 1);
  CHECK(r.sessions[0].entries[0].response.is_err());
  CHECK(r.sessions[0].entries[0].response.err.code == ErrCode::TypeError);
}
