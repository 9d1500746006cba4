#include "njr/llm_agent.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "njr/digest.hpp"

namespace njr {

namespace {

const char* kDefaultSystemPrompt =
    "You execute natural-language instructions embedded in a host program.\n"
    "Interact with the program state only through the provided tools.\n"
    "Input variables are readable with lookup; output variables must be assigned "
    "before finishing. Mutable data lives on a shared heap behind numeric "
    "references ({\"$ref\": N}); deref reads through a reference, set writes one, "
    "ref allocates one. Values in tool arguments are tagged objects: {\"int\": n}, "
    "{\"float\": x}, {\"string\": s}, {\"bool\": b}, null, {\"$ref\": n} or "
    "{\"$label\": l}.\n"
    "Finish with done. Use goto only when the instructions say to break, continue, "
    "return or raise and the condition for it is met; goto does not resume your "
    "execution. Use as few tool calls as possible.";

njson tool_def(const char* name, const char* description, njson parameters) {
  njson fn;
  fn["name"] = name;
  fn["description"] = description;
  fn["parameters"] = std::move(parameters);
  njson t;
  t["type"] = "function";
  t["function"] = std::move(fn);
  return t;
}

njson object_schema(std::initializer_list<std::pair<const char*, const char*>> props,
                    std::initializer_list<const char*> required) {
  njson properties = njson::object();
  for (const auto& [name, type] : props) {
    if (std::string(type) == "any") {
      properties[name] = njson::object();
    } else {
      properties[name] = njson{{"type", type}};
    }
  }
  njson j;
  j["type"] = "object";
  j["properties"] = std::move(properties);
  njson req = njson::array();
  for (const char* r : required) req.push_back(r);
  j["required"] = std::move(req);
  return j;
}

njson tool_definitions(const AgentContext& ctx) {
  njson tools = njson::array();
  if (ctx.mode == "tools") {
    tools.push_back(tool_def("call", "Call a registered host tool.",
                             object_schema({{"tool", "string"}, {"value", "any"}}, {"tool"})));
  } else if (ctx.mode == "shared") {
    tools.push_back(tool_def("lookup", "Read an input variable from the shared scopes.",
                             object_schema({{"var", "string"}}, {"var"})));
    tools.push_back(tool_def("assign", "Bind a variable in the current scope.",
                             object_schema({{"var", "string"}, {"value", "any"}}, {"var"})));
    tools.push_back(tool_def("deref", "Read the value behind a heap reference.",
                             object_schema({{"ref", "integer"}}, {"ref"})));
    tools.push_back(tool_def("ref", "Allocate a fresh heap cell holding a value.",
                             object_schema({{"value", "any"}}, {})));
    tools.push_back(tool_def("set", "Overwrite the cell behind a heap reference.",
                             object_schema({{"ref", "integer"}, {"value", "any"}}, {"ref"})));
    tools.push_back(tool_def("eval", "Evaluate a host-language expression over the shared state.",
                             object_schema({{"expr", "string"}}, {"expr"})));
    tools.push_back(tool_def("goto", "Jump to a program label; ends your execution.",
                             object_schema({{"label", "string"}, {"value", "any"}}, {"label"})));
  }
  tools.push_back(tool_def("done", "Finish executing the instructions.",
                           object_schema({{"value", "any"}}, {})));
  return tools;
}

std::string render_user_message(const AgentContext& ctx) {
  std::string msg = "Instructions:\n" + ctx.block_text + "\n";
  if (!ctx.eager_vars.empty()) {
    msg += "\nInput variables:\n";
    for (const auto& ev : ctx.eager_vars) {
      msg += fmt::format("  {} [type: {}]: {}", ev.name, ev.type, ev.value.canonical());
      if (!ev.preview.empty()) msg += fmt::format(" ({})", ev.preview);
      msg += "\n";
    }
  }
  if (!ctx.labels.empty()) {
    msg += "\nJumpable labels:";
    for (const auto& l : ctx.labels) msg += " " + l;
    msg += "\n";
  }
  if (!ctx.tools.empty()) {
    msg += "\nRegistered tools:\n";
    for (const auto& [name, desc] : ctx.tools) msg += fmt::format("  {}: {}\n", name, desc);
  }
  return msg;
}

std::optional<WireValue> arg_value(const njson& args, const char* key) {
  if (!args.contains(key) || args[key].is_null()) return std::nullopt;
  return WireValue::from_json(args[key]);
}

}  // namespace

struct LlmAgent::Impl {
  httplib::Client client;
  explicit Impl(const std::string& base_url) : client(base_url) {
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(120, 0);
  }
};

LlmConfig LlmConfig::from_env() {
  LlmConfig cfg;
  if (const char* url = std::getenv("NJR_LLM_BASE_URL")) cfg.base_url = url;
  if (const char* key = std::getenv("NJR_LLM_API_KEY")) cfg.api_key = key;
  if (const char* file = std::getenv("NJR_LLM_SYSTEM_PROMPT_FILE")) {
    std::ifstream in(file);
    if (!in) throw AgentFailure(std::string("cannot open system prompt file: ") + file);
    std::ostringstream buf;
    buf << in.rdbuf();
    cfg.system_prompt = buf.str();
  }
  return cfg;
}

LlmAgent::LlmAgent(LlmConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    throw AgentFailure("llm agent needs a base url (NJR_LLM_BASE_URL)");
  }
  if (config_.system_prompt.empty()) config_.system_prompt = kDefaultSystemPrompt;
  impl_ = std::make_unique<Impl>(config_.base_url);
}

LlmAgent::~LlmAgent() = default;

std::string LlmAgent::identity_digest() const {
  return sha256_hex(config_.system_prompt + "\x00" + config_.model);
}

njson LlmAgent::effect_to_tool_call(const Effect& e) {
  njson args = njson::object();
  std::string name;
  switch (e.kind) {
    case EffectKind::Lookup:
      name = "lookup";
      args["var"] = e.name;
      break;
    case EffectKind::Assign:
      name = "assign";
      args["var"] = e.name;
      args["value"] = e.value->to_json();
      break;
    case EffectKind::Deref:
      name = "deref";
      args["ref"] = *e.ref;
      break;
    case EffectKind::Ref:
      name = "ref";
      args["value"] = e.value->to_json();
      break;
    case EffectKind::Set:
      name = "set";
      args["ref"] = *e.ref;
      args["value"] = e.value->to_json();
      break;
    case EffectKind::Goto:
      name = "goto";
      args["label"] = e.name;
      if (e.value) args["value"] = e.value->to_json();
      break;
    case EffectKind::Call:
      name = "call";
      args["tool"] = e.name;
      args["value"] = e.value->to_json();
      break;
    case EffectKind::SharedEval:
      name = "eval";
      args["expr"] = e.expr;
      break;
    case EffectKind::Return:
      name = "done";
      if (e.value && !e.value->is_null()) args["value"] = e.value->to_json();
      break;
  }
  njson call;
  call["name"] = name;
  call["arguments"] = args.dump();
  return call;
}

Effect LlmAgent::tool_call_to_effect(const std::string& name, const njson& args) {
  if (name == "lookup") return Effect::lookup(args.at("var").get<std::string>());
  if (name == "assign") {
    WireValue w = args.contains("value") ? WireValue::from_json(args["value"]) : WireValue::null();
    return Effect::assign(args.at("var").get<std::string>(), std::move(w));
  }
  if (name == "deref") return Effect::deref(args.at("ref").get<std::uint64_t>());
  if (name == "ref") {
    WireValue w = args.contains("value") ? WireValue::from_json(args["value"]) : WireValue::null();
    return Effect::make_ref(std::move(w));
  }
  if (name == "set") {
    return Effect::set(args.at("ref").get<std::uint64_t>(), WireValue::from_json(args.at("value")));
  }
  if (name == "goto") {
    return Effect::goto_label(args.at("label").get<std::string>(), arg_value(args, "value"));
  }
  if (name == "call") {
    WireValue w = args.contains("value") ? WireValue::from_json(args["value"]) : WireValue::null();
    return Effect::call(args.at("tool").get<std::string>(), std::move(w));
  }
  if (name == "eval") return Effect::shared_eval(args.at("expr").get<std::string>());
  if (name == "done") {
    WireValue w = args.contains("value") ? WireValue::from_json(args["value"]) : WireValue::null();
    return Effect::ret(std::move(w));
  }
  throw EffectFailure(ErrCode::TypeError, fmt::format("unknown tool '{}'", name));
}

njson LlmAgent::build_request(const AgentContext& ctx) const {
  njson messages = njson::array();
  messages.push_back(njson{{"role", "system"}, {"content", config_.system_prompt}});
  messages.push_back(njson{{"role", "user"}, {"content", render_user_message(ctx)}});
  if (ctx.history) {
    int call_id = 0;
    for (const auto& entry : *ctx.history) {
      const std::string id = fmt::format("call_{}", call_id++);
      njson tc;
      tc["id"] = id;
      tc["type"] = "function";
      tc["function"] = effect_to_tool_call(entry.effect);
      njson assistant;
      assistant["role"] = "assistant";
      assistant["tool_calls"] = njson::array({tc});
      messages.push_back(std::move(assistant));
      njson tool_msg;
      tool_msg["role"] = "tool";
      tool_msg["tool_call_id"] = id;
      tool_msg["content"] = entry.response.canonical();
      messages.push_back(std::move(tool_msg));
    }
  }
  njson req;
  req["model"] = config_.model;
  req["messages"] = std::move(messages);
  req["tools"] = tool_definitions(ctx);
  return req;
}

AgentStep LlmAgent::next(const AgentContext& ctx) {
  njson request = build_request(ctx);
  int malformed = 0;
  while (true) {
    httplib::Result res;
    int attempt = 0;
    double backoff = config_.backoff_s;
    while (true) {
      ++attempt;
      httplib::Headers headers;
      if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
      }
      res = impl_->client.Post("/v1/chat/completions", headers, request.dump(),
                               "application/json");
      if (res && res->status < 500) break;
      if (attempt >= config_.max_attempts) {
        throw AgentFailure(fmt::format("llm transport failed after {} attempts: {}", attempt,
                                       res ? fmt::format("HTTP {}", res->status)
                                           : httplib::to_string(res.error())));
      }
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2;
    }
    if (res->status != 200) {
      throw AgentFailure(fmt::format("llm endpoint returned HTTP {}: {}", res->status, res->body));
    }

    std::string tool_name;
    njson args;
    try {
      njson body = njson::parse(res->body);
      const njson& message = body.at("choices").at(0).at("message");
      if (!message.contains("tool_calls") || message["tool_calls"].empty()) {
        throw EffectFailure(ErrCode::TypeError, "model reply carried no tool call");
      }
      const njson& fn = message["tool_calls"][0].at("function");
      tool_name = fn.at("name").get<std::string>();
      const njson& raw_args = fn.at("arguments");
      args = raw_args.is_string() ? njson::parse(raw_args.get<std::string>()) : raw_args;
      Effect effect = tool_call_to_effect(tool_name, args);
      // Structural safety: the step must parse into the mode's vocabulary.
      return AgentStep{std::move(effect)};
    } catch (const std::exception& e) {
      if (++malformed >= config_.max_malformed) {
        throw AgentFailure(
            fmt::format("malformed model output after {} attempts: {}", malformed, e.what()));
      }
      // Re-prompt with a format error note.
      njson note;
      note["role"] = "user";
      note["content"] = fmt::format(
          "Format error: {}. Reply with exactly one valid tool call.", e.what());
      request["messages"].push_back(std::move(note));
    }
  }
}

}  // namespace njr
