#include "njr/effect.hpp"

namespace njr {

const char* effect_kind_name(EffectKind kind) {
  switch (kind) {
    case EffectKind::Lookup: return "Lookup";
    case EffectKind::Assign: return "Assign";
    case EffectKind::Deref: return "Deref";
    case EffectKind::Ref: return "Ref";
    case EffectKind::Set: return "Set";
    case EffectKind::Goto: return "Goto";
    case EffectKind::Call: return "Call";
    case EffectKind::SharedEval: return "SharedEval";
    case EffectKind::Return: return "Return";
  }
  return "?";
}

Effect Effect::lookup(std::string var) {
  Effect e;
  e.kind = EffectKind::Lookup;
  e.name = std::move(var);
  return e;
}

Effect Effect::assign(std::string var, WireValue w) {
  Effect e;
  e.kind = EffectKind::Assign;
  e.name = std::move(var);
  e.value = std::move(w);
  return e;
}

Effect Effect::deref(std::uint64_t ref_id) {
  Effect e;
  e.kind = EffectKind::Deref;
  e.ref = ref_id;
  return e;
}

Effect Effect::make_ref(WireValue w) {
  Effect e;
  e.kind = EffectKind::Ref;
  e.value = std::move(w);
  return e;
}

Effect Effect::set(std::uint64_t ref_id, WireValue w) {
  Effect e;
  e.kind = EffectKind::Set;
  e.ref = ref_id;
  e.value = std::move(w);
  return e;
}

Effect Effect::goto_label(std::string label, std::optional<WireValue> payload) {
  Effect e;
  e.kind = EffectKind::Goto;
  e.name = std::move(label);
  e.value = std::move(payload);
  return e;
}

Effect Effect::call(std::string tool, WireValue w) {
  Effect e;
  e.kind = EffectKind::Call;
  e.name = std::move(tool);
  e.value = std::move(w);
  return e;
}

Effect Effect::shared_eval(std::string src) {
  Effect e;
  e.kind = EffectKind::SharedEval;
  e.expr = std::move(src);
  return e;
}

Effect Effect::ret(WireValue w) {
  Effect e;
  e.kind = EffectKind::Return;
  e.value = std::move(w);
  return e;
}

njson Effect::to_json() const {
  njson j;
  j["kind"] = effect_kind_name(kind);
  switch (kind) {
    case EffectKind::Lookup:
      j["var"] = name;
      break;
    case EffectKind::Assign:
      j["var"] = name;
      j["value"] = value->to_json();
      break;
    case EffectKind::Deref:
      j["ref"] = njson{{"$ref", *ref}};
      break;
    case EffectKind::Ref:
      j["value"] = value->to_json();
      break;
    case EffectKind::Set:
      j["ref"] = njson{{"$ref", *ref}};
      j["value"] = value->to_json();
      break;
    case EffectKind::Goto:
      j["label"] = name;
      if (value) j["value"] = value->to_json();
      break;
    case EffectKind::Call:
      j["tool"] = name;
      j["value"] = value->to_json();
      break;
    case EffectKind::SharedEval:
      j["expr"] = expr;
      break;
    case EffectKind::Return:
      j["value"] = value ? value->to_json() : njson(nullptr);
      break;
  }
  return j;
}

namespace {

[[noreturn]] void malformed(const njson& j) {
  throw EffectFailure(ErrCode::TypeError, "malformed effect: " + j.dump());
}

std::uint64_t ref_field(const njson& j) {
  if (!j.contains("ref") || !j["ref"].is_object() || !j["ref"].contains("$ref")) malformed(j);
  const auto& r = j["ref"]["$ref"];
  if (!r.is_number_integer() || r.get<std::int64_t>() < 0) malformed(j);
  return r.get<std::uint64_t>();
}

}  // namespace

Effect Effect::from_json(const njson& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) malformed(j);
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "Lookup") {
    if (!j.contains("var") || !j["var"].is_string()) malformed(j);
    return Effect::lookup(j["var"].get<std::string>());
  }
  if (kind == "Assign") {
    if (!j.contains("var") || !j["var"].is_string() || !j.contains("value")) malformed(j);
    return Effect::assign(j["var"].get<std::string>(), WireValue::from_json(j["value"]));
  }
  if (kind == "Deref") return Effect::deref(ref_field(j));
  if (kind == "Ref") {
    if (!j.contains("value")) malformed(j);
    return Effect::make_ref(WireValue::from_json(j["value"]));
  }
  if (kind == "Set") {
    if (!j.contains("value")) malformed(j);
    return Effect::set(ref_field(j), WireValue::from_json(j["value"]));
  }
  if (kind == "Goto") {
    if (!j.contains("label") || !j["label"].is_string()) malformed(j);
    std::optional<WireValue> payload;
    if (j.contains("value")) payload = WireValue::from_json(j["value"]);
    return Effect::goto_label(j["label"].get<std::string>(), std::move(payload));
  }
  if (kind == "Call") {
    if (!j.contains("tool") || !j["tool"].is_string() || !j.contains("value")) malformed(j);
    return Effect::call(j["tool"].get<std::string>(), WireValue::from_json(j["value"]));
  }
  if (kind == "SharedEval") {
    if (!j.contains("expr") || !j["expr"].is_string()) malformed(j);
    return Effect::shared_eval(j["expr"].get<std::string>());
  }
  if (kind == "Return") {
    WireValue w = j.contains("value") ? WireValue::from_json(j["value"]) : WireValue::null();
    return Effect::ret(std::move(w));
  }
  malformed(j);
}

EffectResponse EffectResponse::make_ok(WireValue w) {
  EffectResponse r;
  r.tag = Tag::Ok;
  r.ok = std::move(w);
  return r;
}

EffectResponse EffectResponse::make_err(ErrCode code, std::string message) {
  EffectResponse r;
  r.tag = Tag::Err;
  r.err = EffectErr{code, std::move(message)};
  return r;
}

EffectResponse EffectResponse::make_control(std::string label, std::optional<WireValue> payload) {
  EffectResponse r;
  r.tag = Tag::Control;
  r.label = std::move(label);
  r.payload = std::move(payload);
  return r;
}

njson EffectResponse::to_json() const {
  njson j;
  switch (tag) {
    case Tag::Ok:
      j["ok"] = ok.to_json();
      break;
    case Tag::Err: {
      njson e;
      e["code"] = err_code_name(err.code);
      e["message"] = err.message;
      j["err"] = e;
      break;
    }
    case Tag::Control: {
      njson c;
      c["label"] = label;
      if (payload) c["value"] = payload->to_json();
      j["control"] = c;
      break;
    }
  }
  return j;
}

EffectResponse EffectResponse::from_json(const njson& j) {
  if (j.is_object() && j.contains("ok")) {
    return make_ok(WireValue::from_json(j["ok"]));
  }
  if (j.is_object() && j.contains("err")) {
    const auto& e = j["err"];
    if (e.is_object() && e.contains("code") && e.contains("message")) {
      return make_err(err_code_from_name(e["code"].get<std::string>()),
                      e["message"].get<std::string>());
    }
  }
  if (j.is_object() && j.contains("control")) {
    const auto& c = j["control"];
    if (c.is_object() && c.contains("label")) {
      std::optional<WireValue> payload;
      if (c.contains("value")) payload = WireValue::from_json(c["value"]);
      return make_control(c["label"].get<std::string>(), std::move(payload));
    }
  }
  throw EffectFailure(ErrCode::TypeError, "malformed response: " + j.dump());
}

bool EffectResponse::operator==(const EffectResponse& other) const {
  if (tag != other.tag) return false;
  switch (tag) {
    case Tag::Ok: return ok == other.ok;
    case Tag::Err: return err.code == other.err.code && err.message == other.err.message;
    case Tag::Control: return label == other.label && payload == other.payload;
  }
  return false;
}

njson TraceEntry::to_json() const {
  njson j;
  j["effect"] = effect.to_json();
  j["response"] = response.to_json();
  return j;
}

TraceEntry TraceEntry::from_json(const njson& j) {
  if (!j.is_object() || !j.contains("effect") || !j.contains("response")) {
    throw EffectFailure(ErrCode::TypeError, "malformed trace entry: " + j.dump());
  }
  return TraceEntry{Effect::from_json(j["effect"]), EffectResponse::from_json(j["response"])};
}

}  // namespace njr
