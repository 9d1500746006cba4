#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "njr/errors.hpp"
#include "njr/wire.hpp"

namespace njr {

// The request vocabulary of the natural function interface. Return is the
// terminal request that exits the handler.
enum class EffectKind { Lookup, Assign, Deref, Ref, Set, Goto, Call, SharedEval, Return };

const char* effect_kind_name(EffectKind kind);

struct Effect {
  EffectKind kind = EffectKind::Return;
  std::string name;                  // variable (Lookup/Assign), label (Goto), tool (Call)
  std::optional<WireValue> value;    // Assign/Ref/Set/Call/Return payload, Goto payload
  std::optional<std::uint64_t> ref;  // Deref/Set target address
  std::string expr;                  // SharedEval source text

  static Effect lookup(std::string var);
  static Effect assign(std::string var, WireValue w);
  static Effect deref(std::uint64_t ref_id);
  static Effect make_ref(WireValue w);
  static Effect set(std::uint64_t ref_id, WireValue w);
  static Effect goto_label(std::string label, std::optional<WireValue> payload = std::nullopt);
  static Effect call(std::string tool, WireValue w);
  static Effect shared_eval(std::string src);
  static Effect ret(WireValue w);

  bool is_terminal() const { return kind == EffectKind::Return; }

  njson to_json() const;
  std::string canonical() const { return to_json().dump(); }
  static Effect from_json(const njson& j);  // throws EffectFailure(TypeError)
  bool operator==(const Effect&) const = default;
};

// Outcome of handling one effect. Ok and Err resume the session; Control is
// the non-resumable outcome of a valid Goto (and the accepted Return is
// recorded as Ok(null)).
struct EffectResponse {
  enum class Tag { Ok, Err, Control };
  Tag tag = Tag::Ok;
  WireValue ok;                      // Tag::Ok
  EffectErr err{ErrCode::TypeError, ""};  // Tag::Err
  std::string label;                 // Tag::Control
  std::optional<WireValue> payload;  // Tag::Control

  static EffectResponse make_ok(WireValue w);
  static EffectResponse make_err(ErrCode code, std::string message);
  static EffectResponse make_control(std::string label, std::optional<WireValue> payload);

  bool is_ok() const { return tag == Tag::Ok; }
  bool is_err() const { return tag == Tag::Err; }
  bool is_control() const { return tag == Tag::Control; }

  njson to_json() const;
  std::string canonical() const { return to_json().dump(); }
  static EffectResponse from_json(const njson& j);
  bool operator==(const EffectResponse&) const;
};

// One step of a session trace: an effect and the handler's response, both in
// canonical wire encoding.
struct TraceEntry {
  Effect effect;
  EffectResponse response;

  njson to_json() const;
  std::string canonical() const { return to_json().dump(); }
  static TraceEntry from_json(const njson& j);
};

}  // namespace njr
