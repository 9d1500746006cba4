#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <variant>

#include "njr/errors.hpp"
#include "njr/value.hpp"

namespace njr {

using njson = nlohmann::ordered_json;

// The values that cross the natural/formal boundary: immutables plus tagged
// references and labels. Composites never cross; they appear as RefTags.
struct WireValue {
  struct Null {
    bool operator==(const Null&) const = default;
  };
  struct LabelTag {
    std::string name;
    bool operator==(const LabelTag&) const = default;
  };
  struct RefTag {
    std::uint64_t id = 0;
    bool operator==(const RefTag&) const = default;
  };

  using Repr = std::variant<Null, bool, std::int64_t, double, std::string, LabelTag, RefTag>;
  Repr v;

  WireValue() : v(Null{}) {}
  WireValue(Repr r) : v(std::move(r)) {}

  static WireValue null() { return WireValue{Null{}}; }
  static WireValue boolean(bool b) { return WireValue{Repr{b}}; }
  static WireValue integer(std::int64_t n) { return WireValue{Repr{n}}; }
  static WireValue real(double d) { return WireValue{Repr{d}}; }
  static WireValue str(std::string s) { return WireValue{Repr{std::move(s)}}; }
  static WireValue label(std::string name) { return WireValue{Repr{LabelTag{std::move(name)}}}; }
  static WireValue ref(std::uint64_t id) { return WireValue{Repr{RefTag{id}}}; }

  bool is_null() const { return std::holds_alternative<Null>(v); }
  bool is_ref() const { return std::holds_alternative<RefTag>(v); }
  bool is_label() const { return std::holds_alternative<LabelTag>(v); }
  bool is_string() const { return std::holds_alternative<std::string>(v); }

  bool operator==(const WireValue&) const = default;

  // Canonical JSON: null | {"bool":b} | {"int":n} | {"float":x} |
  // {"string":s} | {"$label":name} | {"$ref":id}. Non-finite floats are
  // encoded as {"float":"inf"|"-inf"|"nan"} so the encoding stays total.
  njson to_json() const;
  std::string canonical() const { return to_json().dump(); }
  static WireValue from_json(const njson& j);  // throws EffectFailure(TypeError)
};

// Serialization α: total on host values. Immutables map to their wire twins,
// addresses to RefTags, labels to LabelTags.
WireValue serialize_value(const Value& v, const Heap& heap);

// Reification γ: inverse of α on its image. RefTags are liveness-checked.
Value reify(const WireValue& w, const Heap& heap);  // throws EffectFailure(DanglingRef)

}  // namespace njr
