#include "njr/wire.hpp"

#include <fmt/format.h>

#include <cmath>

namespace njr {

njson WireValue::to_json() const {
  return std::visit(
      [](const auto& x) -> njson {
        using T = std::decay_t<decltype(x)>;
        njson j;
        if constexpr (std::is_same_v<T, Null>) {
          j = nullptr;
        } else if constexpr (std::is_same_v<T, bool>) {
          j["bool"] = x;
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          j["int"] = x;
        } else if constexpr (std::is_same_v<T, double>) {
          if (std::isnan(x)) {
            j["float"] = "nan";
          } else if (std::isinf(x)) {
            j["float"] = x > 0 ? "inf" : "-inf";
          } else {
            j["float"] = x;
          }
        } else if constexpr (std::is_same_v<T, std::string>) {
          j["string"] = x;
        } else if constexpr (std::is_same_v<T, LabelTag>) {
          j["$label"] = x.name;
        } else {
          j["$ref"] = x.id;
        }
        return j;
      },
      v);
}

WireValue WireValue::from_json(const njson& j) {
  if (j.is_null()) return WireValue::null();
  if (!j.is_object() || j.size() != 1) {
    throw EffectFailure(ErrCode::TypeError, "malformed wire value: " + j.dump());
  }
  const auto it = j.begin();
  const std::string& key = it.key();
  const njson& val = it.value();
  if (key == "bool" && val.is_boolean()) return WireValue::boolean(val.get<bool>());
  if (key == "int" && val.is_number_integer()) return WireValue::integer(val.get<std::int64_t>());
  if (key == "float") {
    if (val.is_number()) return WireValue::real(val.get<double>());
    if (val.is_string()) {
      const std::string s = val.get<std::string>();
      if (s == "nan") return WireValue::real(std::nan(""));
      if (s == "inf") return WireValue::real(std::numeric_limits<double>::infinity());
      if (s == "-inf") return WireValue::real(-std::numeric_limits<double>::infinity());
    }
  }
  if (key == "string" && val.is_string()) return WireValue::str(val.get<std::string>());
  if (key == "$label" && val.is_string()) return WireValue::label(val.get<std::string>());
  if (key == "$ref" && val.is_number_unsigned()) return WireValue::ref(val.get<std::uint64_t>());
  if (key == "$ref" && val.is_number_integer() && val.get<std::int64_t>() >= 0) {
    return WireValue::ref(static_cast<std::uint64_t>(val.get<std::int64_t>()));
  }
  throw EffectFailure(ErrCode::TypeError, "malformed wire value: " + j.dump());
}

WireValue serialize_value(const Value& v, const Heap& heap) {
  (void)heap;
  return std::visit(
      [](const auto& x) -> WireValue {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Unit>) {
          return WireValue::null();
        } else if constexpr (std::is_same_v<T, bool>) {
          return WireValue::boolean(x);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return WireValue::integer(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return WireValue::real(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return WireValue::str(x);
        } else if constexpr (std::is_same_v<T, LabelVal>) {
          return WireValue::label(x.name);
        } else {
          return WireValue::ref(x.id);
        }
      },
      v.v);
}

Value reify(const WireValue& w, const Heap& heap) {
  return std::visit(
      [&](const auto& x) -> Value {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, WireValue::Null>) {
          return Value::unit();
        } else if constexpr (std::is_same_v<T, bool>) {
          return Value::boolean(x);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return Value::integer(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return Value::real(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return Value::str(x);
        } else if constexpr (std::is_same_v<T, WireValue::LabelTag>) {
          return Value::label(x.name);
        } else {
          if (!heap.live(Address{x.id})) {
            throw EffectFailure(ErrCode::DanglingRef,
                                fmt::format("reference {} is not live", x.id));
          }
          return Value::addr(x.id);
        }
      },
      w.v);
}

}  // namespace njr
