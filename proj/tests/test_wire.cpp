#include <doctest.h>

#include <random>

#include "njr/effect.hpp"
#include "njr/wire.hpp"

using namespace njr;

namespace {

Value random_immutable(std::mt19937_64& rng) {
  switch (rng() % 6) {
    case 0: return Value::unit();
    case 1: return Value::boolean(rng() % 2 == 0);
    case 2: return Value::integer(static_cast<std::int64_t>(rng()));
    case 3: {
      switch (rng() % 8) {
        case 0: return Value::real(0.0);
        case 1: return Value::real(-0.0);
        case 2: return Value::real(std::numeric_limits<double>::infinity());
        case 3: return Value::real(1e-300);
        default: {
          std::uniform_real_distribution<double> d(-1e6, 1e6);
          return Value::real(d(rng));
        }
      }
    }
    case 4: {
      std::string s;
      const int n = static_cast<int>(rng() % 12);
      for (int i = 0; i < n; ++i) s += static_cast<char>('a' + rng() % 26);
      if (rng() % 4 == 0) s += "\"\\\n";
      return Value::str(std::move(s));
    }
    default: return Value::label(rng() % 2 ? "break" : "exit");
  }
}

WireValue random_wire(std::mt19937_64& rng, const Heap& heap) {
  switch (rng() % 7) {
    case 0: return WireValue::null();
    case 1: return WireValue::boolean(rng() % 2 == 0);
    case 2: return WireValue::integer(static_cast<std::int64_t>(rng()));
    case 3: {
      std::uniform_real_distribution<double> d(-1e9, 1e9);
      return WireValue::real(d(rng));
    }
    case 4: return WireValue::str("s" + std::to_string(rng() % 1000));
    case 5: return WireValue::label("continue");
    default:
      return WireValue::ref(heap.size() ? rng() % heap.size() : 0);
  }
}

}  // namespace

TEST_CASE("serialization examples") {
  Heap heap;
  CHECK(serialize_value(Value::integer(3), heap) == WireValue::integer(3));
  CHECK(serialize_value(Value::str("Exit, please."), heap) == WireValue::str("Exit, please."));
  RecordVal rec;
  rec.set("k", Value::integer(1));
  for (int i = 0; i < 7; ++i) heap.alloc(HeapCell{Value::unit()});
  Address a{7};
  heap.alloc(HeapCell{rec});
  CHECK(serialize_value(Value::addr(a.id), heap) == WireValue::ref(7));
}

TEST_CASE("reification examples") {
  Heap heap;
  CHECK(reify(WireValue::real(2.0), heap) == Value::real(2.0));
  heap.alloc(HeapCell{Value::integer(0)});
  CHECK(reify(WireValue::ref(0), heap) == Value::addr(0));
  CHECK_THROWS_AS(reify(WireValue::ref(999), heap), EffectFailure);
  try {
    reify(WireValue::ref(999), heap);
  } catch (const EffectFailure& f) {
    CHECK(f.err.code == ErrCode::DanglingRef);
  }
}

TEST_CASE("round trips: immutables and well-formed wire values (10k cases)") {
  std::mt19937_64 rng(20250810);
  Heap heap;
  for (int i = 0; i < 32; ++i) heap.alloc(HeapCell{Value::integer(i)});
  for (int i = 0; i < 10000; ++i) {
    Value v = random_immutable(rng);
    Value back = reify(serialize_value(v, heap), heap);
    CHECK(back == v);
  }
  for (int i = 0; i < 10000; ++i) {
    WireValue w = random_wire(rng, heap);
    WireValue back = serialize_value(reify(w, heap), heap);
    // canonical-byte equality (NaN-free generator, so direct compare works too)
    CHECK(back.canonical() == w.canonical());
  }
}

TEST_CASE("non-finite floats stay total through the wire encoding") {
  Heap heap;
  const double inf = std::numeric_limits<double>::infinity();
  WireValue w = serialize_value(Value::real(inf), heap);
  CHECK(w.canonical() == "{\"float\":\"inf\"}");
  CHECK(reify(w, heap) == Value::real(inf));
  WireValue nan_w = serialize_value(Value::real(std::nan("")), heap);
  CHECK(nan_w.canonical() == "{\"float\":\"nan\"}");
  Value back = reify(nan_w, heap);
  CHECK(std::isnan(back.as_float()));
}

TEST_CASE("canonical wire encoding matches the documented shapes") {
  CHECK(WireValue::null().canonical() == "null");
  CHECK(WireValue::boolean(true).canonical() == "{\"bool\":true}");
  CHECK(WireValue::integer(7).canonical() == "{\"int\":7}");
  CHECK(WireValue::real(2.0).canonical() == "{\"float\":2.0}");
  CHECK(WireValue::str("Exit, please.").canonical() == "{\"string\":\"Exit, please.\"}");
  CHECK(WireValue::ref(7).canonical() == "{\"$ref\":7}");
  CHECK(WireValue::label("break").canonical() == "{\"$label\":\"break\"}");
}

TEST_CASE("effect wire encoding is canonical and parses back") {
  Effect lookup = Effect::lookup("query");
  CHECK(lookup.canonical() == "{\"kind\":\"Lookup\",\"var\":\"query\"}");
  Effect set = Effect::set(7, WireValue::integer(5));
  CHECK(set.canonical() == "{\"kind\":\"Set\",\"ref\":{\"$ref\":7},\"value\":{\"int\":5}}");
  Effect go = Effect::goto_label("break");
  CHECK(go.canonical() == "{\"kind\":\"Goto\",\"label\":\"break\"}");

  for (const Effect& e :
       {Effect::lookup("x"), Effect::assign("y", WireValue::str("v")), Effect::deref(3),
        Effect::make_ref(WireValue::boolean(false)), Effect::set(1, WireValue::null()),
        Effect::goto_label("return", WireValue::integer(7)), Effect::call("add", WireValue::ref(0)),
        Effect::shared_eval("(1+2+3)/3"), Effect::ret(WireValue::null())}) {
    Effect back = Effect::from_json(e.to_json());
    CHECK(back == e);
    CHECK(back.canonical() == e.canonical());
  }
}

TEST_CASE("response wire encoding matches the documented shape") {
  EffectResponse ok = EffectResponse::make_ok(WireValue::str("Exit, please."));
  CHECK(ok.canonical() == "{\"ok\":{\"string\":\"Exit, please.\"}}");
  EffectResponse err = EffectResponse::make_err(ErrCode::ForbiddenVar, "nope");
  CHECK(err.canonical() == "{\"err\":{\"code\":\"ForbiddenVar\",\"message\":\"nope\"}}");
  EffectResponse ctl = EffectResponse::make_control("break", std::nullopt);
  CHECK(ctl.canonical() == "{\"control\":{\"label\":\"break\"}}");
  for (const EffectResponse& r : {ok, err, ctl}) {
    CHECK(EffectResponse::from_json(r.to_json()) == r);
  }
}

TEST_CASE("malformed wire values and effects are rejected") {
  CHECK_THROWS_AS(WireValue::from_json(njson::parse("{\"int\":1,\"bool\":true}")), EffectFailure);
  CHECK_THROWS_AS(WireValue::from_json(njson::parse("{\"what\":1}")), EffectFailure);
  CHECK_THROWS_AS(Effect::from_json(njson::parse("{\"kind\":\"Nope\"}")), EffectFailure);
  CHECK_THROWS_AS(Effect::from_json(njson::parse("{\"kind\":\"Set\",\"ref\":3}")), EffectFailure);
}
