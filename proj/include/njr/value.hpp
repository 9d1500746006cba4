#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace njr {

struct Unit {
  bool operator==(const Unit&) const = default;
};

enum class LabelKind { User, LoopBreak, LoopContinue, FnReturn };

const char* label_kind_name(LabelKind kind);

// A label as a value names a label; the kind belongs to declaration sites.
struct LabelVal {
  std::string name;
  bool operator==(const LabelVal&) const = default;
};

struct Address {
  std::uint64_t id = 0;
  bool operator==(const Address&) const = default;
};

// Host runtime value. Composites (lists, records) live only in the heap and
// are reached through Address values.
struct Value {
  using Repr = std::variant<Unit, bool, std::int64_t, double, std::string, LabelVal, Address>;
  Repr v;

  Value() : v(Unit{}) {}
  Value(Repr r) : v(std::move(r)) {}

  static Value unit() { return Value{Unit{}}; }
  static Value boolean(bool b) { return Value{Repr{b}}; }
  static Value integer(std::int64_t n) { return Value{Repr{n}}; }
  static Value real(double d) { return Value{Repr{d}}; }
  static Value str(std::string s) { return Value{Repr{std::move(s)}}; }
  static Value label(std::string name) { return Value{Repr{LabelVal{std::move(name)}}}; }
  static Value addr(std::uint64_t id) { return Value{Repr{Address{id}}}; }

  bool is_unit() const { return std::holds_alternative<Unit>(v); }
  bool is_bool() const { return std::holds_alternative<bool>(v); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
  bool is_float() const { return std::holds_alternative<double>(v); }
  bool is_str() const { return std::holds_alternative<std::string>(v); }
  bool is_label() const { return std::holds_alternative<LabelVal>(v); }
  bool is_addr() const { return std::holds_alternative<Address>(v); }

  bool as_bool() const { return std::get<bool>(v); }
  std::int64_t as_int() const { return std::get<std::int64_t>(v); }
  double as_float() const { return std::get<double>(v); }
  const std::string& as_str() const { return std::get<std::string>(v); }
  const LabelVal& as_label() const { return std::get<LabelVal>(v); }
  Address as_addr() const { return std::get<Address>(v); }

  // Structural equality (used by tests and state digests).
  bool operator==(const Value&) const = default;
};

// Language-level equality: numbers compare across Int/Float, everything else
// by value within its type, addresses by identity.
bool semantic_equals(const Value& a, const Value& b);

const char* value_type_name(const Value& v);

using ListVal = std::vector<Value>;

// Ordered string-keyed map; insertion order is observable.
struct RecordVal {
  std::vector<std::pair<std::string, Value>> fields;

  const Value* find(std::string_view key) const;
  // Overwrites in place or appends.
  void set(std::string key, Value v);
  bool operator==(const RecordVal&) const = default;
};

using HeapCell = std::variant<Value, ListVal, RecordVal>;

// Append-only heap: addresses are dense, monotone, and never reused.
class Heap {
 public:
  Address alloc(HeapCell cell);
  bool live(Address a) const { return a.id < cells_.size(); }
  const HeapCell* get(Address a) const;
  HeapCell* get_mut(Address a);
  // False when the address is dangling; otherwise overwrites the cell.
  bool set(Address a, HeapCell cell);
  std::uint64_t size() const { return cells_.size(); }
  const std::vector<HeapCell>& cells() const { return cells_; }

 private:
  std::vector<HeapCell> cells_;
};

// Deep rendering used by print/str: follows addresses with cycle detection.
// Strings are unquoted at the top level and quoted inside composites.
std::string render_deep(const Value& v, const Heap& heap);
std::string render_scalar(const Value& v, bool quote_strings);

// One-level rendering of a heap cell: scalar elements rendered in full,
// addresses shown as ref#N tokens.
std::string render_cell_shallow(const HeapCell& cell, const Heap& heap);

// Short preview for eager variable loading: sorted field names for records,
// length for lists.
std::string preview_cell(const HeapCell& cell);

std::string escape_string(std::string_view s);

}  // namespace njr
