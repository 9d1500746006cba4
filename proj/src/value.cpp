#include "njr/value.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace njr {

const char* label_kind_name(LabelKind kind) {
  switch (kind) {
    case LabelKind::User: return "user";
    case LabelKind::LoopBreak: return "break";
    case LabelKind::LoopContinue: return "continue";
    case LabelKind::FnReturn: return "return";
  }
  return "?";
}

bool semantic_equals(const Value& a, const Value& b) {
  if ((a.is_int() || a.is_float()) && (b.is_int() || b.is_float())) {
    if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
    double x = a.is_int() ? static_cast<double>(a.as_int()) : a.as_float();
    double y = b.is_int() ? static_cast<double>(b.as_int()) : b.as_float();
    return x == y;
  }
  return a == b;
}

const char* value_type_name(const Value& v) {
  switch (v.v.index()) {
    case 0: return "Unit";
    case 1: return "Bool";
    case 2: return "Int";
    case 3: return "Float";
    case 4: return "Str";
    case 5: return "Label";
    case 6: return "Ref";
  }
  return "?";
}

const Value* RecordVal::find(std::string_view key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return &v;
  }
  return nullptr;
}

void RecordVal::set(std::string key, Value v) {
  for (auto& [k, existing] : fields) {
    if (k == key) {
      existing = std::move(v);
      return;
    }
  }
  fields.emplace_back(std::move(key), std::move(v));
}

Address Heap::alloc(HeapCell cell) {
  Address a{cells_.size()};
  cells_.push_back(std::move(cell));
  return a;
}

const HeapCell* Heap::get(Address a) const {
  if (!live(a)) return nullptr;
  return &cells_[a.id];
}

HeapCell* Heap::get_mut(Address a) {
  if (!live(a)) return nullptr;
  return &cells_[a.id];
}

bool Heap::set(Address a, HeapCell cell) {
  if (!live(a)) return false;
  cells_[a.id] = std::move(cell);
  return true;
}

std::string escape_string(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

namespace {

std::string render_float(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  std::string s = fmt::format("{}", d);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

void render_value(const Value& v, const Heap& heap, bool quote_strings,
                  std::unordered_set<std::uint64_t>& visiting, std::string& out);

void render_cell(const HeapCell& cell, std::uint64_t id, const Heap& heap,
                 std::unordered_set<std::uint64_t>& visiting, std::string& out) {
  if (visiting.contains(id)) {
    out += "...";
    return;
  }
  visiting.insert(id);
  if (const auto* val = std::get_if<Value>(&cell)) {
    if (val->is_addr()) {
      // alias chain: look through to the target
      render_value(*val, heap, true, visiting, out);
    } else {
      out += "ref(";
      render_value(*val, heap, true, visiting, out);
      out += ")";
    }
  } else if (const auto* list = std::get_if<ListVal>(&cell)) {
    out += "[";
    for (std::size_t i = 0; i < list->size(); ++i) {
      if (i > 0) out += ", ";
      render_value((*list)[i], heap, true, visiting, out);
    }
    out += "]";
  } else {
    const auto& rec = std::get<RecordVal>(cell);
    out += "{";
    for (std::size_t i = 0; i < rec.fields.size(); ++i) {
      if (i > 0) out += ", ";
      out += "\"" + escape_string(rec.fields[i].first) + "\": ";
      render_value(rec.fields[i].second, heap, true, visiting, out);
    }
    out += "}";
  }
  visiting.erase(id);
}

void render_value(const Value& v, const Heap& heap, bool quote_strings,
                  std::unordered_set<std::uint64_t>& visiting, std::string& out) {
  if (v.is_addr()) {
    Address a = v.as_addr();
    if (const HeapCell* cell = heap.get(a)) {
      render_cell(*cell, a.id, heap, visiting, out);
    } else {
      out += fmt::format("ref#{} (dangling)", a.id);
    }
    return;
  }
  out += render_scalar(v, quote_strings);
}

}  // namespace

std::string render_scalar(const Value& v, bool quote_strings) {
  if (v.is_unit()) return "()";
  if (v.is_bool()) return v.as_bool() ? "true" : "false";
  if (v.is_int()) return fmt::format("{}", v.as_int());
  if (v.is_float()) return render_float(v.as_float());
  if (v.is_str()) {
    if (quote_strings) return "\"" + escape_string(v.as_str()) + "\"";
    return v.as_str();
  }
  if (v.is_label()) return fmt::format("<label {}>", v.as_label().name);
  return fmt::format("ref#{}", v.as_addr().id);
}

std::string render_deep(const Value& v, const Heap& heap) {
  std::unordered_set<std::uint64_t> visiting;
  std::string out;
  render_value(v, heap, false, visiting, out);
  return out;
}

std::string render_cell_shallow(const HeapCell& cell, const Heap& heap) {
  (void)heap;
  if (const auto* val = std::get_if<Value>(&cell)) {
    return render_scalar(*val, true);
  }
  std::string out;
  if (const auto* list = std::get_if<ListVal>(&cell)) {
    out += "[";
    for (std::size_t i = 0; i < list->size(); ++i) {
      if (i > 0) out += ", ";
      out += render_scalar((*list)[i], true);
    }
    out += "]";
  } else {
    const auto& rec = std::get<RecordVal>(cell);
    out += "{";
    for (std::size_t i = 0; i < rec.fields.size(); ++i) {
      if (i > 0) out += ", ";
      out += "\"" + escape_string(rec.fields[i].first) + "\": ";
      out += render_scalar(rec.fields[i].second, true);
    }
    out += "}";
  }
  return out;
}

std::string preview_cell(const HeapCell& cell) {
  if (std::holds_alternative<Value>(cell)) return "cell";
  if (const auto* list = std::get_if<ListVal>(&cell)) {
    return fmt::format("length: {}", list->size());
  }
  const auto& rec = std::get<RecordVal>(cell);
  std::vector<std::string> names;
  names.reserve(rec.fields.size());
  for (const auto& [k, v] : rec.fields) names.push_back(k);
  std::sort(names.begin(), names.end());
  std::string out = "fields:";
  for (const auto& n : names) out += " " + n;
  return out;
}

}  // namespace njr
