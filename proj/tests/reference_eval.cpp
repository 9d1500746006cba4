#include "reference_eval.hpp"

#include <fmt/format.h>

#include <cmath>
#include <variant>

namespace njr::testing {

namespace {

struct Outcome {
  enum class Tag { Val, Jump, Err, Raise };
  Tag tag = Tag::Val;
  Value v;
  std::uint64_t jump_token = 0;
  std::optional<Value> payload;
  std::string error;

  static Outcome val(Value value) {
    Outcome o;
    o.v = std::move(value);
    return o;
  }
  static Outcome jump(std::uint64_t token, std::optional<Value> payload) {
    Outcome o;
    o.tag = Tag::Jump;
    o.jump_token = token;
    o.payload = std::move(payload);
    return o;
  }
  static Outcome err(std::string message) {
    Outcome o;
    o.tag = Tag::Err;
    o.error = std::move(message);
    return o;
  }
  static Outcome raise(std::optional<Value> payload) {
    Outcome o;
    o.tag = Tag::Raise;
    o.payload = std::move(payload);
    return o;
  }
  bool is_val() const { return tag == Tag::Val; }
};

struct ActiveLabel {
  std::string name;
  LabelKind kind;
  std::uint64_t token;
  std::size_t scope_size;
};

struct Ctx {
  const Program* program;
  std::vector<std::map<std::string, Value>> scopes;
  std::vector<bool> barriers;
  std::map<std::uint64_t, HeapCell> heap;
  std::uint64_t next_addr = 0;
  std::vector<ActiveLabel> labels;
  std::uint64_t next_token = 1;
  std::string out;
  std::vector<std::string> input;
  std::size_t input_idx = 0;

  Address alloc(HeapCell cell) {
    heap.emplace(next_addr, std::move(cell));
    return Address{next_addr++};
  }
  const Value* lookup(const std::string& name) const {
    for (std::size_t i = scopes.size(); i-- > 0;) {
      auto it = scopes[i].find(name);
      if (it != scopes[i].end()) return &it->second;
      if (barriers[i] && i > 0) {
        auto g = scopes[0].find(name);
        return g != scopes[0].end() ? &g->second : nullptr;
      }
    }
    return nullptr;
  }
  void truncate_scopes(std::size_t n) {
    while (scopes.size() > n) {
      scopes.pop_back();
      barriers.pop_back();
    }
  }
};

Outcome eval(const Expr& e, Ctx& ctx);

bool numeric(const Value& v) { return v.is_int() || v.is_float(); }
double dbl(const Value& v) { return v.is_int() ? static_cast<double>(v.as_int()) : v.as_float(); }

std::string render(const Value& v, const Ctx& ctx, bool quoted,
                   std::vector<std::uint64_t> trail = {});

std::string render_cell(const HeapCell& cell, std::uint64_t id, const Ctx& ctx,
                        std::vector<std::uint64_t> trail) {
  for (std::uint64_t t : trail) {
    if (t == id) return "...";
  }
  trail.push_back(id);
  if (const auto* v = std::get_if<Value>(&cell)) {
    if (v->is_addr()) return render(*v, ctx, true, trail);
    return "ref(" + render(*v, ctx, true, trail) + ")";
  }
  std::string out;
  if (const auto* list = std::get_if<ListVal>(&cell)) {
    out = "[";
    for (std::size_t i = 0; i < list->size(); ++i) {
      if (i) out += ", ";
      out += render((*list)[i], ctx, true, trail);
    }
    out += "]";
    return out;
  }
  const auto& rec = std::get<RecordVal>(cell);
  out = "{";
  for (std::size_t i = 0; i < rec.fields.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + escape_string(rec.fields[i].first) + "\": " +
           render(rec.fields[i].second, ctx, true, trail);
  }
  out += "}";
  return out;
}

std::string render(const Value& v, const Ctx& ctx, bool quoted, std::vector<std::uint64_t> trail) {
  if (v.is_addr()) {
    auto it = ctx.heap.find(v.as_addr().id);
    if (it == ctx.heap.end()) return fmt::format("ref#{} (dangling)", v.as_addr().id);
    return render_cell(it->second, v.as_addr().id, ctx, std::move(trail));
  }
  return render_scalar(v, quoted);
}

Outcome eval_seq(const std::vector<ExprPtr>& items, Ctx& ctx) {
  Value last = Value::unit();
  for (const auto& item : items) {
    Outcome o = eval(*item, ctx);
    if (!o.is_val()) return o;
    last = std::move(o.v);
  }
  return Outcome::val(std::move(last));
}

Outcome eval_binop(const BinOp& node, Ctx& ctx) {
  const BinOpKind op = node.op;
  if (op == BinOpKind::And || op == BinOpKind::Or) {
    Outcome l = eval(*node.lhs, ctx);
    if (!l.is_val()) return l;
    if (!l.v.is_bool()) return Outcome::err("bool expected");
    if (op == BinOpKind::And && !l.v.as_bool()) return Outcome::val(Value::boolean(false));
    if (op == BinOpKind::Or && l.v.as_bool()) return Outcome::val(Value::boolean(true));
    Outcome r = eval(*node.rhs, ctx);
    if (!r.is_val()) return r;
    if (!r.v.is_bool()) return Outcome::err("bool expected");
    return r;
  }
  Outcome lo = eval(*node.lhs, ctx);
  if (!lo.is_val()) return lo;
  Outcome ro = eval(*node.rhs, ctx);
  if (!ro.is_val()) return ro;
  const Value& l = lo.v;
  const Value& r = ro.v;
  switch (op) {
    case BinOpKind::Eq: return Outcome::val(Value::boolean(semantic_equals(l, r)));
    case BinOpKind::Ne: return Outcome::val(Value::boolean(!semantic_equals(l, r)));
    case BinOpKind::Lt:
    case BinOpKind::Le:
    case BinOpKind::Gt:
    case BinOpKind::Ge: {
      int c;
      if (l.is_int() && r.is_int()) {
        c = l.as_int() < r.as_int() ? -1 : (l.as_int() > r.as_int() ? 1 : 0);
      } else if (numeric(l) && numeric(r)) {
        c = dbl(l) < dbl(r) ? -1 : (dbl(l) > dbl(r) ? 1 : 0);
      } else if (l.is_str() && r.is_str()) {
        int raw = l.as_str().compare(r.as_str());
        c = raw < 0 ? -1 : (raw > 0 ? 1 : 0);
      } else {
        return Outcome::err("cannot compare");
      }
      bool res = op == BinOpKind::Lt   ? c < 0
                 : op == BinOpKind::Le ? c <= 0
                 : op == BinOpKind::Gt ? c > 0
                                       : c >= 0;
      return Outcome::val(Value::boolean(res));
    }
    case BinOpKind::Add:
      if (l.is_int() && r.is_int()) {
        std::int64_t out;
        if (__builtin_add_overflow(l.as_int(), r.as_int(), &out)) {
          return Outcome::err("integer overflow");
        }
        return Outcome::val(Value::integer(out));
      }
      if (numeric(l) && numeric(r)) return Outcome::val(Value::real(dbl(l) + dbl(r)));
      if (l.is_str() && r.is_str()) return Outcome::val(Value::str(l.as_str() + r.as_str()));
      return Outcome::err("cannot add");
    case BinOpKind::Sub:
    case BinOpKind::Mul:
      if (l.is_int() && r.is_int()) {
        std::int64_t out;
        bool bad = op == BinOpKind::Sub
                       ? __builtin_sub_overflow(l.as_int(), r.as_int(), &out)
                       : __builtin_mul_overflow(l.as_int(), r.as_int(), &out);
        if (bad) return Outcome::err("integer overflow");
        return Outcome::val(Value::integer(out));
      }
      if (numeric(l) && numeric(r)) {
        return Outcome::val(
            Value::real(op == BinOpKind::Sub ? dbl(l) - dbl(r) : dbl(l) * dbl(r)));
      }
      return Outcome::err("bad operands");
    case BinOpKind::Div: {
      if (!numeric(l) || !numeric(r)) return Outcome::err("bad operands");
      if (dbl(r) == 0.0) return Outcome::err("division by zero");
      return Outcome::val(Value::real(dbl(l) / dbl(r)));
    }
    case BinOpKind::Mod: {
      if (!l.is_int() || !r.is_int()) return Outcome::err("bad operands");
      std::int64_t b = r.as_int();
      if (b == 0) return Outcome::err("modulo by zero");
      if (b == -1) return Outcome::val(Value::integer(0));
      std::int64_t m = l.as_int() % b;
      if (m != 0 && ((m < 0) != (b < 0))) m += b;
      return Outcome::val(Value::integer(m));
    }
    default: return Outcome::err("unhandled op");
  }
}

Outcome call_fn(const FnDef& fn, std::vector<Value> args, Ctx& ctx) {
  const std::size_t entry_scopes = ctx.scopes.size();
  ctx.scopes.emplace_back();
  ctx.barriers.push_back(true);
  for (std::size_t i = 0; i < fn.params.size(); ++i) {
    ctx.scopes.back()[fn.params[i]] = std::move(args[i]);
  }
  const std::uint64_t token = ctx.next_token++;
  ctx.labels.push_back({"return", LabelKind::FnReturn, token, ctx.scopes.size()});
  Outcome o = eval(*fn.body, ctx);
  // pop our label (inner ones are popped by their own sites)
  while (!ctx.labels.empty() && ctx.labels.back().token != token) ctx.labels.pop_back();
  if (!ctx.labels.empty()) ctx.labels.pop_back();
  ctx.truncate_scopes(entry_scopes);
  if (o.tag == Outcome::Tag::Jump && o.jump_token == token) {
    return Outcome::val(o.payload.value_or(Value::unit()));
  }
  return o;
}

Outcome eval_call(const Call& node, Ctx& ctx) {
  std::vector<Value> args;
  for (const auto& arg : node.args) {
    Outcome o = eval(*arg, ctx);
    if (!o.is_val()) return o;
    args.push_back(std::move(o.v));
  }
  if (const FnDef* fn = ctx.program->find_function(node.callee)) {
    return call_fn(*fn, std::move(args), ctx);
  }
  const std::string& name = node.callee;
  if (name == "print") {
    ctx.out += render(args[0], ctx, false) + "\n";
    return Outcome::val(Value::unit());
  }
  if (name == "input") {
    ctx.out += render(args[0], ctx, false);
    if (ctx.input_idx >= ctx.input.size()) return Outcome::err("end of input");
    std::string line = ctx.input[ctx.input_idx++];
    ctx.out += line + "\n";
    return Outcome::val(Value::str(std::move(line)));
  }
  if (name == "str") return Outcome::val(Value::str(render(args[0], ctx, false)));
  if (name == "len") {
    const Value& v = args[0];
    if (v.is_str()) return Outcome::val(Value::integer(static_cast<std::int64_t>(v.as_str().size())));
    if (v.is_addr()) {
      auto it = ctx.heap.find(v.as_addr().id);
      if (it == ctx.heap.end()) return Outcome::err("dangling");
      if (const auto* list = std::get_if<ListVal>(&it->second)) {
        return Outcome::val(Value::integer(static_cast<std::int64_t>(list->size())));
      }
      if (const auto* rec = std::get_if<RecordVal>(&it->second)) {
        return Outcome::val(Value::integer(static_cast<std::int64_t>(rec->fields.size())));
      }
      return Outcome::err("len of cell");
    }
    return Outcome::err("len");
  }
  if (name == "not") {
    if (!args[0].is_bool()) return Outcome::err("not: bool expected");
    return Outcome::val(Value::boolean(!args[0].as_bool()));
  }
  return Outcome::err("unknown function " + name);
}

Outcome eval(const Expr& e, Ctx& ctx) {
  return std::visit(
      [&](const auto& node) -> Outcome {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Lit>) {
          return Outcome::val(node.v);
        } else if constexpr (std::is_same_v<T, Var>) {
          const Value* v = ctx.lookup(node.name);
          if (!v) return Outcome::err("unbound variable " + node.name);
          return Outcome::val(*v);
        } else if constexpr (std::is_same_v<T, LetIn>) {
          Outcome v = eval(*node.value, ctx);
          if (!v.is_val()) return v;
          const std::size_t entry_scopes = ctx.scopes.size();
          ctx.scopes.emplace_back();
          ctx.barriers.push_back(false);
          ctx.scopes.back()[node.name] = std::move(v.v);
          Outcome body = eval(*node.body, ctx);
          ctx.truncate_scopes(entry_scopes);
          return body;
        } else if constexpr (std::is_same_v<T, Bind>) {
          Outcome v = eval(*node.value, ctx);
          if (!v.is_val()) return v;
          ctx.scopes.back()[node.name] = std::move(v.v);
          return Outcome::val(Value::unit());
        } else if constexpr (std::is_same_v<T, Seq>) {
          return eval_seq(node.items, ctx);
        } else if constexpr (std::is_same_v<T, If>) {
          Outcome c = eval(*node.cond, ctx);
          if (!c.is_val()) return c;
          if (!c.v.is_bool()) return Outcome::err("if: bool expected");
          if (c.v.as_bool()) return eval(*node.then_branch, ctx);
          if (node.else_branch) return eval(*node.else_branch, ctx);
          return Outcome::val(Value::unit());
        } else if constexpr (std::is_same_v<T, While>) {
          const std::size_t entry_scopes = ctx.scopes.size();
          const std::uint64_t tb = ctx.next_token++;
          ctx.labels.push_back({"break", LabelKind::LoopBreak, tb, entry_scopes});
          Outcome result = Outcome::val(Value::unit());
          while (true) {
            Outcome c = eval(*node.cond, ctx);
            if (!c.is_val()) {
              result = std::move(c);
              break;
            }
            if (!c.v.is_bool()) {
              result = Outcome::err("while: bool expected");
              break;
            }
            if (!c.v.as_bool()) break;
            const std::uint64_t tc = ctx.next_token++;
            ctx.labels.push_back({"continue", LabelKind::LoopContinue, tc, entry_scopes});
            Outcome body = eval(*node.body, ctx);
            while (!ctx.labels.empty() && ctx.labels.back().token != tc) ctx.labels.pop_back();
            if (!ctx.labels.empty()) ctx.labels.pop_back();
            if (!body.is_val()) {
              if (body.tag == Outcome::Tag::Jump && body.jump_token == tc) {
                ctx.truncate_scopes(entry_scopes);
                continue;
              }
              result = std::move(body);
              break;
            }
          }
          while (!ctx.labels.empty() && ctx.labels.back().token != tb) ctx.labels.pop_back();
          if (!ctx.labels.empty()) ctx.labels.pop_back();
          if (result.tag == Outcome::Tag::Jump && result.jump_token == tb) {
            ctx.truncate_scopes(entry_scopes);
            return Outcome::val(Value::unit());
          }
          return result;
        } else if constexpr (std::is_same_v<T, BinOp>) {
          return eval_binop(node, ctx);
        } else if constexpr (std::is_same_v<T, RefExpr>) {
          Outcome v = eval(*node.value, ctx);
          if (!v.is_val()) return v;
          return Outcome::val(Value::addr(ctx.alloc(HeapCell{std::move(v.v)}).id));
        } else if constexpr (std::is_same_v<T, DerefExpr>) {
          Outcome t = eval(*node.target, ctx);
          if (!t.is_val()) return t;
          if (!t.v.is_addr()) return Outcome::err("deref: not a ref");
          auto it = ctx.heap.find(t.v.as_addr().id);
          if (it == ctx.heap.end()) return Outcome::err("dangling");
          if (const auto* v = std::get_if<Value>(&it->second)) return Outcome::val(*v);
          return Outcome::err("deref of composite");
        } else if constexpr (std::is_same_v<T, SetRef>) {
          Outcome t = eval(*node.target, ctx);
          if (!t.is_val()) return t;
          Outcome v = eval(*node.value, ctx);
          if (!v.is_val()) return v;
          if (!t.v.is_addr()) return Outcome::err("setref: not a ref");
          auto it = ctx.heap.find(t.v.as_addr().id);
          if (it == ctx.heap.end()) return Outcome::err("dangling");
          it->second = HeapCell{std::move(v.v)};
          return Outcome::val(Value::unit());
        } else if constexpr (std::is_same_v<T, LabelExpr>) {
          const std::uint64_t token = ctx.next_token++;
          const std::size_t scope_size = ctx.scopes.size();
          ctx.labels.push_back({node.name, LabelKind::User, token, scope_size});
          Outcome o = eval(*node.body, ctx);
          while (!ctx.labels.empty() && ctx.labels.back().token != token) ctx.labels.pop_back();
          if (!ctx.labels.empty()) ctx.labels.pop_back();
          if (o.tag == Outcome::Tag::Jump && o.jump_token == token) {
            ctx.truncate_scopes(scope_size);
            return Outcome::val(o.payload.value_or(Value::unit()));
          }
          return o;
        } else if constexpr (std::is_same_v<T, GotoExpr>) {
          std::optional<Value> payload;
          if (node.payload) {
            Outcome p = eval(*node.payload, ctx);
            if (!p.is_val()) return p;
            payload = std::move(p.v);
          }
          for (std::size_t i = ctx.labels.size(); i-- > 0;) {
            if (ctx.labels[i].name != node.label) continue;
            const LabelKind kind = ctx.labels[i].kind;
            if ((kind == LabelKind::LoopBreak || kind == LabelKind::LoopContinue) && payload) {
              return Outcome::err("label takes no payload");
            }
            return Outcome::jump(ctx.labels[i].token, std::move(payload));
          }
          if (node.label == "raise") return Outcome::raise(std::move(payload));
          return Outcome::err("label not active");
        } else if constexpr (std::is_same_v<T, Call>) {
          return eval_call(node, ctx);
        } else if constexpr (std::is_same_v<T, Index>) {
          Outcome t = eval(*node.target, ctx);
          if (!t.is_val()) return t;
          Outcome k = eval(*node.key, ctx);
          if (!k.is_val()) return k;
          if (!t.v.is_addr()) return Outcome::err("index: not a ref");
          auto it = ctx.heap.find(t.v.as_addr().id);
          if (it == ctx.heap.end()) return Outcome::err("dangling");
          if (const auto* list = std::get_if<ListVal>(&it->second)) {
            if (!k.v.is_int()) return Outcome::err("index: int expected");
            std::int64_t i = k.v.as_int();
            if (i < 0 || i >= static_cast<std::int64_t>(list->size())) {
              return Outcome::err("index out of range");
            }
            return Outcome::val((*list)[static_cast<std::size_t>(i)]);
          }
          if (const auto* rec = std::get_if<RecordVal>(&it->second)) {
            if (!k.v.is_str()) return Outcome::err("index: str expected");
            const Value* v = rec->find(k.v.as_str());
            if (!v) return Outcome::err("key not found");
            return Outcome::val(*v);
          }
          return Outcome::err("index of cell");
        } else if constexpr (std::is_same_v<T, ListLit>) {
          ListVal items;
          for (const auto& item : node.items) {
            Outcome o = eval(*item, ctx);
            if (!o.is_val()) return o;
            items.push_back(std::move(o.v));
          }
          return Outcome::val(Value::addr(ctx.alloc(HeapCell{std::move(items)}).id));
        } else if constexpr (std::is_same_v<T, RecordLit>) {
          RecordVal rec;
          for (const auto& [key, vexpr] : node.fields) {
            Outcome o = eval(*vexpr, ctx);
            if (!o.is_val()) return o;
            rec.set(key, std::move(o.v));
          }
          return Outcome::val(Value::addr(ctx.alloc(HeapCell{std::move(rec)}).id));
        } else {
          static_assert(std::is_same_v<T, NaturalExpr>);
          return Outcome::err("reference evaluator does not run natural blocks");
        }
      },
      e.node);
}

}  // namespace

RefResult reference_run(const Program& program, std::vector<std::string> stdin_lines) {
  Ctx ctx;
  ctx.program = &program;
  ctx.scopes.emplace_back();
  ctx.barriers.push_back(false);
  ctx.input = std::move(stdin_lines);

  Outcome o = eval(*program.main, ctx);
  RefResult res;
  res.stdout_text = ctx.out;
  res.heap = std::move(ctx.heap);
  for (const auto& [k, v] : ctx.scopes[0]) res.globals.emplace(k, v);
  if (o.is_val()) {
    res.value = std::move(o.v);
  } else {
    res.error = RunErrorClass::Runtime;
  }
  return res;
}

}  // namespace njr::testing
