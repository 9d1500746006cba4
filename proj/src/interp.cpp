#include "njr/interp.hpp"

#include <fmt/format.h>

#include <cmath>
#include <ostream>

#include "njr/digest.hpp"
#include "njr/parser.hpp"
#include "njr/wire.hpp"

namespace njr {

std::string RunConfig::digest() const {
  njson j;
  j["mode"] = handler_mode_name(mode);
  j["max_effects"] = max_effects;
  j["timeout_s"] = timeout_s;
  j["eager"] = eager;
  j["shared_eval"] = shared_eval;
  j["max_malformed"] = max_malformed;
  j["max_finalize_retries"] = max_finalize_retries;
  return sha256_hex(j.dump());
}

void Io::write(std::string_view s) {
  transcript.append(s);
  if (live) {
    live->write(s.data(), static_cast<std::streamsize>(s.size()));
    live->flush();
  }
}

Io Io::from_lines(std::vector<std::string> lines) {
  auto data = std::make_shared<std::vector<std::string>>(std::move(lines));
  auto idx = std::make_shared<std::size_t>(0);
  Io io;
  io.read_line = [data, idx]() -> std::optional<std::string> {
    if (*idx >= data->size()) return std::nullopt;
    return (*data)[(*idx)++];
  };
  return io;
}

namespace {

struct EnvFrameGuard {
  Env& env;
  explicit EnvFrameGuard(Env& e, bool barrier = false) : env(e) { env.push_frame(barrier); }
  ~EnvFrameGuard() { env.pop_frame(); }
  EnvFrameGuard(const EnvFrameGuard&) = delete;
};

njson value_json(const Value& v) {
  if (v.is_unit()) return njson::array({"unit"});
  if (v.is_bool()) return njson::array({"bool", v.as_bool()});
  if (v.is_int()) return njson::array({"int", v.as_int()});
  if (v.is_float()) return njson::array({"float", v.as_float()});
  if (v.is_str()) return njson::array({"str", v.as_str()});
  if (v.is_label()) return njson::array({"label", v.as_label().name});
  return njson::array({"addr", v.as_addr().id});
}

njson cell_json(const HeapCell& cell) {
  if (const auto* v = std::get_if<Value>(&cell)) {
    return njson::array({"cell", value_json(*v)});
  }
  if (const auto* list = std::get_if<ListVal>(&cell)) {
    njson items = njson::array();
    for (const auto& v : *list) items.push_back(value_json(v));
    return njson::array({"list", items});
  }
  const auto& rec = std::get<RecordVal>(cell);
  njson fields = njson::array();
  for (const auto& [k, v] : rec.fields) fields.push_back(njson::array({k, value_json(v)}));
  return njson::array({"record", fields});
}

bool is_num(const Value& v) { return v.is_int() || v.is_float(); }

double to_double(const Value& v) {
  return v.is_int() ? static_cast<double>(v.as_int()) : v.as_float();
}

std::int64_t checked_int(BinOpKind op, std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  bool overflow = false;
  switch (op) {
    case BinOpKind::Add: overflow = __builtin_add_overflow(a, b, &out); break;
    case BinOpKind::Sub: overflow = __builtin_sub_overflow(a, b, &out); break;
    case BinOpKind::Mul: overflow = __builtin_mul_overflow(a, b, &out); break;
    default: break;
  }
  if (overflow) throw RuntimeFailure("integer overflow");
  return out;
}

}  // namespace

// Pushes an active label frame; pops it (and anything stacked above it) on
// scope exit, so unwinding keeps the control stack consistent.
struct ControlGuard {
  Interpreter& in;
  std::uint64_t fid;
  std::size_t env_depth;

  ControlGuard(Interpreter& interp, std::string name, LabelKind kind) : in(interp) {
    fid = in.next_frame_id_++;
    env_depth = in.env_.depth();
    in.control_.push_back({std::move(name), kind, fid, env_depth});
  }
  ~ControlGuard() {
    while (!in.control_.empty() && in.control_.back().frame_id != fid) in.control_.pop_back();
    if (!in.control_.empty()) in.control_.pop_back();
  }
  ControlGuard(const ControlGuard&) = delete;

  // True when the signal targets this frame; restores the scope stack to the
  // depth recorded at label entry.
  bool caught(const UnwindSignal& s) {
    if (s.target_frame_id != fid) return false;
    if (in.env_.depth() != env_depth) {
      ++in.depth_mismatches_;
      in.env_.truncate(env_depth);
    }
    return true;
  }
};

Interpreter::Interpreter(const Program& program, Agent& agent, Io& io, const RunConfig& config,
                         ToolRegistry* tools, TraceCache* cache)
    : program_(program),
      agent_(agent),
      io_(io),
      config_(config),
      tools_(tools),
      cache_(cache),
      program_hash_(program_hash(program)),
      config_digest_(config.digest()) {}

RunResult Interpreter::run() {
  RunResult res;
  const int inv0 = agent_.invocations;
  const auto t0 = std::chrono::steady_clock::now();
  deadline_ = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                       std::chrono::duration<double>(config_.timeout_s));
  try {
    ControlGuard raise_guard(*this, "raise", LabelKind::User);
    try {
      res.value = eval(*program_.main);
    } catch (UnwindSignal& s) {
      if (!raise_guard.caught(s)) throw RuntimeFailure("internal: unresolved control transfer");
      std::string rendered = s.payload ? render_deep(*s.payload, heap_) : "()";
      throw RuntimeFailure("raised: " + rendered);
    }
  } catch (const RuntimeFailure& e) {
    res.error = RunError{RunErrorClass::Runtime, e.what()};
  } catch (const BudgetExceeded& e) {
    res.error = RunError{RunErrorClass::Budget, e.what()};
  } catch (const TimeoutExpired& e) {
    res.error = RunError{RunErrorClass::Timeout, e.what()};
  } catch (const AgentFailure& e) {
    res.error = RunError{RunErrorClass::Agent, e.what()};
  } catch (const EffectFailure& e) {
    res.error = RunError{RunErrorClass::Runtime, e.what()};
  }
  res.stdout_text = io_.transcript;
  res.sessions = sessions_;
  res.effect_count = effect_total_;
  res.agent_invocations = agent_.invocations - inv0;
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.globals = env_.globals();
  res.heap = heap_;
  return res;
}

void Interpreter::check_timeout() {
  if (std::chrono::steady_clock::now() > deadline_) throw TimeoutExpired(config_.timeout_s);
}

std::string Interpreter::state_digest() const {
  njson frames = njson::array();
  for (const auto& frame : env_.frames()) {
    njson slots = njson::array();
    for (const auto& [k, v] : frame.slots) slots.push_back(njson::array({k, value_json(v)}));
    frames.push_back(njson::array({frame.barrier, slots}));
  }
  njson cells = njson::array();
  for (const auto& cell : heap_.cells()) cells.push_back(cell_json(cell));
  njson ctl = njson::array();
  for (const auto& f : control_) {
    ctl.push_back(njson::array({f.name, label_kind_name(f.kind), f.env_depth}));
  }
  njson j;
  j["env"] = frames;
  j["heap"] = cells;
  j["control"] = ctl;
  return sha256_hex(j.dump());
}

void Interpreter::unwind_to_label(const std::string& name, std::optional<Value> payload) {
  for (std::size_t i = control_.size(); i-- > control_barrier_;) {
    if (control_[i].name != name) continue;
    LabelKind kind = control_[i].kind;
    if ((kind == LabelKind::LoopBreak || kind == LabelKind::LoopContinue) && payload) {
      throw RuntimeFailure(fmt::format("label '{}' takes no payload", name));
    }
    throw UnwindSignal{control_[i].frame_id, std::move(payload)};
  }
  throw RuntimeFailure(fmt::format("label '{}' is not active", name));
}

Value Interpreter::eval(const Expr& e) {
  return std::visit(
      [&](const auto& node) -> Value {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Lit>) {
          return node.v;
        } else if constexpr (std::is_same_v<T, Var>) {
          if (const Value* v = env_.lookup(node.name)) return *v;
          throw RuntimeFailure(fmt::format("unbound variable '{}'", node.name));
        } else if constexpr (std::is_same_v<T, LetIn>) {
          Value v = eval(*node.value);
          EnvFrameGuard frame(env_);
          env_.bind(node.name, std::move(v));
          return eval(*node.body);
        } else if constexpr (std::is_same_v<T, Bind>) {
          Value v = eval(*node.value);
          env_.bind(node.name, std::move(v));
          return Value::unit();
        } else if constexpr (std::is_same_v<T, Seq>) {
          Value v = Value::unit();
          for (const auto& item : node.items) v = eval(*item);
          return v;
        } else if constexpr (std::is_same_v<T, If>) {
          Value c = eval(*node.cond);
          if (!c.is_bool()) {
            throw RuntimeFailure(
                fmt::format("if condition must be Bool, got {}", value_type_name(c)));
          }
          if (c.as_bool()) return eval(*node.then_branch);
          if (node.else_branch) return eval(*node.else_branch);
          return Value::unit();
        } else if constexpr (std::is_same_v<T, While>) {
          return eval_while(node);
        } else if constexpr (std::is_same_v<T, BinOp>) {
          return eval_binop(node, e);
        } else if constexpr (std::is_same_v<T, RefExpr>) {
          Value v = eval(*node.value);
          return Value::addr(heap_.alloc(HeapCell{std::move(v)}).id);
        } else if constexpr (std::is_same_v<T, DerefExpr>) {
          Value t = eval(*node.target);
          if (!t.is_addr()) {
            throw RuntimeFailure(fmt::format("cannot deref {}", value_type_name(t)));
          }
          const HeapCell* cell = heap_.get(t.as_addr());
          if (!cell) {
            throw RuntimeFailure(fmt::format("dangling reference {}", t.as_addr().id));
          }
          if (const auto* v = std::get_if<Value>(cell)) return *v;
          throw RuntimeFailure("cannot deref a composite cell; index it instead");
        } else if constexpr (std::is_same_v<T, SetRef>) {
          Value t = eval(*node.target);
          Value v = eval(*node.value);
          if (!t.is_addr()) {
            throw RuntimeFailure(
                fmt::format("left side of := must be a reference, got {}", value_type_name(t)));
          }
          if (!heap_.set(t.as_addr(), HeapCell{std::move(v)})) {
            throw RuntimeFailure(fmt::format("dangling reference {}", t.as_addr().id));
          }
          return Value::unit();
        } else if constexpr (std::is_same_v<T, LabelExpr>) {
          ControlGuard guard(*this, node.name, LabelKind::User);
          try {
            return eval(*node.body);
          } catch (UnwindSignal& s) {
            if (!guard.caught(s)) throw;
            return s.payload.value_or(Value::unit());
          }
        } else if constexpr (std::is_same_v<T, GotoExpr>) {
          std::optional<Value> payload;
          if (node.payload) payload = eval(*node.payload);
          unwind_to_label(node.label, std::move(payload));
        } else if constexpr (std::is_same_v<T, Call>) {
          return eval_call(node, e);
        } else if constexpr (std::is_same_v<T, Index>) {
          Value t = eval(*node.target);
          Value key = eval(*node.key);
          if (!t.is_addr()) {
            throw RuntimeFailure(fmt::format("cannot index {}", value_type_name(t)));
          }
          const HeapCell* cell = heap_.get(t.as_addr());
          if (!cell) {
            throw RuntimeFailure(fmt::format("dangling reference {}", t.as_addr().id));
          }
          if (const auto* list = std::get_if<ListVal>(cell)) {
            if (!key.is_int()) {
              throw RuntimeFailure(
                  fmt::format("list index must be Int, got {}", value_type_name(key)));
            }
            std::int64_t i = key.as_int();
            if (i < 0 || i >= static_cast<std::int64_t>(list->size())) {
              throw RuntimeFailure(fmt::format("index {} out of range", i));
            }
            return (*list)[static_cast<std::size_t>(i)];
          }
          if (const auto* rec = std::get_if<RecordVal>(cell)) {
            if (!key.is_str()) {
              throw RuntimeFailure(
                  fmt::format("record key must be Str, got {}", value_type_name(key)));
            }
            if (const Value* v = rec->find(key.as_str())) return *v;
            throw RuntimeFailure(fmt::format("key not found: '{}'", key.as_str()));
          }
          throw RuntimeFailure("cannot index a plain reference cell");
        } else if constexpr (std::is_same_v<T, ListLit>) {
          ListVal items;
          items.reserve(node.items.size());
          for (const auto& item : node.items) items.push_back(eval(*item));
          return Value::addr(heap_.alloc(HeapCell{std::move(items)}).id);
        } else if constexpr (std::is_same_v<T, RecordLit>) {
          RecordVal rec;
          for (const auto& [k, vexpr] : node.fields) rec.set(k, eval(*vexpr));
          return Value::addr(heap_.alloc(HeapCell{std::move(rec)}).id);
        } else {
          static_assert(std::is_same_v<T, NaturalExpr>);
          return eval_natural(node);
        }
      },
      e.node);
}

Value Interpreter::eval_while(const While& node) {
  ControlGuard brk(*this, "break", LabelKind::LoopBreak);
  try {
    while (true) {
      check_timeout();
      Value c = eval(*node.cond);
      if (!c.is_bool()) {
        throw RuntimeFailure(
            fmt::format("while condition must be Bool, got {}", value_type_name(c)));
      }
      if (!c.as_bool()) break;
      ControlGuard cont(*this, "continue", LabelKind::LoopContinue);
      try {
        eval(*node.body);
      } catch (UnwindSignal& s) {
        if (!cont.caught(s)) throw;
      }
    }
  } catch (UnwindSignal& s) {
    if (!brk.caught(s)) throw;
  }
  return Value::unit();
}

Value Interpreter::eval_binop(const BinOp& node, const Expr& e) {
  (void)e;
  const BinOpKind op = node.op;
  if (op == BinOpKind::And || op == BinOpKind::Or) {
    Value l = eval(*node.lhs);
    if (!l.is_bool()) {
      throw RuntimeFailure(fmt::format("'{}' needs Bool operands, got {}", binop_name(op),
                                       value_type_name(l)));
    }
    if (op == BinOpKind::And && !l.as_bool()) return Value::boolean(false);
    if (op == BinOpKind::Or && l.as_bool()) return Value::boolean(true);
    Value r = eval(*node.rhs);
    if (!r.is_bool()) {
      throw RuntimeFailure(fmt::format("'{}' needs Bool operands, got {}", binop_name(op),
                                       value_type_name(r)));
    }
    return r;
  }

  Value l = eval(*node.lhs);
  Value r = eval(*node.rhs);
  switch (op) {
    case BinOpKind::Eq: return Value::boolean(semantic_equals(l, r));
    case BinOpKind::Ne: return Value::boolean(!semantic_equals(l, r));
    case BinOpKind::Lt:
    case BinOpKind::Le:
    case BinOpKind::Gt:
    case BinOpKind::Ge: {
      int cmp = 0;
      if (l.is_int() && r.is_int()) {
        cmp = l.as_int() < r.as_int() ? -1 : (l.as_int() > r.as_int() ? 1 : 0);
      } else if (is_num(l) && is_num(r)) {
        double a = to_double(l), b = to_double(r);
        cmp = a < b ? -1 : (a > b ? 1 : 0);
      } else if (l.is_str() && r.is_str()) {
        cmp = l.as_str().compare(r.as_str());
        cmp = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
      } else {
        throw RuntimeFailure(fmt::format("cannot compare {} and {}", value_type_name(l),
                                         value_type_name(r)));
      }
      switch (op) {
        case BinOpKind::Lt: return Value::boolean(cmp < 0);
        case BinOpKind::Le: return Value::boolean(cmp <= 0);
        case BinOpKind::Gt: return Value::boolean(cmp > 0);
        default: return Value::boolean(cmp >= 0);
      }
    }
    case BinOpKind::Add:
      if (l.is_int() && r.is_int()) return Value::integer(checked_int(op, l.as_int(), r.as_int()));
      if (is_num(l) && is_num(r)) return Value::real(to_double(l) + to_double(r));
      if (l.is_str() && r.is_str()) return Value::str(l.as_str() + r.as_str());
      throw RuntimeFailure(
          fmt::format("cannot add {} and {}", value_type_name(l), value_type_name(r)));
    case BinOpKind::Sub:
    case BinOpKind::Mul:
      if (l.is_int() && r.is_int()) return Value::integer(checked_int(op, l.as_int(), r.as_int()));
      if (is_num(l) && is_num(r)) {
        double a = to_double(l), b = to_double(r);
        return Value::real(op == BinOpKind::Sub ? a - b : a * b);
      }
      throw RuntimeFailure(fmt::format("cannot apply '{}' to {} and {}", binop_name(op),
                                       value_type_name(l), value_type_name(r)));
    case BinOpKind::Div: {
      if (!is_num(l) || !is_num(r)) {
        throw RuntimeFailure(fmt::format("cannot divide {} by {}", value_type_name(l),
                                         value_type_name(r)));
      }
      double b = to_double(r);
      if (b == 0.0) throw RuntimeFailure("division by zero");
      // Division is always real-valued.
      return Value::real(to_double(l) / b);
    }
    case BinOpKind::Mod: {
      if (!l.is_int() || !r.is_int()) {
        throw RuntimeFailure(fmt::format("'%' needs Int operands, got {} and {}",
                                         value_type_name(l), value_type_name(r)));
      }
      std::int64_t b = r.as_int();
      if (b == 0) throw RuntimeFailure("modulo by zero");
      if (b == -1) return Value::integer(0);
      std::int64_t m = l.as_int() % b;
      // Floored: result takes the divisor's sign.
      if (m != 0 && ((m < 0) != (b < 0))) m += b;
      return Value::integer(m);
    }
    default:
      throw RuntimeFailure("internal: unhandled binop");
  }
}

Value Interpreter::eval_call(const Call& node, const Expr& e) {
  std::vector<Value> args;
  args.reserve(node.args.size());
  for (const auto& arg : node.args) args.push_back(eval(*arg));
  if (const FnDef* fn = program_.find_function(node.callee)) {
    return call_function(*fn, std::move(args));
  }
  return eval_builtin(node.callee, std::move(args), e);
}

Value Interpreter::call_program_function(const std::string& name, std::vector<Value> args) {
  const FnDef* fn = program_.find_function(name);
  if (!fn) throw RuntimeFailure(fmt::format("unknown function '{}'", name));
  if (fn->params.size() != args.size()) {
    throw RuntimeFailure(fmt::format("'{}' expects {} argument(s), got {}", name,
                                     fn->params.size(), args.size()));
  }
  return call_function(*fn, std::move(args));
}

Value Interpreter::call_function(const FnDef& fn, std::vector<Value> args) {
  EnvFrameGuard frame(env_, /*barrier=*/true);
  for (std::size_t i = 0; i < fn.params.size(); ++i) {
    env_.bind(fn.params[i], std::move(args[i]));
  }
  ControlGuard ret(*this, "return", LabelKind::FnReturn);
  try {
    return eval(*fn.body);
  } catch (UnwindSignal& s) {
    if (!ret.caught(s)) throw;
    return s.payload.value_or(Value::unit());
  }
}

Value Interpreter::eval_builtin(const std::string& name, std::vector<Value> args, const Expr& e) {
  (void)e;
  if (name == "print") {
    if (eval_depth_ > 0) throw RuntimeFailure("print is not allowed in eval");
    io_.write(render_deep(args[0], heap_) + "\n");
    return Value::unit();
  }
  if (name == "input") {
    if (eval_depth_ > 0) throw RuntimeFailure("input is not allowed in eval");
    io_.write(render_deep(args[0], heap_));
    std::optional<std::string> line = io_.read_line();
    if (!line) throw RuntimeFailure("input: end of input");
    if (io_.echo_input) io_.write(*line + "\n");
    return Value::str(std::move(*line));
  }
  if (name == "str") {
    return Value::str(render_deep(args[0], heap_));
  }
  if (name == "len") {
    const Value& v = args[0];
    if (v.is_str()) return Value::integer(static_cast<std::int64_t>(v.as_str().size()));
    if (v.is_addr()) {
      const HeapCell* cell = heap_.get(v.as_addr());
      if (!cell) throw RuntimeFailure(fmt::format("dangling reference {}", v.as_addr().id));
      if (const auto* list = std::get_if<ListVal>(cell)) {
        return Value::integer(static_cast<std::int64_t>(list->size()));
      }
      if (const auto* rec = std::get_if<RecordVal>(cell)) {
        return Value::integer(static_cast<std::int64_t>(rec->fields.size()));
      }
      throw RuntimeFailure("len of a plain reference cell");
    }
    throw RuntimeFailure(fmt::format("len of {}", value_type_name(v)));
  }
  if (name == "not") {
    if (!args[0].is_bool()) {
      throw RuntimeFailure(fmt::format("'not' needs Bool, got {}", value_type_name(args[0])));
    }
    return Value::boolean(!args[0].as_bool());
  }
  throw RuntimeFailure(fmt::format("unknown function '{}'", name));
}

Value Interpreter::eval_natural(const NaturalExpr& node) {
  if (eval_depth_ > 0) throw RuntimeFailure("natural blocks cannot run inside eval");
  BlockOutcome outcome = run_natural_block(node.block);
  if (outcome.completed()) return outcome.value;
  unwind_to_label(outcome.label, std::move(outcome.payload));
}

WireValue Interpreter::eval_shared(const std::string& src) {
  ExprPtr expr;
  try {
    expr = parse_expression(src);
  } catch (const ParseError& pe) {
    throw EffectFailure(ErrCode::EvalError,
                        fmt::format("eval parse error at {}:{}: {}", pe.line, pe.col, pe.what()));
  }
  Heap snapshot = heap_;
  const std::size_t saved_barrier = control_barrier_;
  control_barrier_ = control_.size();
  ++eval_depth_;
  auto restore_flags = [&] {
    --eval_depth_;
    control_barrier_ = saved_barrier;
  };
  try {
    Value v = eval(*expr);
    restore_flags();
    return serialize_value(v, heap_);
  } catch (const RuntimeFailure& rf) {
    restore_flags();
    heap_ = std::move(snapshot);
    throw EffectFailure(ErrCode::EvalError, rf.what());
  } catch (const UnwindSignal&) {
    restore_flags();
    heap_ = std::move(snapshot);
    throw EffectFailure(ErrCode::EvalError, "control transfer escaped eval");
  } catch (...) {
    restore_flags();
    heap_ = std::move(snapshot);
    throw;
  }
}

}  // namespace njr
