// The natural function interface proper: effect handling, session loop,
// eager context construction, finalize checks.
#include <fmt/format.h>

#include "njr/digest.hpp"
#include "njr/interp.hpp"
#include "njr/wire.hpp"

namespace njr {

namespace {

struct BlockFrameGuard {
  Env& env;
  explicit BlockFrameGuard(Env& e) : env(e) { env.push_frame(); }
  ~BlockFrameGuard() { env.pop_frame(); }
  BlockFrameGuard(const BlockFrameGuard&) = delete;
};

// Planning-variable convention: always a permitted scratch assign target.
constexpr std::string_view kThoughtVar = "nj__thought";

}  // namespace

EffectResponse Interpreter::handle_effect(Session& session, const Effect& effect) {
  const NaturalBlock& block = *session.block;
  auto not_in_mode = [&]() {
    return EffectResponse::make_err(
        ErrCode::TypeError, fmt::format("effect {} is not available in mode {}",
                                        effect_kind_name(effect.kind),
                                        handler_mode_name(session.mode)));
  };
  switch (session.mode) {
    case HandlerMode::Isolated:
      return not_in_mode();
    case HandlerMode::ToolUse:
      if (effect.kind != EffectKind::Call) return not_in_mode();
      break;
    case HandlerMode::SharedState:
      if (effect.kind == EffectKind::Call) return not_in_mode();
      if (effect.kind == EffectKind::SharedEval && !session.shared_eval_enabled) {
        return not_in_mode();
      }
      break;
  }

  try {
    switch (effect.kind) {
      case EffectKind::Lookup: {
        if (!block.is_input(effect.name)) {
          return EffectResponse::make_err(
              ErrCode::ForbiddenVar,
              fmt::format("variable '{}' is not readable here", effect.name));
        }
        const Value* v = env_.lookup(effect.name);
        if (!v) {
          return EffectResponse::make_err(
              ErrCode::UndefinedVar, fmt::format("variable '{}' is unbound", effect.name));
        }
        return EffectResponse::make_ok(serialize_value(*v, heap_));
      }
      case EffectKind::Assign: {
        const bool allowed = block.is_output(effect.name) || block.is_input(effect.name) ||
                             effect.name == kThoughtVar;
        if (!allowed) {
          return EffectResponse::make_err(
              ErrCode::ForbiddenVar,
              fmt::format("variable '{}' is not writable here", effect.name));
        }
        Value v = reify(*effect.value, heap_);
        env_.bind(effect.name, std::move(v));
        return EffectResponse::make_ok(WireValue::null());
      }
      case EffectKind::Deref: {
        Address a{*effect.ref};
        const HeapCell* cell = heap_.get(a);
        if (!cell) {
          return EffectResponse::make_err(ErrCode::DanglingRef,
                                          fmt::format("reference {} is not live", a.id));
        }
        // Chase chains of reference-valued cells so a Set through an alias is
        // visible to the reader.
        std::uint64_t hops = 0;
        while (const auto* v = std::get_if<Value>(cell)) {
          if (!v->is_addr()) return EffectResponse::make_ok(serialize_value(*v, heap_));
          const HeapCell* next = heap_.get(v->as_addr());
          if (!next || ++hops > heap_.size()) {
            return EffectResponse::make_ok(serialize_value(*v, heap_));
          }
          cell = next;
        }
        return EffectResponse::make_ok(WireValue::str(render_cell_shallow(*cell, heap_)));
      }
      case EffectKind::Ref: {
        Value v = reify(*effect.value, heap_);
        Address a = heap_.alloc(HeapCell{std::move(v)});
        return EffectResponse::make_ok(WireValue::ref(a.id));
      }
      case EffectKind::Set: {
        Address a{*effect.ref};
        if (!heap_.live(a)) {
          return EffectResponse::make_err(ErrCode::DanglingRef,
                                          fmt::format("reference {} is not live", a.id));
        }
        Value v = reify(*effect.value, heap_);
        heap_.set(a, HeapCell{std::move(v)});
        return EffectResponse::make_ok(WireValue::null());
      }
      case EffectKind::Goto: {
        auto it = std::find_if(block.labels.begin(), block.labels.end(),
                               [&](const LabelInfo& l) { return l.name == effect.name; });
        if (it == block.labels.end()) {
          return EffectResponse::make_err(
              ErrCode::BadLabel, fmt::format("label '{}' is not jumpable here", effect.name));
        }
        if ((it->kind == LabelKind::LoopBreak || it->kind == LabelKind::LoopContinue) &&
            effect.value) {
          return EffectResponse::make_err(
              ErrCode::BadLabel, fmt::format("label '{}' takes no value", effect.name));
        }
        if (effect.value) reify(*effect.value, heap_);  // validate before committing
        session.status = Session::Status::Cancelled;
        return EffectResponse::make_control(effect.name, effect.value);
      }
      case EffectKind::Call: {
        const ToolRegistry::Tool* tool = tools_ ? tools_->find(effect.name) : nullptr;
        if (!tool) {
          return EffectResponse::make_err(ErrCode::TypeError,
                                          fmt::format("unknown tool '{}'", effect.name));
        }
        return EffectResponse::make_ok(tool->fn(*effect.value, *this));
      }
      case EffectKind::SharedEval: {
        return EffectResponse::make_ok(eval_shared(effect.expr));
      }
      case EffectKind::Return:
        return EffectResponse::make_err(ErrCode::TypeError,
                                        "Return is terminal and handled by the session");
    }
  } catch (const EffectFailure& f) {
    return EffectResponse::make_err(f.err.code, f.err.message);
  }
  return EffectResponse::make_err(ErrCode::TypeError, "unhandled effect");
}

AgentContext Interpreter::build_context(const NaturalBlock& block, const Session& session) const {
  AgentContext ctx;
  ctx.block_text = block.text;
  ctx.block_id = block.id;
  ctx.mode = handler_mode_name(session.mode);
  for (const auto& label : block.labels) ctx.labels.push_back(label.name);
  if (session.mode == HandlerMode::ToolUse && tools_) ctx.tools = tools_->listing();
  if (!config_.eager) return ctx;
  for (const auto& name : block.inputs) {
    const Value* v = env_.lookup(name);
    if (!v) {
      throw RuntimeFailure(
          fmt::format("input variable '{}' of natural block {} is unbound", name, block.id));
    }
    EagerVar ev;
    ev.name = name;
    ev.value = serialize_value(*v, heap_);
    if (v->is_addr()) {
      const HeapCell* cell = heap_.get(v->as_addr());
      if (cell && std::holds_alternative<ListVal>(*cell)) {
        ev.type = "List";
        ev.preview = preview_cell(*cell);
      } else if (cell && std::holds_alternative<RecordVal>(*cell)) {
        ev.type = "Record";
        ev.preview = preview_cell(*cell);
      } else {
        ev.type = "Ref";
      }
    } else {
      ev.type = value_type_name(*v);
    }
    ctx.eager_vars.push_back(std::move(ev));
  }
  return ctx;
}

AgentStep Interpreter::next_step(Session& session, const AgentContext& ctx,
                                 const std::string& eager_canon) {
  std::string key;
  if (cache_) {
    key = cache_key(agent_.identity_digest(), session.block->text, eager_canon, session.entries);
    if (std::optional<Effect> hit = cache_->lookup(key)) {
      return AgentStep{std::move(*hit)};
    }
  }
  ++agent_.invocations;
  AgentStep step = agent_.next(ctx);
  check_timeout();
  if (cache_) cache_->put(key, step.effect);
  return step;
}

void Interpreter::record_session(const Session& session, const std::string& context_digest) {
  SessionTrace t;
  t.program_hash = program_hash_;
  t.block_id = session.block->id;
  t.mode = handler_mode_name(session.mode);
  t.config_digest = config_digest_;
  t.context_digest = context_digest;
  t.entries = session.entries;
  sessions_.push_back(std::move(t));
}

BlockOutcome Interpreter::run_natural_block(const NaturalBlock& block) {
  for (const auto& name : block.inputs) {
    if (!env_.lookup(name)) {
      throw RuntimeFailure(
          fmt::format("input variable '{}' of natural block {} is unbound", name, block.id));
    }
  }

  Session session(&block, config_.mode, config_.shared_eval);
  BlockFrameGuard block_frame(env_);
  session.block_frame_index = env_.depth() - 1;

  AgentContext ctx = build_context(block, session);
  ctx.history = &session.entries;
  const std::string eager_canon = eager_vars_canonical(ctx.eager_vars);
  const std::string context_digest = sha256_hex(eager_canon);

  struct Recorder {
    Interpreter& in;
    Session& s;
    const std::string& digest;
    ~Recorder() { in.record_session(s, digest); }
  } recorder{*this, session, context_digest};

  agent_.on_session_start(ctx);

  while (true) {
    check_timeout();
    if (session.effects_used >= config_.max_effects) {
      throw BudgetExceeded(session.effects_used + 1);
    }
    AgentStep step = next_step(session, ctx, eager_canon);
    ++session.effects_used;
    ++effect_total_;

    const Effect& effect = step.effect;
    if (effect.is_terminal()) {
      std::string missing;
      for (const auto& name : block.outputs) {
        if (!env_.lookup_in_frame(session.block_frame_index, name)) {
          missing = name;
          break;
        }
      }
      if (!missing.empty()) {
        session.entries.push_back(TraceEntry{
            effect, EffectResponse::make_err(
                        ErrCode::UndefinedVar,
                        fmt::format("output variable '{}' undefined", missing))});
        if (++session.finalize_failures > config_.max_finalize_retries) {
          throw AgentFailure(fmt::format(
              "output variable '{}' still undefined after {} finalize attempts", missing,
              session.finalize_failures));
        }
        continue;
      }
      Value result;
      try {
        result = effect.value ? reify(*effect.value, heap_) : Value::unit();
      } catch (const EffectFailure& f) {
        session.entries.push_back(
            TraceEntry{effect, EffectResponse::make_err(f.err.code, f.err.message)});
        if (++session.finalize_failures > config_.max_finalize_retries) {
          throw AgentFailure(f.err.message);
        }
        continue;
      }
      session.entries.push_back(
          TraceEntry{effect, EffectResponse::make_ok(WireValue::null())});
      session.status = Session::Status::Finished;
      for (const auto& name : block.outputs) {
        const Value* v = env_.lookup_in_frame(session.block_frame_index, name);
        env_.bind_in_frame(session.block_frame_index - 1, name, *v);
      }
      agent_.on_session_end(ctx);
      BlockOutcome out;
      out.kind = BlockOutcome::Kind::Completed;
      out.value = std::move(result);
      return out;
    }

    EffectResponse response = handle_effect(session, effect);
    session.entries.push_back(TraceEntry{effect, response});
    if (response.is_control()) {
      agent_.on_session_end(ctx);
      BlockOutcome out;
      out.kind = BlockOutcome::Kind::Control;
      out.label = response.label;
      if (response.payload) out.payload = reify(*response.payload, heap_);
      return out;
    }
  }
}

}  // namespace njr
