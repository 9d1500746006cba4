#include "njr/ast.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

#include "njr/digest.hpp"
#include "njr/errors.hpp"

namespace njr {

using njson = nlohmann::ordered_json;

const char* binop_name(BinOpKind op) {
  switch (op) {
    case BinOpKind::Add: return "+";
    case BinOpKind::Sub: return "-";
    case BinOpKind::Mul: return "*";
    case BinOpKind::Div: return "/";
    case BinOpKind::Mod: return "%";
    case BinOpKind::Eq: return "==";
    case BinOpKind::Ne: return "!=";
    case BinOpKind::Lt: return "<";
    case BinOpKind::Le: return "<=";
    case BinOpKind::Gt: return ">";
    case BinOpKind::Ge: return ">=";
    case BinOpKind::And: return "and";
    case BinOpKind::Or: return "or";
  }
  return "?";
}

bool NaturalBlock::is_input(std::string_view name) const {
  return std::find(inputs.begin(), inputs.end(), name) != inputs.end();
}

bool NaturalBlock::is_output(std::string_view name) const {
  return std::find(outputs.begin(), outputs.end(), name) != outputs.end();
}

bool NaturalBlock::has_label(std::string_view name) const {
  return std::any_of(labels.begin(), labels.end(),
                     [&](const LabelInfo& l) { return l.name == name; });
}

const FnDef* Program::find_function(std::string_view name) const {
  for (const auto& fn : functions) {
    if (fn.name == name) return &fn;
  }
  return nullptr;
}

namespace {

void collect_blocks(const Expr& e, std::vector<const NaturalBlock*>& out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, NaturalExpr>) {
          out.push_back(&node.block);
        } else if constexpr (std::is_same_v<T, LetIn>) {
          collect_blocks(*node.value, out);
          collect_blocks(*node.body, out);
        } else if constexpr (std::is_same_v<T, Bind>) {
          collect_blocks(*node.value, out);
        } else if constexpr (std::is_same_v<T, Seq>) {
          for (const auto& item : node.items) collect_blocks(*item, out);
        } else if constexpr (std::is_same_v<T, If>) {
          collect_blocks(*node.cond, out);
          collect_blocks(*node.then_branch, out);
          if (node.else_branch) collect_blocks(*node.else_branch, out);
        } else if constexpr (std::is_same_v<T, While>) {
          collect_blocks(*node.cond, out);
          collect_blocks(*node.body, out);
        } else if constexpr (std::is_same_v<T, BinOp>) {
          collect_blocks(*node.lhs, out);
          collect_blocks(*node.rhs, out);
        } else if constexpr (std::is_same_v<T, RefExpr>) {
          collect_blocks(*node.value, out);
        } else if constexpr (std::is_same_v<T, DerefExpr>) {
          collect_blocks(*node.target, out);
        } else if constexpr (std::is_same_v<T, SetRef>) {
          collect_blocks(*node.target, out);
          collect_blocks(*node.value, out);
        } else if constexpr (std::is_same_v<T, LabelExpr>) {
          collect_blocks(*node.body, out);
        } else if constexpr (std::is_same_v<T, GotoExpr>) {
          if (node.payload) collect_blocks(*node.payload, out);
        } else if constexpr (std::is_same_v<T, Call>) {
          for (const auto& arg : node.args) collect_blocks(*arg, out);
        } else if constexpr (std::is_same_v<T, Index>) {
          collect_blocks(*node.target, out);
          collect_blocks(*node.key, out);
        } else if constexpr (std::is_same_v<T, ListLit>) {
          for (const auto& item : node.items) collect_blocks(*item, out);
        } else if constexpr (std::is_same_v<T, RecordLit>) {
          for (const auto& [k, v] : node.fields) collect_blocks(*v, out);
        }
      },
      e.node);
}

njson scalar_to_json(const Value& v) {
  njson j;
  if (v.is_unit()) {
    j = njson::array({"unit"});
  } else if (v.is_bool()) {
    j = njson::array({"bool", v.as_bool()});
  } else if (v.is_int()) {
    j = njson::array({"int", v.as_int()});
  } else if (v.is_float()) {
    j = njson::array({"float", v.as_float()});
  } else if (v.is_str()) {
    j = njson::array({"str", v.as_str()});
  } else if (v.is_label()) {
    j = njson::array({"label", v.as_label().name});
  } else {
    j = njson::array({"ref", v.as_addr().id});
  }
  return j;
}

njson expr_to_json(const Expr& e) {
  return std::visit(
      [&](const auto& node) -> njson {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Lit>) {
          return njson::array({"lit", scalar_to_json(node.v)});
        } else if constexpr (std::is_same_v<T, Var>) {
          return njson::array({"var", node.name});
        } else if constexpr (std::is_same_v<T, LetIn>) {
          return njson::array({"let", node.name, expr_to_json(*node.value), expr_to_json(*node.body)});
        } else if constexpr (std::is_same_v<T, Bind>) {
          return njson::array({"bind", node.name, expr_to_json(*node.value)});
        } else if constexpr (std::is_same_v<T, Seq>) {
          njson items = njson::array();
          for (const auto& item : node.items) items.push_back(expr_to_json(*item));
          return njson::array({"seq", items});
        } else if constexpr (std::is_same_v<T, If>) {
          njson j = njson::array({"if", expr_to_json(*node.cond), expr_to_json(*node.then_branch)});
          if (node.else_branch) j.push_back(expr_to_json(*node.else_branch));
          return j;
        } else if constexpr (std::is_same_v<T, While>) {
          return njson::array({"while", expr_to_json(*node.cond), expr_to_json(*node.body)});
        } else if constexpr (std::is_same_v<T, BinOp>) {
          return njson::array({"binop", binop_name(node.op), expr_to_json(*node.lhs),
                               expr_to_json(*node.rhs)});
        } else if constexpr (std::is_same_v<T, RefExpr>) {
          return njson::array({"ref", expr_to_json(*node.value)});
        } else if constexpr (std::is_same_v<T, DerefExpr>) {
          return njson::array({"deref", expr_to_json(*node.target)});
        } else if constexpr (std::is_same_v<T, SetRef>) {
          return njson::array({"setref", expr_to_json(*node.target), expr_to_json(*node.value)});
        } else if constexpr (std::is_same_v<T, LabelExpr>) {
          return njson::array({"label", node.name, expr_to_json(*node.body)});
        } else if constexpr (std::is_same_v<T, GotoExpr>) {
          njson j = njson::array({"goto", node.label});
          if (node.payload) j.push_back(expr_to_json(*node.payload));
          return j;
        } else if constexpr (std::is_same_v<T, Call>) {
          njson args = njson::array();
          for (const auto& arg : node.args) args.push_back(expr_to_json(*arg));
          return njson::array({"call", node.callee, args});
        } else if constexpr (std::is_same_v<T, Index>) {
          return njson::array({"index", expr_to_json(*node.target), expr_to_json(*node.key)});
        } else if constexpr (std::is_same_v<T, ListLit>) {
          njson items = njson::array();
          for (const auto& item : node.items) items.push_back(expr_to_json(*item));
          return njson::array({"list", items});
        } else if constexpr (std::is_same_v<T, RecordLit>) {
          njson fields = njson::array();
          for (const auto& [k, v] : node.fields) {
            fields.push_back(njson::array({k, expr_to_json(*v)}));
          }
          return njson::array({"record", fields});
        } else {
          static_assert(std::is_same_v<T, NaturalExpr>);
          njson inputs = njson::array();
          for (const auto& x : node.block.inputs) inputs.push_back(x);
          njson outputs = njson::array();
          for (const auto& x : node.block.outputs) outputs.push_back(x);
          return njson::array({"natural", node.block.id, node.block.text, inputs, outputs});
        }
      },
      e.node);
}

// Walks the AST tracking the lexically enclosing labels; fills `found` when
// the target block is seen.
struct LabelWalk {
  std::string_view target;
  std::optional<std::vector<LabelInfo>> found;

  void visit(const Expr& e, std::vector<LabelInfo>& stack) {
    if (found) return;
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, NaturalExpr>) {
            if (node.block.id == target) {
              std::vector<LabelInfo> labels;
              bool have_break = false, have_continue = false, have_return = false;
              for (std::size_t i = stack.size(); i-- > 0;) {
                const LabelInfo& l = stack[i];
                if (l.kind == LabelKind::LoopBreak) {
                  if (have_break) continue;
                  have_break = true;
                } else if (l.kind == LabelKind::LoopContinue) {
                  if (have_continue) continue;
                  have_continue = true;
                } else if (l.kind == LabelKind::FnReturn) {
                  if (have_return) continue;
                  have_return = true;
                }
                labels.push_back(l);
              }
              labels.push_back(LabelInfo{"raise", LabelKind::User});
              found = std::move(labels);
            }
          } else if constexpr (std::is_same_v<T, LetIn>) {
            visit(*node.value, stack);
            visit(*node.body, stack);
          } else if constexpr (std::is_same_v<T, Bind>) {
            visit(*node.value, stack);
          } else if constexpr (std::is_same_v<T, Seq>) {
            for (const auto& item : node.items) visit(*item, stack);
          } else if constexpr (std::is_same_v<T, If>) {
            visit(*node.cond, stack);
            visit(*node.then_branch, stack);
            if (node.else_branch) visit(*node.else_branch, stack);
          } else if constexpr (std::is_same_v<T, While>) {
            visit(*node.cond, stack);
            stack.push_back(LabelInfo{"break", LabelKind::LoopBreak});
            stack.push_back(LabelInfo{"continue", LabelKind::LoopContinue});
            visit(*node.body, stack);
            stack.pop_back();
            stack.pop_back();
          } else if constexpr (std::is_same_v<T, BinOp>) {
            visit(*node.lhs, stack);
            visit(*node.rhs, stack);
          } else if constexpr (std::is_same_v<T, RefExpr>) {
            visit(*node.value, stack);
          } else if constexpr (std::is_same_v<T, DerefExpr>) {
            visit(*node.target, stack);
          } else if constexpr (std::is_same_v<T, SetRef>) {
            visit(*node.target, stack);
            visit(*node.value, stack);
          } else if constexpr (std::is_same_v<T, LabelExpr>) {
            stack.push_back(LabelInfo{node.name, LabelKind::User});
            visit(*node.body, stack);
            stack.pop_back();
          } else if constexpr (std::is_same_v<T, GotoExpr>) {
            if (node.payload) visit(*node.payload, stack);
          } else if constexpr (std::is_same_v<T, Call>) {
            for (const auto& arg : node.args) visit(*arg, stack);
          } else if constexpr (std::is_same_v<T, Index>) {
            visit(*node.target, stack);
            visit(*node.key, stack);
          } else if constexpr (std::is_same_v<T, ListLit>) {
            for (const auto& item : node.items) visit(*item, stack);
          } else if constexpr (std::is_same_v<T, RecordLit>) {
            for (const auto& [k, v] : node.fields) visit(*v, stack);
          }
        },
        e.node);
  }
};

}  // namespace

std::vector<const NaturalBlock*> Program::blocks() const {
  std::vector<const NaturalBlock*> out;
  for (const auto& fn : functions) collect_blocks(*fn.body, out);
  collect_blocks(*main, out);
  std::sort(out.begin(), out.end(), [](const NaturalBlock* a, const NaturalBlock* b) {
    return a->id < b->id;
  });
  return out;
}

const NaturalBlock* Program::find_block(std::string_view block_id) const {
  for (const NaturalBlock* b : blocks()) {
    if (b->id == block_id) return b;
  }
  return nullptr;
}

std::string canonical_serialize(const Program& program) {
  njson fns = njson::array();
  for (const auto& fn : program.functions) {
    njson params = njson::array();
    for (const auto& p : fn.params) params.push_back(p);
    fns.push_back(njson::array({fn.name, params, expr_to_json(*fn.body)}));
  }
  njson j;
  j["fns"] = fns;
  j["main"] = expr_to_json(*program.main);
  return j.dump();
}

std::string program_hash(const Program& program) {
  return sha256_hex(canonical_serialize(program));
}

std::vector<LabelInfo> enclosing_labels(const Program& program, std::string_view block_id) {
  LabelWalk walk{block_id, std::nullopt};
  std::vector<LabelInfo> stack;
  for (const auto& fn : program.functions) {
    stack.push_back(LabelInfo{"return", LabelKind::FnReturn});
    walk.visit(*fn.body, stack);
    stack.pop_back();
    if (walk.found) return *walk.found;
  }
  walk.visit(*program.main, stack);
  if (!walk.found) {
    throw RuntimeFailure("unknown natural block: " + std::string(block_id));
  }
  return *walk.found;
}

}  // namespace njr
