#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "njr/value.hpp"

namespace njr {

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

enum class BinOpKind { Add, Sub, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge, And, Or };

const char* binop_name(BinOpKind op);

struct LabelInfo {
  std::string name;
  LabelKind kind = LabelKind::User;
  bool operator==(const LabelInfo&) const = default;
};

// A natural code block: instruction text with <x> / <:x> markers already
// replaced by plain names, the extracted variable sets, and the labels
// visible at the block's position.
struct NaturalBlock {
  std::string text;
  std::vector<std::string> inputs;   // X_i, first-appearance order
  std::vector<std::string> outputs;  // X_o
  std::string id;                    // "b<N>", parse order
  std::vector<LabelInfo> labels;     // L
  int line = 0;
  int col = 0;

  bool is_input(std::string_view name) const;
  bool is_output(std::string_view name) const;
  bool has_label(std::string_view name) const;
};

struct Lit { Value v; };
struct Var { std::string name; };
struct LetIn { std::string name; ExprPtr value; ExprPtr body; };
// Statement form `let x = e`: binds in the current frame, evaluates to unit.
struct Bind { std::string name; ExprPtr value; };
struct Seq { std::vector<ExprPtr> items; };
struct If { ExprPtr cond; ExprPtr then_branch; ExprPtr else_branch; };  // else may be null
struct While { ExprPtr cond; ExprPtr body; };
struct BinOp { BinOpKind op; ExprPtr lhs; ExprPtr rhs; };
struct RefExpr { ExprPtr value; };
struct DerefExpr { ExprPtr target; };
struct SetRef { ExprPtr target; ExprPtr value; };
struct LabelExpr { std::string name; ExprPtr body; };
struct GotoExpr { std::string label; ExprPtr payload; };  // payload may be null
struct Call { std::string callee; std::vector<ExprPtr> args; };
struct Index { ExprPtr target; ExprPtr key; };
struct ListLit { std::vector<ExprPtr> items; };
struct RecordLit { std::vector<std::pair<std::string, ExprPtr>> fields; };
struct NaturalExpr { NaturalBlock block; };

struct Expr {
  using Node = std::variant<Lit, Var, LetIn, Bind, Seq, If, While, BinOp, RefExpr, DerefExpr,
                            SetRef, LabelExpr, GotoExpr, Call, Index, ListLit, RecordLit,
                            NaturalExpr>;
  Node node;
  int line = 0;
  int col = 0;
};

struct FnDef {
  std::string name;
  std::vector<std::string> params;
  ExprPtr body;
  int line = 0;
  int col = 0;
};

struct Program {
  std::vector<FnDef> functions;
  ExprPtr main;

  const FnDef* find_function(std::string_view name) const;
  // All natural blocks in parse order; pointers into the owned tree.
  std::vector<const NaturalBlock*> blocks() const;
  const NaturalBlock* find_block(std::string_view block_id) const;
};

// Canonical, whitespace-insensitive serialization of the AST; the program
// hash in trace headers is the SHA-256 of these bytes.
std::string canonical_serialize(const Program& program);
std::string program_hash(const Program& program);

// Labels lexically visible at a natural block: nearest loop's break/continue,
// the enclosing function's return, enclosing user labels, and the implicit
// top-level raise label. Throws RuntimeFailure on an unknown block id.
std::vector<LabelInfo> enclosing_labels(const Program& program, std::string_view block_id);

}  // namespace njr
