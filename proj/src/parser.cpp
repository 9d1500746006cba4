#include "njr/parser.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace njr {

namespace {

enum class Tok {
  Ident,
  Int,
  Float,
  Str,
  TripleStr,
  Punct,  // single/multi char operator or punctuation, text in `text`
  End,    // end of input
};

struct Token {
  Tok kind;
  std::string text;
  int line = 1;
  int col = 1;
};

const std::unordered_set<std::string>& keywords() {
  static const std::unordered_set<std::string> kw = {
      "let", "in",   "if",    "then",    "else", "while", "do",  "end",  "label",
      "goto", "with", "natural", "fn",    "true", "false", "and", "or",   "not",
      "ref"};
  return kw;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> lex() {
    std::vector<Token> out;
    while (true) {
      skip_ws_and_comments();
      if (pos_ >= src_.size()) {
        out.push_back({Tok::End, "", line_, col_});
        return out;
      }
      int line = line_, col = col_;
      char c = src_[pos_];
      if (ident_start(c)) {
        std::string text;
        while (pos_ < src_.size() && ident_char(src_[pos_])) text += take();
        out.push_back({Tok::Ident, std::move(text), line, col});
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        out.push_back(lex_number(line, col));
      } else if (c == '"') {
        if (src_.substr(pos_, 3) == "\"\"\"") {
          out.push_back(lex_triple(line, col));
        } else {
          out.push_back(lex_string(line, col));
        }
      } else {
        out.push_back(lex_punct(line, col));
      }
    }
  }

 private:
  char take() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_ws_and_comments() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') take();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        take();
      } else {
        return;
      }
    }
  }

  Token lex_number(int line, int col) {
    std::string text;
    bool is_float = false;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      text += take();
    }
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      is_float = true;
      text += take();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        text += take();
      }
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      std::string exp;
      exp += src_[pos_];
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) exp += src_[p++];
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) exp += src_[p++];
        while (pos_ < p) take();
        text += exp;
        is_float = true;
      } else {
        pos_ = save;
      }
    }
    return {is_float ? Tok::Float : Tok::Int, std::move(text), line, col};
  }

  Token lex_string(int line, int col) {
    take();  // opening quote
    std::string text;
    while (true) {
      if (pos_ >= src_.size()) throw ParseError("unterminated string literal", line, col);
      char c = take();
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= src_.size()) throw ParseError("unterminated escape", line_, col_);
        char e = take();
        switch (e) {
          case 'n': text += '\n'; break;
          case 't': text += '\t'; break;
          case '"': text += '"'; break;
          case '\\': text += '\\'; break;
          default:
            throw ParseError(fmt::format("unknown escape '\\{}'", e), line_, col_);
        }
      } else {
        text += c;
      }
    }
    return {Tok::Str, std::move(text), line, col};
  }

  Token lex_triple(int line, int col) {
    take();
    take();
    take();
    std::string text;
    while (true) {
      if (pos_ >= src_.size()) throw ParseError("unterminated natural block", line, col);
      if (src_.substr(pos_, 3) == "\"\"\"") {
        take();
        take();
        take();
        break;
      }
      text += take();
    }
    return {Tok::TripleStr, std::move(text), line, col};
  }

  Token lex_punct(int line, int col) {
    static const char* two_char[] = {":=", "==", "!=", "<=", ">="};
    for (const char* op : two_char) {
      if (src_.substr(pos_, 2) == op) {
        take();
        take();
        return {Tok::Punct, op, line, col};
      }
    }
    char c = src_[pos_];
    static const std::string singles = "()[]{},:;+-*/%<>=!";
    if (singles.find(c) != std::string::npos) {
      take();
      return {Tok::Punct, std::string(1, c), line, col};
    }
    throw ParseError(fmt::format("unsupported character '{}'", c), line, col);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const std::unordered_map<std::string, int>& builtin_arity() {
  static const std::unordered_map<std::string, int> b = {
      {"print", 1}, {"input", 1}, {"str", 1}, {"len", 1}, {"not", 1}};
  return b;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(Lexer(src).lex()) {}

  Program parse_program() {
    Program program;
    std::vector<ExprPtr> items;
    while (!at_end()) {
      if (is_keyword("fn")) {
        program.functions.push_back(parse_fn());
      } else {
        parse_seq_items(items, {});
      }
      skip_semis();
    }
    auto main = std::make_unique<Expr>();
    main->node = Seq{std::move(items)};
    program.main = std::move(main);
    finish(program);
    return program;
  }

  ExprPtr parse_single_expression() {
    ExprPtr e = parse_expr();
    if (!at_end()) {
      throw ParseError(fmt::format("unexpected '{}' after expression", peek().text), peek().line,
                       peek().col);
    }
    return e;
  }

 private:
  const Token& peek(int n = 0) const { return tokens_[std::min(pos_ + n, tokens_.size() - 1)]; }
  bool at_end() const { return peek().kind == Tok::End; }

  Token advance() { return tokens_[pos_++]; }

  bool is_punct(std::string_view p) const {
    return peek().kind == Tok::Punct && peek().text == p;
  }
  bool is_keyword(std::string_view k) const {
    return peek().kind == Tok::Ident && peek().text == k && keywords().contains(peek().text);
  }

  bool match_punct(std::string_view p) {
    if (!is_punct(p)) return false;
    ++pos_;
    return true;
  }
  bool match_keyword(std::string_view k) {
    if (!is_keyword(k)) return false;
    ++pos_;
    return true;
  }

  void expect_punct(std::string_view p) {
    if (!match_punct(p)) {
      throw ParseError(fmt::format("expected '{}', found '{}'", p, describe(peek())), peek().line,
                       peek().col);
    }
  }
  void expect_keyword(std::string_view k) {
    if (!match_keyword(k)) {
      throw ParseError(fmt::format("expected '{}', found '{}'", k, describe(peek())), peek().line,
                       peek().col);
    }
  }

  static std::string describe(const Token& t) {
    if (t.kind == Tok::End) return "end of input";
    return t.text;
  }

  std::string expect_ident() {
    if (peek().kind != Tok::Ident || keywords().contains(peek().text)) {
      throw ParseError(fmt::format("expected identifier, found '{}'", describe(peek())),
                       peek().line, peek().col);
    }
    return advance().text;
  }

  ExprPtr make(Expr::Node node, int line, int col) {
    auto e = std::make_unique<Expr>();
    e->node = std::move(node);
    e->line = line;
    e->col = col;
    return e;
  }

  void skip_semis() {
    while (match_punct(";")) {
    }
  }

  bool at_terminator(const std::vector<std::string_view>& terms) const {
    if (at_end()) return true;
    for (auto t : terms) {
      if (peek().kind == Tok::Ident && peek().text == t) return true;
      if (peek().kind == Tok::Punct && peek().text == t) return true;
    }
    return false;
  }

  // Parses statements until a terminator. `let x = e in ...` consumes the
  // remainder of the sequence as its body.
  void parse_seq_items(std::vector<ExprPtr>& items, const std::vector<std::string_view>& terms) {
    while (true) {
      skip_semis();
      if (at_terminator(terms)) return;
      if (is_keyword("fn")) {
        throw ParseError("fn definitions are only allowed at the top level", peek().line,
                         peek().col);
      }
      if (is_keyword("let")) {
        int line = peek().line, col = peek().col;
        advance();
        std::string name = expect_ident();
        expect_punct("=");
        ExprPtr value = parse_expr();
        if (match_keyword("in")) {
          std::vector<ExprPtr> body_items;
          parse_seq_items(body_items, terms);
          ExprPtr body = seq_of(std::move(body_items), line, col);
          items.push_back(make(LetIn{name, std::move(value), std::move(body)}, line, col));
          return;
        }
        items.push_back(make(Bind{name, std::move(value)}, line, col));
      } else {
        items.push_back(parse_expr());
      }
      skip_semis();
      if (at_terminator(terms)) return;
      if (is_keyword("fn")) return;  // next top-level item
    }
  }

  ExprPtr seq_of(std::vector<ExprPtr> items, int line, int col) {
    if (items.size() == 1) return std::move(items[0]);
    return make(Seq{std::move(items)}, line, col);
  }

  ExprPtr parse_block(const std::vector<std::string_view>& terms) {
    int line = peek().line, col = peek().col;
    std::vector<ExprPtr> items;
    parse_seq_items(items, terms);
    return seq_of(std::move(items), line, col);
  }

  FnDef parse_fn() {
    int line = peek().line, col = peek().col;
    expect_keyword("fn");
    FnDef fn;
    fn.name = expect_ident();
    fn.line = line;
    fn.col = col;
    expect_punct("(");
    if (!is_punct(")")) {
      fn.params.push_back(expect_ident());
      while (match_punct(",")) fn.params.push_back(expect_ident());
    }
    expect_punct(")");
    expect_punct(":");
    fn.body = parse_block({"end"});
    expect_keyword("end");
    return fn;
  }

  ExprPtr parse_expr() { return parse_assign(); }

  ExprPtr parse_assign() {
    ExprPtr lhs = parse_or();
    if (is_punct(":=")) {
      int line = peek().line, col = peek().col;
      advance();
      ExprPtr rhs = parse_assign();
      return make(SetRef{std::move(lhs), std::move(rhs)}, line, col);
    }
    return lhs;
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (is_keyword("or")) {
      int line = peek().line, col = peek().col;
      advance();
      ExprPtr rhs = parse_and();
      lhs = make(BinOp{BinOpKind::Or, std::move(lhs), std::move(rhs)}, line, col);
    }
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_not();
    while (is_keyword("and")) {
      int line = peek().line, col = peek().col;
      advance();
      ExprPtr rhs = parse_not();
      lhs = make(BinOp{BinOpKind::And, std::move(lhs), std::move(rhs)}, line, col);
    }
    return lhs;
  }

  ExprPtr parse_not() {
    if (is_keyword("not")) {
      int line = peek().line, col = peek().col;
      advance();
      std::vector<ExprPtr> args;
      args.push_back(parse_not());
      return make(Call{"not", std::move(args)}, line, col);
    }
    return parse_cmp();
  }

  ExprPtr parse_cmp() {
    ExprPtr lhs = parse_add();
    static const std::pair<const char*, BinOpKind> ops[] = {
        {"==", BinOpKind::Eq}, {"!=", BinOpKind::Ne}, {"<=", BinOpKind::Le},
        {">=", BinOpKind::Ge}, {"<", BinOpKind::Lt},  {">", BinOpKind::Gt}};
    for (const auto& [text, op] : ops) {
      if (is_punct(text)) {
        int line = peek().line, col = peek().col;
        advance();
        ExprPtr rhs = parse_add();
        return make(BinOp{op, std::move(lhs), std::move(rhs)}, line, col);
      }
    }
    return lhs;
  }

  ExprPtr parse_add() {
    ExprPtr lhs = parse_mul();
    while (is_punct("+") || is_punct("-")) {
      BinOpKind op = is_punct("+") ? BinOpKind::Add : BinOpKind::Sub;
      int line = peek().line, col = peek().col;
      advance();
      ExprPtr rhs = parse_mul();
      lhs = make(BinOp{op, std::move(lhs), std::move(rhs)}, line, col);
    }
    return lhs;
  }

  ExprPtr parse_mul() {
    ExprPtr lhs = parse_unary();
    while (is_punct("*") || is_punct("/") || is_punct("%")) {
      BinOpKind op = is_punct("*") ? BinOpKind::Mul
                     : is_punct("/") ? BinOpKind::Div
                                     : BinOpKind::Mod;
      int line = peek().line, col = peek().col;
      advance();
      ExprPtr rhs = parse_unary();
      lhs = make(BinOp{op, std::move(lhs), std::move(rhs)}, line, col);
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    int line = peek().line, col = peek().col;
    if (is_punct("-")) {
      advance();
      if (peek().kind == Tok::Int) {
        Token t = advance();
        return make(Lit{Value::integer(parse_int_literal(t, true))}, line, col);
      }
      if (peek().kind == Tok::Float) {
        Token t = advance();
        return make(Lit{Value::real(-std::stod(t.text))}, line, col);
      }
      ExprPtr operand = parse_unary();
      ExprPtr zero = make(Lit{Value::integer(0)}, line, col);
      return make(BinOp{BinOpKind::Sub, std::move(zero), std::move(operand)}, line, col);
    }
    if (is_punct("!")) {
      advance();
      ExprPtr target = parse_unary();
      return make(DerefExpr{std::move(target)}, line, col);
    }
    if (is_keyword("ref")) {
      advance();
      ExprPtr value = parse_unary();
      return make(RefExpr{std::move(value)}, line, col);
    }
    return parse_postfix();
  }

  std::int64_t parse_int_literal(const Token& t, bool negated) {
    unsigned long long raw = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), raw);
    constexpr unsigned long long max_pos = 9223372036854775807ULL;
    if (ec != std::errc{} || ptr != t.text.data() + t.text.size() ||
        raw > (negated ? max_pos + 1 : max_pos)) {
      throw ParseError("integer literal out of range", t.line, t.col);
    }
    if (negated) {
      if (raw == max_pos + 1) return std::numeric_limits<std::int64_t>::min();
      return -static_cast<std::int64_t>(raw);
    }
    return static_cast<std::int64_t>(raw);
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_primary();
    while (is_punct("[")) {
      int line = peek().line, col = peek().col;
      advance();
      ExprPtr key = parse_expr();
      expect_punct("]");
      e = make(Index{std::move(e), std::move(key)}, line, col);
    }
    return e;
  }

  ExprPtr parse_primary() {
    int line = peek().line, col = peek().col;
    if (peek().kind == Tok::Int) {
      Token t = advance();
      return make(Lit{Value::integer(parse_int_literal(t, false))}, line, col);
    }
    if (peek().kind == Tok::Float) {
      Token t = advance();
      return make(Lit{Value::real(std::stod(t.text))}, line, col);
    }
    if (peek().kind == Tok::Str) {
      return make(Lit{Value::str(advance().text)}, line, col);
    }
    if (match_keyword("true")) return make(Lit{Value::boolean(true)}, line, col);
    if (match_keyword("false")) return make(Lit{Value::boolean(false)}, line, col);
    if (match_keyword("let")) {
      // expression position: the in-form only
      std::string name = expect_ident();
      expect_punct("=");
      ExprPtr value = parse_expr();
      expect_keyword("in");
      ExprPtr body = parse_expr();
      return make(LetIn{std::move(name), std::move(value), std::move(body)}, line, col);
    }
    if (match_keyword("if")) {
      ExprPtr cond = parse_expr();
      expect_keyword("then");
      ExprPtr then_branch = parse_block({"else", "end"});
      ExprPtr else_branch;
      if (match_keyword("else")) {
        else_branch = parse_block({"end"});
      }
      expect_keyword("end");
      return make(If{std::move(cond), std::move(then_branch), std::move(else_branch)}, line, col);
    }
    if (match_keyword("while")) {
      ExprPtr cond = parse_expr();
      expect_keyword("do");
      ExprPtr body = parse_block({"end"});
      expect_keyword("end");
      return make(While{std::move(cond), std::move(body)}, line, col);
    }
    if (match_keyword("label")) {
      std::string name = expect_ident();
      if (name == "break" || name == "continue" || name == "return") {
        throw ParseError(fmt::format("'{}' is reserved and cannot name a user label", name), line,
                         col);
      }
      expect_punct(":");
      ExprPtr body = parse_block({"end"});
      expect_keyword("end");
      return make(LabelExpr{std::move(name), std::move(body)}, line, col);
    }
    if (match_keyword("goto")) {
      std::string name;
      if (is_keyword("continue")) {
        // not a keyword in this grammar, but guard anyway
        name = advance().text;
      } else {
        if (peek().kind != Tok::Ident) {
          throw ParseError("expected label name after goto", peek().line, peek().col);
        }
        name = advance().text;
      }
      ExprPtr payload;
      if (match_keyword("with")) payload = parse_expr();
      return make(GotoExpr{std::move(name), std::move(payload)}, line, col);
    }
    if (match_keyword("natural")) {
      if (peek().kind != Tok::TripleStr) {
        throw ParseError("expected \"\"\"...\"\"\" after natural", peek().line, peek().col);
      }
      Token t = advance();
      MarkerExtraction ext = extract_markers(t.text);
      NaturalBlock block;
      block.text = std::move(ext.text);
      block.inputs = std::move(ext.inputs);
      block.outputs = std::move(ext.outputs);
      block.line = line;
      block.col = col;
      return make(NaturalExpr{std::move(block)}, line, col);
    }
    if (peek().kind == Tok::Ident && !keywords().contains(peek().text)) {
      std::string name = advance().text;
      if (is_punct("(")) {
        advance();
        std::vector<ExprPtr> args;
        if (!is_punct(")")) {
          args.push_back(parse_expr());
          while (match_punct(",")) args.push_back(parse_expr());
        }
        expect_punct(")");
        return make(Call{std::move(name), std::move(args)}, line, col);
      }
      return make(Var{std::move(name)}, line, col);
    }
    if (match_punct("(")) {
      if (match_punct(")")) return make(Lit{Value::unit()}, line, col);
      ExprPtr inner = parse_block({")"});
      expect_punct(")");
      return inner;
    }
    if (match_punct("[")) {
      std::vector<ExprPtr> items;
      if (!is_punct("]")) {
        items.push_back(parse_expr());
        while (match_punct(",")) items.push_back(parse_expr());
      }
      expect_punct("]");
      return make(ListLit{std::move(items)}, line, col);
    }
    if (match_punct("{")) {
      std::vector<std::pair<std::string, ExprPtr>> fields;
      if (!is_punct("}")) {
        do {
          std::string key;
          if (peek().kind == Tok::Str) {
            key = advance().text;
          } else {
            key = expect_ident();
          }
          expect_punct(":");
          fields.emplace_back(std::move(key), parse_expr());
        } while (match_punct(","));
      }
      expect_punct("}");
      return make(RecordLit{std::move(fields)}, line, col);
    }
    throw ParseError(fmt::format("unexpected '{}'", describe(peek())), line, col);
  }

  // Post-parse static checks and natural block finishing.
  void finish(Program& program) {
    std::unordered_set<std::string> fn_names;
    for (const auto& fn : program.functions) {
      if (builtin_arity().contains(fn.name)) {
        throw ParseError(fmt::format("fn '{}' shadows a builtin", fn.name), fn.line, fn.col);
      }
      if (!fn_names.insert(fn.name).second) {
        throw ParseError(fmt::format("duplicate fn '{}'", fn.name), fn.line, fn.col);
      }
    }
    int block_counter = 0;
    for (auto& fn : program.functions) {
      check_expr(*fn.body, program, {{"return", LabelKind::FnReturn}}, true, block_counter);
    }
    check_expr(*program.main, program, {}, false, block_counter);
    // Label sets are computed after ids are assigned.
    assign_labels(program);
  }

  void assign_labels(Program& program) {
    for (auto& fn : program.functions) fill_labels(*fn.body, program);
    fill_labels(*program.main, program);
  }

  void fill_labels(Expr& e, const Program& program) {
    std::visit(
        [&](auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, NaturalExpr>) {
            node.block.labels = enclosing_labels(program, node.block.id);
          } else if constexpr (std::is_same_v<T, LetIn>) {
            fill_labels(*node.value, program);
            fill_labels(*node.body, program);
          } else if constexpr (std::is_same_v<T, Bind>) {
            fill_labels(*node.value, program);
          } else if constexpr (std::is_same_v<T, Seq>) {
            for (auto& item : node.items) fill_labels(*item, program);
          } else if constexpr (std::is_same_v<T, If>) {
            fill_labels(*node.cond, program);
            fill_labels(*node.then_branch, program);
            if (node.else_branch) fill_labels(*node.else_branch, program);
          } else if constexpr (std::is_same_v<T, While>) {
            fill_labels(*node.cond, program);
            fill_labels(*node.body, program);
          } else if constexpr (std::is_same_v<T, BinOp>) {
            fill_labels(*node.lhs, program);
            fill_labels(*node.rhs, program);
          } else if constexpr (std::is_same_v<T, RefExpr>) {
            fill_labels(*node.value, program);
          } else if constexpr (std::is_same_v<T, DerefExpr>) {
            fill_labels(*node.target, program);
          } else if constexpr (std::is_same_v<T, SetRef>) {
            fill_labels(*node.target, program);
            fill_labels(*node.value, program);
          } else if constexpr (std::is_same_v<T, LabelExpr>) {
            fill_labels(*node.body, program);
          } else if constexpr (std::is_same_v<T, GotoExpr>) {
            if (node.payload) fill_labels(*node.payload, program);
          } else if constexpr (std::is_same_v<T, Call>) {
            for (auto& arg : node.args) fill_labels(*arg, program);
          } else if constexpr (std::is_same_v<T, Index>) {
            fill_labels(*node.target, program);
            fill_labels(*node.key, program);
          } else if constexpr (std::is_same_v<T, ListLit>) {
            for (auto& item : node.items) fill_labels(*item, program);
          } else if constexpr (std::is_same_v<T, RecordLit>) {
            for (auto& [k, v] : node.fields) fill_labels(*v, program);
          }
        },
        e.node);
  }

  void check_expr(Expr& e, const Program& program,
                  std::vector<std::pair<std::string, LabelKind>> labels, bool in_fn,
                  int& block_counter) {
    check_rec(e, program, labels, in_fn, block_counter);
  }

  void check_rec(Expr& e, const Program& program,
                 std::vector<std::pair<std::string, LabelKind>>& labels, bool in_fn,
                 int& block_counter) {
    std::visit(
        [&](auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, NaturalExpr>) {
            node.block.id = fmt::format("b{}", block_counter++);
          } else if constexpr (std::is_same_v<T, GotoExpr>) {
            if (node.payload) check_rec(*node.payload, program, labels, in_fn, block_counter);
            bool found = node.label == "raise";
            for (const auto& [name, kind] : labels) {
              if (name == node.label) {
                found = true;
                break;
              }
            }
            if (!found) {
              throw ParseError(
                  fmt::format("goto '{}' has no enclosing label", node.label), e.line, e.col);
            }
          } else if constexpr (std::is_same_v<T, Call>) {
            for (auto& arg : node.args) check_rec(*arg, program, labels, in_fn, block_counter);
            int arity = -1;
            if (auto it = builtin_arity().find(node.callee); it != builtin_arity().end()) {
              arity = it->second;
            } else if (const FnDef* fn = program.find_function(node.callee)) {
              arity = static_cast<int>(fn->params.size());
            } else {
              throw ParseError(fmt::format("unknown function '{}'", node.callee), e.line, e.col);
            }
            if (arity != static_cast<int>(node.args.size())) {
              throw ParseError(fmt::format("'{}' expects {} argument(s), got {}", node.callee,
                                           arity, node.args.size()),
                               e.line, e.col);
            }
          } else if constexpr (std::is_same_v<T, While>) {
            check_rec(*node.cond, program, labels, in_fn, block_counter);
            labels.push_back({"break", LabelKind::LoopBreak});
            labels.push_back({"continue", LabelKind::LoopContinue});
            check_rec(*node.body, program, labels, in_fn, block_counter);
            labels.pop_back();
            labels.pop_back();
          } else if constexpr (std::is_same_v<T, LabelExpr>) {
            labels.push_back({node.name, LabelKind::User});
            check_rec(*node.body, program, labels, in_fn, block_counter);
            labels.pop_back();
          } else if constexpr (std::is_same_v<T, LetIn>) {
            check_rec(*node.value, program, labels, in_fn, block_counter);
            check_rec(*node.body, program, labels, in_fn, block_counter);
          } else if constexpr (std::is_same_v<T, Bind>) {
            check_rec(*node.value, program, labels, in_fn, block_counter);
          } else if constexpr (std::is_same_v<T, Seq>) {
            for (auto& item : node.items) check_rec(*item, program, labels, in_fn, block_counter);
          } else if constexpr (std::is_same_v<T, If>) {
            check_rec(*node.cond, program, labels, in_fn, block_counter);
            check_rec(*node.then_branch, program, labels, in_fn, block_counter);
            if (node.else_branch) check_rec(*node.else_branch, program, labels, in_fn, block_counter);
          } else if constexpr (std::is_same_v<T, BinOp>) {
            check_rec(*node.lhs, program, labels, in_fn, block_counter);
            check_rec(*node.rhs, program, labels, in_fn, block_counter);
          } else if constexpr (std::is_same_v<T, RefExpr>) {
            check_rec(*node.value, program, labels, in_fn, block_counter);
          } else if constexpr (std::is_same_v<T, DerefExpr>) {
            check_rec(*node.target, program, labels, in_fn, block_counter);
          } else if constexpr (std::is_same_v<T, SetRef>) {
            check_rec(*node.target, program, labels, in_fn, block_counter);
            check_rec(*node.value, program, labels, in_fn, block_counter);
          } else if constexpr (std::is_same_v<T, Index>) {
            check_rec(*node.target, program, labels, in_fn, block_counter);
            check_rec(*node.key, program, labels, in_fn, block_counter);
          } else if constexpr (std::is_same_v<T, ListLit>) {
            for (auto& item : node.items) check_rec(*item, program, labels, in_fn, block_counter);
          } else if constexpr (std::is_same_v<T, RecordLit>) {
            for (auto& [k, v] : node.fields) check_rec(*v, program, labels, in_fn, block_counter);
          }
        },
        e.node);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

void reject_eval_forms(const Expr& e) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Bind>) {
          throw ParseError("variable binding statements are not allowed in eval", e.line, e.col);
        } else if constexpr (std::is_same_v<T, NaturalExpr>) {
          throw ParseError("natural blocks are not allowed in eval", e.line, e.col);
        } else if constexpr (std::is_same_v<T, LetIn>) {
          reject_eval_forms(*node.value);
          reject_eval_forms(*node.body);
        } else if constexpr (std::is_same_v<T, Seq>) {
          for (const auto& item : node.items) reject_eval_forms(*item);
        } else if constexpr (std::is_same_v<T, If>) {
          reject_eval_forms(*node.cond);
          reject_eval_forms(*node.then_branch);
          if (node.else_branch) reject_eval_forms(*node.else_branch);
        } else if constexpr (std::is_same_v<T, While>) {
          reject_eval_forms(*node.cond);
          reject_eval_forms(*node.body);
        } else if constexpr (std::is_same_v<T, BinOp>) {
          reject_eval_forms(*node.lhs);
          reject_eval_forms(*node.rhs);
        } else if constexpr (std::is_same_v<T, RefExpr>) {
          reject_eval_forms(*node.value);
        } else if constexpr (std::is_same_v<T, DerefExpr>) {
          reject_eval_forms(*node.target);
        } else if constexpr (std::is_same_v<T, SetRef>) {
          reject_eval_forms(*node.target);
          reject_eval_forms(*node.value);
        } else if constexpr (std::is_same_v<T, LabelExpr>) {
          reject_eval_forms(*node.body);
        } else if constexpr (std::is_same_v<T, GotoExpr>) {
          if (node.payload) reject_eval_forms(*node.payload);
        } else if constexpr (std::is_same_v<T, Call>) {
          for (const auto& arg : node.args) reject_eval_forms(*arg);
        } else if constexpr (std::is_same_v<T, Index>) {
          reject_eval_forms(*node.target);
          reject_eval_forms(*node.key);
        } else if constexpr (std::is_same_v<T, ListLit>) {
          for (const auto& item : node.items) reject_eval_forms(*item);
        } else if constexpr (std::is_same_v<T, RecordLit>) {
          for (const auto& [k, v] : node.fields) reject_eval_forms(*v);
        }
      },
      e.node);
}

}  // namespace

Program parse_program(std::string_view source) {
  Parser parser(source);
  return parser.parse_program();
}

ExprPtr parse_expression(std::string_view source) {
  Parser parser(source);
  ExprPtr e = parser.parse_single_expression();
  reject_eval_forms(*e);
  return e;
}

MarkerExtraction extract_markers(std::string_view raw) {
  MarkerExtraction out;
  auto add_unique = [](std::vector<std::string>& names, const std::string& name) {
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  };
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] == '<') {
      std::size_t j = i + 1;
      bool is_output = false;
      if (j < raw.size() && raw[j] == ':') {
        is_output = true;
        ++j;
      }
      std::size_t name_start = j;
      if (j < raw.size() && ident_start(raw[j])) {
        ++j;
        while (j < raw.size() && ident_char(raw[j])) ++j;
        if (j < raw.size() && raw[j] == '>') {
          std::string name(raw.substr(name_start, j - name_start));
          out.text += name;
          if (is_output) {
            add_unique(out.outputs, name);
          } else {
            add_unique(out.inputs, name);
          }
          i = j + 1;
          continue;
        }
      }
    }
    out.text += raw[i++];
  }
  return out;
}

}  // namespace njr
