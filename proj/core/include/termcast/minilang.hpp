#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "termcast/errors.hpp"

namespace termcast::minilang {

// Half-open byte range into the original source text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  bool contains(const Span& other) const {
    return start <= other.start && other.end <= end;
  }
  bool overlaps(const Span& other) const {
    return start < other.end && other.start < end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

enum class NodeKind {
  Program,
  Assign,
  While,
  If,
  Skip,
  Seq,
  BinOp,
  Compare,
  Var,
  IntLit,
};

const char* kind_name(NodeKind kind);

// Var, IntLit and Skip carry no children.
bool is_leaf_kind(NodeKind kind);

struct AstNode {
  int id = 0;
  NodeKind kind = NodeKind::Skip;
  Span span;
  std::vector<int> children;
  // Operator symbol for BinOp/Compare, variable name for Var,
  // literal text for IntLit; empty otherwise.
  std::string label;
};

struct Ast {
  std::vector<AstNode> nodes;
  int root = 0;

  const AstNode& node(int id) const { return nodes[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(nodes.size()); }
};

class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t line, std::size_t column,
             std::vector<std::string> expected);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::vector<std::string> expected_;
};

// Recursive-descent parse of the mini While-language:
//
//   program := stmt ( ";" stmt )*
//   stmt    := "skip" | ident ":=" expr
//            | "while" cmp "{" program "}"
//            | "if" cmp "{" program "}" "else" "{" program "}"
//   cmp     := expr ( ">" | "<" | "==" | "!=" ) expr
//   expr    := term ( ("+"|"-") term )* ;  term := atom ( "*" atom )*
//   atom    := integer | ident | "(" expr ")"
//
// Whitespace is insignificant; identifiers are [a-z][a-z0-9_]*.
Ast parse(std::string_view source);

struct ExecutionOutcome {
  enum class Kind { Halted, BudgetExhausted, RuntimeFault };

  Kind kind = Kind::Halted;
  long long steps = 0;          // Halted: steps used; BudgetExhausted: the budget.
  std::string description;      // RuntimeFault only.

  static ExecutionOutcome halted(long long steps) { return {Kind::Halted, steps, {}}; }
  static ExecutionOutcome budget_exhausted(long long budget) {
    return {Kind::BudgetExhausted, budget, {}};
  }
  static ExecutionOutcome fault(std::string what) {
    return {Kind::RuntimeFault, 0, std::move(what)};
  }

  bool halted() const { return kind == Kind::Halted; }
  bool exhausted() const { return kind == Kind::BudgetExhausted; }
};

// Deterministic big-integer interpreter. One step is charged per executed
// statement and per while-guard evaluation; variables default to 0 on first
// read. Returns BudgetExhausted(budget) when the step count reaches `budget`
// before the program ends. budget must be >= 1.
ExecutionOutcome interpret(const Ast& ast, long long budget);

// All nodes in depth-first (preorder) order with their spans. The leaves in
// this listing form a non-overlapping, ordered cover of the identifier,
// integer and `skip` tokens of the source.
std::vector<std::pair<int, Span>> ast_leaf_partition(const Ast& ast);

// Canonical text form; re-parsing yields a structurally identical tree.
std::string pretty_print(const Ast& ast);

// Structural equality ignoring spans and node ids.
bool structurally_equal(const Ast& a, const Ast& b);

namespace lex {

enum class TokKind {
  KwSkip, KwWhile, KwIf, KwElse,
  Ident, Int,
  Assign, Gt, Lt, Eq, Ne, Plus, Minus, Star,
  LParen, RParen, LBrace, RBrace, Semi,
  Unknown, End,
};

struct Token {
  TokKind kind = TokKind::End;
  std::string_view text;
  Span span;
  std::size_t line = 1;
  std::size_t column = 1;
};

// Scans the whole input including a trailing End token. Never throws:
// unrecognized bytes become Unknown tokens (the parser rejects them, the
// model tokenizer maps them to UNK).
std::vector<Token> scan(std::string_view source);

const char* tok_kind_name(TokKind kind);

}  // namespace lex

}  // namespace termcast::minilang
