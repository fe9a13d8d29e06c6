#include "termcast/minilang.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace termcast::minilang {

using boost::multiprecision::cpp_int;

const char* kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Program: return "Program";
    case NodeKind::Assign: return "Assign";
    case NodeKind::While: return "While";
    case NodeKind::If: return "If";
    case NodeKind::Skip: return "Skip";
    case NodeKind::Seq: return "Seq";
    case NodeKind::BinOp: return "BinOp";
    case NodeKind::Compare: return "Compare";
    case NodeKind::Var: return "Var";
    case NodeKind::IntLit: return "IntLit";
  }
  return "?";
}

bool is_leaf_kind(NodeKind kind) {
  return kind == NodeKind::Var || kind == NodeKind::IntLit || kind == NodeKind::Skip;
}

ParseError::ParseError(std::string message, std::size_t line, std::size_t column,
                       std::vector<std::string> expected)
    : Error(std::move(message)), line_(line), column_(column), expected_(std::move(expected)) {}

namespace lex {

const char* tok_kind_name(TokKind kind) {
  switch (kind) {
    case TokKind::KwSkip: return "skip";
    case TokKind::KwWhile: return "while";
    case TokKind::KwIf: return "if";
    case TokKind::KwElse: return "else";
    case TokKind::Ident: return "identifier";
    case TokKind::Int: return "integer";
    case TokKind::Assign: return ":=";
    case TokKind::Gt: return ">";
    case TokKind::Lt: return "<";
    case TokKind::Eq: return "==";
    case TokKind::Ne: return "!=";
    case TokKind::Plus: return "+";
    case TokKind::Minus: return "-";
    case TokKind::Star: return "*";
    case TokKind::LParen: return "(";
    case TokKind::RParen: return ")";
    case TokKind::LBrace: return "{";
    case TokKind::RBrace: return "}";
    case TokKind::Semi: return ";";
    case TokKind::Unknown: return "unknown";
    case TokKind::End: return "end of input";
  }
  return "?";
}

std::vector<Token> scan(std::string_view source) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  const std::size_t n = source.size();

  auto advance = [&](std::size_t k) {
    for (std::size_t j = 0; j < k; ++j, ++i) {
      if (source[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto push = [&](TokKind kind, std::size_t len) {
    out.push_back(Token{kind, source.substr(i, len), Span{i, i + len}, line, col});
    advance(len);
  };

  while (i < n) {
    char c = source[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c >= 'a' && c <= 'z') {
      std::size_t len = 1;
      while (i + len < n) {
        char d = source[i + len];
        if ((d >= 'a' && d <= 'z') || (d >= '0' && d <= '9') || d == '_') ++len;
        else break;
      }
      std::string_view word = source.substr(i, len);
      TokKind kind = TokKind::Ident;
      if (word == "skip") kind = TokKind::KwSkip;
      else if (word == "while") kind = TokKind::KwWhile;
      else if (word == "if") kind = TokKind::KwIf;
      else if (word == "else") kind = TokKind::KwElse;
      push(kind, len);
      continue;
    }
    if (c >= '0' && c <= '9') {
      std::size_t len = 1;
      while (i + len < n && source[i + len] >= '0' && source[i + len] <= '9') ++len;
      push(TokKind::Int, len);
      continue;
    }
    switch (c) {
      case ':':
        if (i + 1 < n && source[i + 1] == '=') { push(TokKind::Assign, 2); continue; }
        break;
      case '=':
        if (i + 1 < n && source[i + 1] == '=') { push(TokKind::Eq, 2); continue; }
        break;
      case '!':
        if (i + 1 < n && source[i + 1] == '=') { push(TokKind::Ne, 2); continue; }
        break;
      case '>': push(TokKind::Gt, 1); continue;
      case '<': push(TokKind::Lt, 1); continue;
      case '+': push(TokKind::Plus, 1); continue;
      case '-': push(TokKind::Minus, 1); continue;
      case '*': push(TokKind::Star, 1); continue;
      case '(': push(TokKind::LParen, 1); continue;
      case ')': push(TokKind::RParen, 1); continue;
      case '{': push(TokKind::LBrace, 1); continue;
      case '}': push(TokKind::RBrace, 1); continue;
      case ';': push(TokKind::Semi, 1); continue;
      default: break;
    }
    push(TokKind::Unknown, 1);
  }
  out.push_back(Token{TokKind::End, source.substr(n, 0), Span{n, n}, line, col});
  return out;
}

}  // namespace lex

namespace {

using lex::Token;
using lex::TokKind;

class Parser {
 public:
  explicit Parser(std::string_view source)
      : tokens_(lex::scan(source)) {}

  Ast run() {
    Ast ast;
    int root = parse_stmt_list(ast, /*as_root=*/true);
    expect(TokKind::End);
    ast.root = root;
    return ast;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& get() { return tokens_[pos_++]; }

  [[noreturn]] void fail(std::vector<std::string> expected) {
    const Token& t = peek();
    std::ostringstream msg;
    msg << "parse error at line " << t.line << ", column " << t.column << ": expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg << (i + 1 == expected.size() ? " or " : ", ");
      msg << expected[i];
    }
    msg << ", found '" << (t.kind == TokKind::End ? "end of input" : std::string(t.text)) << "'";
    throw ParseError(msg.str(), t.line, t.column, std::move(expected));
  }

  Token expect(TokKind kind) {
    if (peek().kind != kind) fail({lex::tok_kind_name(kind)});
    return get();
  }

  int add_node(Ast& ast, NodeKind kind, Span span, std::vector<int> children,
               std::string label = {}) {
    int id = static_cast<int>(ast.nodes.size());
    ast.nodes.push_back(AstNode{id, kind, span, std::move(children), std::move(label)});
    return id;
  }

  // stmt (";" stmt)*. The root becomes a Program node spanning the whole
  // trimmed source; block bodies collapse to the single statement or wrap
  // in a Seq when there are two or more.
  int parse_stmt_list(Ast& ast, bool as_root) {
    std::vector<int> stmts;
    stmts.push_back(parse_stmt(ast));
    while (peek().kind == TokKind::Semi) {
      get();
      stmts.push_back(parse_stmt(ast));
    }
    Span span{ast.node(stmts.front()).span.start, ast.node(stmts.back()).span.end};
    if (as_root) return add_node(ast, NodeKind::Program, span, std::move(stmts));
    if (stmts.size() == 1) return stmts.front();
    return add_node(ast, NodeKind::Seq, span, std::move(stmts));
  }

  int parse_stmt(Ast& ast) {
    switch (peek().kind) {
      case TokKind::KwSkip: {
        Token t = get();
        return add_node(ast, NodeKind::Skip, t.span, {});
      }
      case TokKind::Ident: {
        Token name = get();
        int var = add_node(ast, NodeKind::Var, name.span, {}, std::string(name.text));
        expect(TokKind::Assign);
        int value = parse_expr(ast);
        Span span{name.span.start, ast.node(value).span.end};
        return add_node(ast, NodeKind::Assign, span, {var, value});
      }
      case TokKind::KwWhile: {
        Token kw = get();
        int guard = parse_cmp(ast);
        expect(TokKind::LBrace);
        int body = parse_stmt_list(ast, /*as_root=*/false);
        Token close = expect(TokKind::RBrace);
        Span span{kw.span.start, close.span.end};
        return add_node(ast, NodeKind::While, span, {guard, body});
      }
      case TokKind::KwIf: {
        Token kw = get();
        int guard = parse_cmp(ast);
        expect(TokKind::LBrace);
        int then_branch = parse_stmt_list(ast, false);
        expect(TokKind::RBrace);
        expect(TokKind::KwElse);
        expect(TokKind::LBrace);
        int else_branch = parse_stmt_list(ast, false);
        Token close = expect(TokKind::RBrace);
        Span span{kw.span.start, close.span.end};
        return add_node(ast, NodeKind::If, span, {guard, then_branch, else_branch});
      }
      default:
        fail({"skip", "identifier", "while", "if"});
    }
  }

  // Guards must be comparisons; a bare expression is rejected here.
  int parse_cmp(Ast& ast) {
    int lhs = parse_expr(ast);
    std::string op;
    switch (peek().kind) {
      case TokKind::Gt: op = ">"; break;
      case TokKind::Lt: op = "<"; break;
      case TokKind::Eq: op = "=="; break;
      case TokKind::Ne: op = "!="; break;
      default:
        fail({">", "<", "==", "!="});
    }
    get();
    int rhs = parse_expr(ast);
    Span span{ast.node(lhs).span.start, ast.node(rhs).span.end};
    return add_node(ast, NodeKind::Compare, span, {lhs, rhs}, op);
  }

  int parse_expr(Ast& ast) {
    int lhs = parse_term(ast);
    while (peek().kind == TokKind::Plus || peek().kind == TokKind::Minus) {
      std::string op = peek().kind == TokKind::Plus ? "+" : "-";
      get();
      int rhs = parse_term(ast);
      Span span{ast.node(lhs).span.start, ast.node(rhs).span.end};
      lhs = add_node(ast, NodeKind::BinOp, span, {lhs, rhs}, op);
    }
    return lhs;
  }

  int parse_term(Ast& ast) {
    int lhs = parse_atom(ast);
    while (peek().kind == TokKind::Star) {
      get();
      int rhs = parse_atom(ast);
      Span span{ast.node(lhs).span.start, ast.node(rhs).span.end};
      lhs = add_node(ast, NodeKind::BinOp, span, {lhs, rhs}, "*");
    }
    return lhs;
  }

  int parse_atom(Ast& ast) {
    switch (peek().kind) {
      case TokKind::Int: {
        Token t = get();
        return add_node(ast, NodeKind::IntLit, t.span, {}, std::string(t.text));
      }
      case TokKind::Ident: {
        Token t = get();
        return add_node(ast, NodeKind::Var, t.span, {}, std::string(t.text));
      }
      case TokKind::LParen: {
        get();
        int inner = parse_expr(ast);
        expect(TokKind::RParen);
        return inner;
      }
      default:
        fail({"integer", "identifier", "("});
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

struct InterpFault {
  std::string what;
};

class Interp {
 public:
  Interp(const Ast& ast, long long budget) : ast_(ast), budget_(budget) {}

  ExecutionOutcome run() {
    try {
      if (exec(ast_.root)) return ExecutionOutcome::halted(steps_);
      return ExecutionOutcome::budget_exhausted(budget_);
    } catch (const InterpFault& f) {
      return ExecutionOutcome::fault(f.what);
    }
  }

 private:
  // Returns false once the budget is exhausted.
  bool charge() {
    if (steps_ == budget_) return false;
    ++steps_;
    return true;
  }

  bool exec(int id) {
    const AstNode& node = ast_.node(id);
    switch (node.kind) {
      case NodeKind::Program:
      case NodeKind::Seq:
        for (int child : node.children) {
          if (!exec(child)) return false;
        }
        return true;
      case NodeKind::Skip:
        return charge();
      case NodeKind::Assign: {
        if (!charge()) return false;
        const AstNode& var = ast_.node(node.children[0]);
        vars_[var.label] = eval(node.children[1]);
        return true;
      }
      case NodeKind::While: {
        for (;;) {
          if (!charge()) return false;  // guard evaluation
          if (!truth(node.children[0])) return true;
          if (!exec(node.children[1])) return false;
        }
      }
      case NodeKind::If: {
        if (!charge()) return false;
        return exec(truth(node.children[0]) ? node.children[1] : node.children[2]);
      }
      default:
        throw InterpFault{std::string("statement expected, got node kind ") +
                          kind_name(node.kind)};
    }
  }

  bool truth(int id) {
    const AstNode& node = ast_.node(id);
    if (node.kind != NodeKind::Compare) {
      throw InterpFault{std::string("comparison expected, got node kind ") +
                        kind_name(node.kind)};
    }
    cpp_int lhs = eval(node.children[0]);
    cpp_int rhs = eval(node.children[1]);
    if (node.label == ">") return lhs > rhs;
    if (node.label == "<") return lhs < rhs;
    if (node.label == "==") return lhs == rhs;
    if (node.label == "!=") return lhs != rhs;
    throw InterpFault{"unknown comparison operator " + node.label};
  }

  cpp_int eval(int id) {
    const AstNode& node = ast_.node(id);
    switch (node.kind) {
      case NodeKind::IntLit:
        return cpp_int(node.label);
      case NodeKind::Var: {
        auto it = vars_.find(node.label);
        return it == vars_.end() ? cpp_int(0) : it->second;
      }
      case NodeKind::BinOp: {
        cpp_int lhs = eval(node.children[0]);
        cpp_int rhs = eval(node.children[1]);
        if (node.label == "+") return lhs + rhs;
        if (node.label == "-") return lhs - rhs;
        if (node.label == "*") return lhs * rhs;
        throw InterpFault{"unknown operator " + node.label};
      }
      default:
        throw InterpFault{std::string("expression expected, got node kind ") +
                          kind_name(node.kind)};
    }
  }

  const Ast& ast_;
  long long budget_;
  long long steps_ = 0;
  std::map<std::string, cpp_int> vars_;
};

void print_expr(const Ast& ast, int id, std::ostream& out) {
  const AstNode& node = ast.node(id);
  switch (node.kind) {
    case NodeKind::Var:
    case NodeKind::IntLit:
      out << node.label;
      return;
    case NodeKind::BinOp:
      out << '(';
      print_expr(ast, node.children[0], out);
      out << ' ' << node.label << ' ';
      print_expr(ast, node.children[1], out);
      out << ')';
      return;
    default:
      out << "?";
      return;
  }
}

void print_stmt(const Ast& ast, int id, std::ostream& out);

void print_stmt_list(const Ast& ast, int id, std::ostream& out) {
  const AstNode& node = ast.node(id);
  if (node.kind == NodeKind::Program || node.kind == NodeKind::Seq) {
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      if (i) out << "; ";
      print_stmt(ast, node.children[i], out);
    }
  } else {
    print_stmt(ast, id, out);
  }
}

void print_stmt(const Ast& ast, int id, std::ostream& out) {
  const AstNode& node = ast.node(id);
  switch (node.kind) {
    case NodeKind::Skip:
      out << "skip";
      return;
    case NodeKind::Assign:
      out << ast.node(node.children[0]).label << " := ";
      print_expr(ast, node.children[1], out);
      return;
    case NodeKind::While: {
      const AstNode& guard = ast.node(node.children[0]);
      out << "while ";
      print_expr(ast, guard.children[0], out);
      out << ' ' << guard.label << ' ';
      print_expr(ast, guard.children[1], out);
      out << " { ";
      print_stmt_list(ast, node.children[1], out);
      out << " }";
      return;
    }
    case NodeKind::If: {
      const AstNode& guard = ast.node(node.children[0]);
      out << "if ";
      print_expr(ast, guard.children[0], out);
      out << ' ' << guard.label << ' ';
      print_expr(ast, guard.children[1], out);
      out << " { ";
      print_stmt_list(ast, node.children[1], out);
      out << " } else { ";
      print_stmt_list(ast, node.children[2], out);
      out << " }";
      return;
    }
    default:
      out << "skip";
      return;
  }
}

void dfs_collect(const Ast& ast, int id, std::vector<std::pair<int, Span>>& out) {
  const AstNode& node = ast.node(id);
  out.emplace_back(id, node.span);
  for (int child : node.children) dfs_collect(ast, child, out);
}

bool nodes_equal(const Ast& a, int ida, const Ast& b, int idb) {
  const AstNode& na = a.node(ida);
  const AstNode& nb = b.node(idb);
  if (na.kind != nb.kind || na.label != nb.label) return false;
  if (na.children.size() != nb.children.size()) return false;
  for (std::size_t i = 0; i < na.children.size(); ++i) {
    if (!nodes_equal(a, na.children[i], b, nb.children[i])) return false;
  }
  return true;
}

}  // namespace

Ast parse(std::string_view source) { return Parser(source).run(); }

ExecutionOutcome interpret(const Ast& ast, long long budget) {
  if (budget < 1) return ExecutionOutcome::fault("budget must be >= 1");
  return Interp(ast, budget).run();
}

std::vector<std::pair<int, Span>> ast_leaf_partition(const Ast& ast) {
  std::vector<std::pair<int, Span>> out;
  out.reserve(ast.nodes.size());
  dfs_collect(ast, ast.root, out);
  return out;
}

std::string pretty_print(const Ast& ast) {
  std::ostringstream out;
  print_stmt_list(ast, ast.root, out);
  return out.str();
}

bool structurally_equal(const Ast& a, const Ast& b) {
  return nodes_equal(a, a.root, b, b.root);
}

}  // namespace termcast::minilang
