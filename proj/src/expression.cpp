#include <morpde/expression.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

namespace morpde {

namespace detail {

enum class NodeKind { Number, Variable, Unary, Binary, Call };

struct ExprNode {
  NodeKind kind = NodeKind::Number;
  double number = 0.0;                // Number
  int variable = 0;                   // Variable: 0 = t, 1 = x1, 2 = x2
  char op = 0;                        // Unary ('-') and Binary ('+-*/^')
  std::string func;                   // Call
  std::vector<std::shared_ptr<const ExprNode>> args;
};

}  // namespace detail

namespace {

using detail::ExprNode;
using detail::NodeKind;
using NodePtr = std::shared_ptr<const ExprNode>;

[[noreturn]] void fail(std::size_t column, const std::string& message) {
  throw config_error("column " + std::to_string(column + 1) + ": " + message);
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

enum class TokKind { Number, Ident, Op, LParen, RParen, Comma, End };

struct Token {
  TokKind kind = TokKind::End;
  double number = 0.0;
  std::string ident;
  char op = 0;
  std::size_t column = 0;  // 0-based offset into the source
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++i;
      continue;
    }
    Token tok;
    tok.column = i;
    if ((c >= '0' && c <= '9') || c == '.') {
      double value = 0.0;
      const char* begin = src.data() + i;
      const char* end = src.data() + src.size();
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc() || ptr == begin) fail(i, "malformed numeric literal");
      tok.kind = TokKind::Number;
      tok.number = value;
      i += static_cast<std::size_t>(ptr - begin);
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        ++j;
      }
      tok.kind = TokKind::Ident;
      tok.ident.assign(src.substr(i, j - i));
      i = j;
    } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
      tok.kind = TokKind::Op;
      tok.op = c;
      ++i;
    } else if (c == '(') {
      tok.kind = TokKind::LParen;
      ++i;
    } else if (c == ')') {
      tok.kind = TokKind::RParen;
      ++i;
    } else if (c == ',') {
      tok.kind = TokKind::Comma;
      ++i;
    } else {
      fail(i, std::string("unexpected character '") + c + "'");
    }
    out.push_back(std::move(tok));
  }
  Token end_tok;
  end_tok.kind = TokKind::End;
  end_tok.column = src.size();
  out.push_back(std::move(end_tok));
  return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

int function_arity(const std::string& name) {
  if (name == "sin" || name == "cos" || name == "exp" || name == "abs") return 1;
  if (name == "min" || name == "max") return 2;
  if (name == "step") return 4;
  return -1;
}

bool depends_on_variables(const NodePtr& node) {
  if (node->kind == NodeKind::Variable) return true;
  for (const auto& a : node->args) {
    if (depends_on_variables(a)) return true;
  }
  return false;
}

bool is_plain_t(const NodePtr& node) {
  return node->kind == NodeKind::Variable && node->variable == 0;
}

struct Parser {
  const std::vector<Token>& toks;
  std::size_t pos = 0;
  int dim = 1;
  std::vector<double> breakpoints;

  const Token& peek() const { return toks[pos]; }
  const Token& advance() { return toks[pos++]; }

  NodePtr parse_expr() {
    NodePtr left = parse_term();
    while (peek().kind == TokKind::Op && (peek().op == '+' || peek().op == '-')) {
      char op = advance().op;
      NodePtr right = parse_term();
      auto node = std::make_shared<ExprNode>();
      node->kind = NodeKind::Binary;
      node->op = op;
      node->args = {std::move(left), std::move(right)};
      left = std::move(node);
    }
    return left;
  }

  NodePtr parse_term() {
    NodePtr left = parse_unary();
    while (peek().kind == TokKind::Op && (peek().op == '*' || peek().op == '/')) {
      char op = advance().op;
      NodePtr right = parse_unary();
      auto node = std::make_shared<ExprNode>();
      node->kind = NodeKind::Binary;
      node->op = op;
      node->args = {std::move(left), std::move(right)};
      left = std::move(node);
    }
    return left;
  }

  NodePtr parse_unary() {
    if (peek().kind == TokKind::Op && peek().op == '-') {
      advance();
      NodePtr child = parse_unary();
      auto node = std::make_shared<ExprNode>();
      node->kind = NodeKind::Unary;
      node->op = '-';
      node->args = {std::move(child)};
      return node;
    }
    if (peek().kind == TokKind::Op && peek().op == '+') {
      advance();  // unary plus: no-op
      return parse_unary();
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (peek().kind == TokKind::Op && peek().op == '^') {
      advance();
      NodePtr exponent = parse_unary();  // right-associative, sign allowed
      auto node = std::make_shared<ExprNode>();
      node->kind = NodeKind::Binary;
      node->op = '^';
      node->args = {std::move(base), std::move(exponent)};
      return node;
    }
    return base;
  }

  NodePtr parse_primary() {
    const Token& tok = peek();
    if (tok.kind == TokKind::Number) {
      advance();
      auto node = std::make_shared<ExprNode>();
      node->kind = NodeKind::Number;
      node->number = tok.number;
      return node;
    }
    if (tok.kind == TokKind::LParen) {
      advance();
      NodePtr inner = parse_expr();
      if (peek().kind != TokKind::RParen) fail(peek().column, "expected ')'");
      advance();
      return inner;
    }
    if (tok.kind == TokKind::Ident) {
      advance();
      const std::string& name = tok.ident;
      if (peek().kind == TokKind::LParen) {
        int arity = function_arity(name);
        if (arity < 0) {
          if (name == "t" || name == "x1" || name == "x2") {
            fail(tok.column, "'" + name + "' is a variable, not a function");
          }
          fail(tok.column, "unknown function '" + name + "'");
        }
        advance();  // '('
        std::vector<NodePtr> args;
        if (peek().kind != TokKind::RParen) {
          args.push_back(parse_expr());
          while (peek().kind == TokKind::Comma) {
            advance();
            args.push_back(parse_expr());
          }
        }
        if (peek().kind != TokKind::RParen) {
          fail(peek().column, "expected ')' or ',' in argument list of '" + name + "'");
        }
        advance();
        if (static_cast<int>(args.size()) != arity) {
          fail(tok.column, "function '" + name + "' expects " + std::to_string(arity) +
                               " argument" + (arity == 1 ? "" : "s") + ", got " +
                               std::to_string(args.size()));
        }
        if (name == "step") {
          if (depends_on_variables(args[1])) {
            fail(tok.column, "step threshold must be a constant expression");
          }
          if (is_plain_t(args[0])) {
            breakpoints.push_back(evaluate_constant(args[1]));
          }
        }
        auto node = std::make_shared<ExprNode>();
        node->kind = NodeKind::Call;
        node->func = name;
        node->args = std::move(args);
        return node;
      }
      int variable = -1;
      if (name == "t") variable = 0;
      else if (name == "x1") variable = 1;
      else if (name == "x2") variable = 2;
      if (variable < 0) {
        if (function_arity(name) > 0) {
          fail(tok.column, "function '" + name + "' requires an argument list");
        }
        fail(tok.column, "unknown identifier '" + name + "'");
      }
      if (variable == 2 && dim < 2) {
        fail(tok.column, "variable x2 requires a two-dimensional domain");
      }
      auto node = std::make_shared<ExprNode>();
      node->kind = NodeKind::Variable;
      node->variable = variable;
      return node;
    }
    if (tok.kind == TokKind::End) fail(tok.column, "unexpected end of expression");
    if (tok.kind == TokKind::RParen) fail(tok.column, "unexpected ')'");
    if (tok.kind == TokKind::Comma) fail(tok.column, "unexpected ','");
    fail(tok.column, std::string("unexpected operator '") + tok.op + "'");
  }

  static double evaluate_constant(const NodePtr& node);
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

double eval_node(const ExprNode& node, double t, const VecD& x) {
  switch (node.kind) {
    case NodeKind::Number:
      return node.number;
    case NodeKind::Variable: {
      if (node.variable == 0) return t;
      int idx = node.variable - 1;
      if (idx >= x.size()) {
        throw config_error("expression reads x" + std::to_string(node.variable) +
                           " but the evaluation point has only " +
                           std::to_string(x.size()) + " coordinate(s)");
      }
      return x(idx);
    }
    case NodeKind::Unary:
      return -eval_node(*node.args[0], t, x);
    case NodeKind::Binary: {
      double a = eval_node(*node.args[0], t, x);
      double b = eval_node(*node.args[1], t, x);
      switch (node.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        case '^': return std::pow(a, b);
      }
      return 0.0;
    }
    case NodeKind::Call: {
      if (node.func == "step") {
        double s = eval_node(*node.args[0], t, x);
        double threshold = eval_node(*node.args[1], t, x);
        return s <= threshold ? eval_node(*node.args[2], t, x)
                              : eval_node(*node.args[3], t, x);
      }
      double a = eval_node(*node.args[0], t, x);
      if (node.func == "sin") return std::sin(a);
      if (node.func == "cos") return std::cos(a);
      if (node.func == "exp") return std::exp(a);
      if (node.func == "abs") return std::abs(a);
      double b = eval_node(*node.args[1], t, x);
      if (node.func == "min") return std::min(a, b);
      return std::max(a, b);  // "max"
    }
  }
  return 0.0;
}

double Parser::evaluate_constant(const NodePtr& node) {
  return eval_node(*node, 0.0, vec1(0.0));
}

// ---------------------------------------------------------------------------
// Canonical printing
// ---------------------------------------------------------------------------

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int precedence(const ExprNode& node) {
  switch (node.kind) {
    case NodeKind::Binary:
      if (node.op == '+' || node.op == '-') return 1;
      if (node.op == '*' || node.op == '/') return 2;
      return 4;  // '^'
    case NodeKind::Unary:
      return 3;
    default:
      return 5;  // atoms and calls never need parentheses
  }
}

void print_node(const ExprNode& node, std::string& out);

void print_child(const ExprNode& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print_node(child, out);
  if (parens) out += ')';
}

void print_node(const ExprNode& node, std::string& out) {
  switch (node.kind) {
    case NodeKind::Number:
      out += format_number(node.number);
      return;
    case NodeKind::Variable:
      out += node.variable == 0 ? "t" : (node.variable == 1 ? "x1" : "x2");
      return;
    case NodeKind::Unary: {
      out += '-';
      // Parenthesize anything that is not an atom, a call, or a '^' chain so
      // the printed form parses back to the identical tree.
      print_child(*node.args[0], precedence(*node.args[0]) <= 3, out);
      return;
    }
    case NodeKind::Binary: {
      int p = precedence(node);
      const ExprNode& lhs = *node.args[0];
      const ExprNode& rhs = *node.args[1];
      if (node.op == '^') {
        print_child(lhs, precedence(lhs) <= 4, out);
        out += '^';
        print_child(rhs, precedence(rhs) < 3, out);
      } else {
        print_child(lhs, precedence(lhs) < p, out);
        out += ' ';
        out += node.op;
        out += ' ';
        // Equal precedence on the right keeps its parentheses so shape (and
        // floating-point evaluation order) survives a print/parse cycle.
        print_child(rhs, precedence(rhs) <= p, out);
      }
      return;
    }
    case NodeKind::Call: {
      out += node.func;
      out += '(';
      for (std::size_t i = 0; i < node.args.size(); ++i) {
        if (i) out += ", ";
        print_node(*node.args[i], out);
      }
      out += ')';
      return;
    }
  }
}

bool node_is_constant(const ExprNode& node) {
  if (node.kind == NodeKind::Variable) return false;
  for (const auto& a : node.args) {
    if (!node_is_constant(*a)) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Expression
// ---------------------------------------------------------------------------

bool Expression::is_constant() const {
  if (!root_) return true;
  return node_is_constant(*root_);
}

double Expression::operator()(double t, const VecD& x) const {
  if (!root_) throw config_error("evaluating an empty expression");
  return eval_node(*root_, t, x);
}

ScalarMap Expression::map() const {
  if (!root_) throw config_error("binding an empty expression");
  auto root = root_;
  return [root](double t, const VecD& x) { return eval_node(*root, t, x); };
}

Expression parse_expression(std::string_view source, int dim) {
  if (dim != 1 && dim != 2) {
    throw config_error("expression dimension must be 1 or 2, got " + std::to_string(dim));
  }
  bool blank = true;
  for (char c : source) {
    if (c != ' ' && c != '\t' && c != '\r' && c != '\n') blank = false;
  }
  if (blank) throw config_error("column 1: empty expression");

  std::vector<Token> toks = tokenize(source);
  Parser parser{toks, 0, dim, {}};
  NodePtr root = parser.parse_expr();
  if (parser.peek().kind != TokKind::End) {
    const Token& tok = parser.peek();
    std::string what;
    switch (tok.kind) {
      case TokKind::Number: what = "numeric literal"; break;
      case TokKind::Ident: what = "'" + tok.ident + "'"; break;
      case TokKind::RParen: what = "')'"; break;
      case TokKind::Comma: what = "','"; break;
      default: what = std::string("'") + tok.op + "'"; break;
    }
    fail(tok.column, "unexpected trailing " + what);
  }

  std::sort(parser.breakpoints.begin(), parser.breakpoints.end());
  parser.breakpoints.erase(
      std::unique(parser.breakpoints.begin(), parser.breakpoints.end()),
      parser.breakpoints.end());

  Expression expr;
  expr.root_ = std::move(root);
  expr.dim_ = dim;
  expr.breakpoints_ = std::move(parser.breakpoints);
  std::string text;
  print_node(*expr.root_, text);
  expr.text_ = std::move(text);
  return expr;
}

}  // namespace morpde
