#pragma once

#include <morpde/common.hpp>
#include <morpde/nfunction.hpp>

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace morpde {

namespace detail {
struct ExprNode;
}

/// A parsed scalar expression of time and space, used for exponents, weights,
/// sources, initial data, and reference solutions in configuration files.
///
/// Grammar (usual precedence; ^ binds tightest and associates right):
///   expr    := term { ('+' | '-') term }
///   term    := unary { ('*' | '/') unary }
///   unary   := '-' unary | power
///   power   := primary [ '^' unary ]
///   primary := NUMBER | 't' | 'x1' | 'x2' | FUNC '(' expr { ',' expr } ')'
///            | '(' expr ')'
///   FUNC    := sin | cos | exp | abs (one argument)
///            | min | max           (two arguments)
///            | step                (four arguments)
///
/// step(s, s*, a, b) evaluates a where s <= s* and b where s > s*; the
/// threshold s* must be a constant subexpression. When the first argument is
/// exactly the variable t, the threshold is recorded as a time breakpoint so
/// grid construction can place a node on it.
class Expression {
 public:
  /// Empty expression; evaluating one raises config_error.
  Expression() = default;

  bool empty() const { return root_ == nullptr; }

  /// Canonical text (normalized spacing, minimal parentheses, 17-digit
  /// numeric literals). Parsing the canonical text reproduces the same tree.
  const std::string& text() const { return text_; }

  /// Thresholds of step() nodes whose switch argument is the variable t,
  /// sorted ascending, duplicates removed.
  const std::vector<double>& time_breakpoints() const { return breakpoints_; }

  /// Spatial arity the expression was parsed against (1 or 2).
  int dim() const { return dim_; }

  /// True when the expression never reads t, x1, or x2.
  bool is_constant() const;

  double operator()(double t, const VecD& x) const;

  /// Binds the expression as a shareable evaluator. The returned callable
  /// owns the tree; copies are cheap and evaluation is thread-safe.
  ScalarMap map() const;

 private:
  friend Expression parse_expression(std::string_view, int);
  std::shared_ptr<const detail::ExprNode> root_;
  std::string text_;
  std::vector<double> breakpoints_;
  int dim_ = 1;
};

/// Parses source text against the grammar above for a domain of spatial
/// dimension `dim` (1 or 2). Unknown identifiers, arity mistakes, use of x2
/// in one dimension, and malformed syntax raise config_error whose message
/// reports a 1-based column into `source`.
Expression parse_expression(std::string_view source, int dim);

}  // namespace morpde
