#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kanheat/dataset.hpp"
#include "kanheat/kan.hpp"
#include "kanheat/operators.hpp"

namespace kanheat {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression node. Subtrees may be shared.
///   Constant  value
///   Variable  x[var]
///   Apply     c * op(a * child + b) + d
///   Sum       constant + sum_i coefs[i] * children[i]
///   Add, Sub, Mul, Div   binary, Div is protected (|den| < 1e-12 gives 1)
///   Numeric   an unsnapped spline edge applied to its child
struct Expr {
  enum class Kind { Constant, Variable, Apply, Sum, Add, Sub, Mul, Div, Numeric };
  Kind kind = Kind::Constant;
  double value = 0.0;
  int var = 0;
  const Operator* op = nullptr;
  AffineParams affine;
  std::vector<ExprPtr> children;
  std::vector<double> coefs;
  std::shared_ptr<const SplineEdge> edge;
};

ExprPtr make_constant(double v);
ExprPtr make_variable(int index);
ExprPtr make_apply(const Operator& op, AffineParams affine, ExprPtr child);
ExprPtr make_sum(std::vector<ExprPtr> terms, std::vector<double> coefs, double constant);
ExprPtr make_binary(Expr::Kind kind, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_numeric(SplineEdge edge, ExprPtr child);

double evaluate(const Expr& e, std::span<const double> x);
// Collapses affine maps, flattens sums, merges identical terms and folds
// constant subtrees.
ExprPtr simplify(const ExprPtr& e);
// Distinct top-level additive terms (constants together count once) plus one
// per non-identity operator application and one per product or quotient of
// two non-constant factors. Never below 1.
int complexity(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);
std::size_t node_count(const Expr& e);
int depth(const Expr& e);
int numeric_node_count(const Expr& e);
// Replaces every Variable(i) with replacement[i].
ExprPtr substitute(const ExprPtr& e, const std::vector<ExprPtr>& replacement);

/// Infix text with shortest round-trip constants, e.g. `3.11*sin(0.98*x1 - 4.21) + 28.72`.
/// Variables print as x1..xn unless names are given.
std::string to_infix(const Expr& e, const std::vector<std::string>& names = {});
std::string to_sexpr(const Expr& e);
ExprPtr parse_sexpr(const std::string& text);

// Coefficients and intercept when the expression is affine in the variables.
struct LinearForm {
  std::vector<double> coefs;
  double intercept = 0.0;
};
std::optional<LinearForm> linear_form(const ExprPtr& e, int variables);

struct SymbolicFormula {
  ExprPtr root;
  int variables = 0;
  // Set when some edges could not be snapped and stay as numeric residuals.
  bool partial = false;

  double evaluate(std::span<const double> x) const { return kanheat::evaluate(*root, x); }
  std::vector<double> evaluate(const Dataset& data) const;
  int complexity() const { return kanheat::complexity(*root); }
  int numeric_nodes() const { return numeric_node_count(*root); }
  std::string infix(const std::vector<std::string>& names = {}) const { return to_infix(*root, names); }
  std::string sexpr() const { return to_sexpr(*root); }
};

/// Composes every edge through the topology: locked edges become operator
/// applications, unlocked ones numeric residual nodes.
SymbolicFormula extract_formula(const KanNetwork& net);

/// Rewrites a formula learned on normalized data into physical units.
SymbolicFormula denormalize(const SymbolicFormula& f, const NormalizationSpec& spec);

}  // namespace kanheat
