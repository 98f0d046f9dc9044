#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kanheat/errors.hpp"
#include "kanheat/gp.hpp"
#include "kanheat/kan.hpp"
#include "kanheat/snap.hpp"
#include "kanheat/symbolic.hpp"

using namespace kanheat;

namespace {

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(lo + (hi - lo) * i / (n - 1));
  return xs;
}

Dataset two_inputs(std::size_t rows, std::uint64_t seed, double (*f)(double, double)) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dataset d;
  d.rows = rows;
  d.cols = 2;
  d.feature_names = {"x1", "x2"};
  for (std::size_t r = 0; r < rows; ++r) {
    const double a = u(g), b = u(g);
    d.inputs.insert(d.inputs.end(), {a, b});
    d.targets.push_back(f(a, b));
  }
  return d;
}

}  // namespace

TEST(Complexity, Examples) {
  EXPECT_EQ(complexity(*make_constant(4.2)), 1);
  const ExprPtr line = simplify(make_sum({make_variable(0)}, {83.33}, 20.0));
  EXPECT_EQ(complexity(*line), 2);

  std::vector<ExprPtr> terms;
  for (int j = 0; j < 4; ++j) {
    terms.push_back(make_apply(find_operator("sin"), {1.0 + j, 0.1 * j, 1.0, 0.0}, make_variable(j)));
  }
  const ExprPtr eq9 = make_sum(terms, {0.5, -1.0, 2.0, 0.25}, 3.0);
  EXPECT_EQ(complexity(*eq9), 9);
}

TEST(Sexpr, RoundTrip) {
  const ExprPtr e = make_sum(
      {make_apply(find_operator("erfc"), {1.5, -0.25, 2.0, 0.1}, make_variable(0)),
       make_binary(Expr::Kind::Mul, make_variable(1), make_apply(find_operator("exp"), {0.3, 0.0, 1.0, 0.0}, make_variable(0)))},
      {1.0, -0.7}, 0.125);
  const std::string text = to_sexpr(*e);
  const ExprPtr back = parse_sexpr(text);
  EXPECT_TRUE(structurally_equal(*e, *back)) << text;
  EXPECT_EQ(to_sexpr(*back), text);
  const std::vector<double> x{0.3, -1.2};
  EXPECT_EQ(evaluate(*back, x), evaluate(*e, x));
  EXPECT_THROW(parse_sexpr("(sum 1 (var 0)"), DataError);
  EXPECT_THROW(parse_sexpr("(apply nope 1 0 1 0 (var 0))"), ConfigError);
}

TEST(Infix, IdentityNetwork) {
  KanNetwork net({1, 1}, 5, 3);
  lock_edge_symbolic(net, 0, 0, 0, "x", {1, 0, 1, 0}, false);
  const SymbolicFormula f = extract_formula(net);
  EXPECT_EQ(f.infix(), "x1");
  EXPECT_FALSE(f.partial);
}

TEST(Extract, LockedSingleLayerIsLinearSummation) {
  const int n = 25;
  KanNetwork net({n, 1}, 5, 3);
  std::vector<double> slope(n);
  for (int i = 0; i < n; ++i) {
    slope[static_cast<std::size_t>(i)] = 0.1 * (i + 1) * (i % 2 ? -1 : 1);
    lock_edge_symbolic(net, 0, i, 0, "x", {1.0, 0.0, slope[static_cast<std::size_t>(i)], 0.01 * i}, true);
  }
  net.layer(0).biases[0] = 2.5;
  const SymbolicFormula f = extract_formula(net);
  const auto lf = linear_form(f.root, n);
  ASSERT_TRUE(lf.has_value());
  double d = 2.5;
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(lf->coefs[static_cast<std::size_t>(i)], slope[static_cast<std::size_t>(i)], 1e-12);
    d += 0.01 * i;
  }
  EXPECT_NEAR(lf->intercept, d, 1e-12);
  EXPECT_EQ(f.numeric_nodes(), 0);
}

TEST(Extract, UnlockedEdgesMakePartialFormula) {
  Rng rng(2);
  const KanNetwork net = KanNetwork::random({2, 2, 1}, 5, 3, rng);
  const SymbolicFormula f = extract_formula(net);
  EXPECT_TRUE(f.partial);
  EXPECT_GT(f.numeric_nodes(), 0);
  for (double a : {-0.8, 0.1, 0.6}) {
    const std::vector<double> x{a, -a / 2};
    EXPECT_NEAR(f.evaluate(x), net.predict(x), 1e-12);
  }
  EXPECT_FALSE(linear_form(f.root, 2).has_value());
}

TEST(Denormalize, AffineFormulaInPhysicalUnits) {
  NormalizationSpec spec;
  spec.kind = NormalizationSpec::Kind::MinMax;
  spec.input_shift = {10.0};
  spec.input_scale = {5.0};
  spec.target_shift = 20.0;
  spec.target_scale = 4.0;
  SymbolicFormula f;
  f.variables = 1;
  f.root = make_sum({make_variable(0)}, {2.0}, 1.0);
  const SymbolicFormula p = denormalize(f, spec);
  for (double x : {10.0, 12.5, 15.0}) {
    EXPECT_NEAR(p.evaluate(std::vector<double>{x}), 4.0 * (2.0 * (x - 10.0) / 5.0 + 1.0) + 20.0, 1e-12);
  }
  const auto lf = linear_form(p.root, 1);
  ASSERT_TRUE(lf.has_value());
  EXPECT_NEAR(lf->coefs[0], 1.6, 1e-12);
  EXPECT_NEAR(lf->intercept, 8.0, 1e-12);
}

TEST(Snap, LineIsIdentity) {
  const auto xs = grid(-1.0, 1.0, 200);
  std::vector<double> ys;
  for (double x : xs) ys.push_back(2.0 * x + 3.0);
  SnapOptions opt;
  opt.simplicity_tolerance = 1e-6;
  const SnapResult r = snap_edge(xs, ys, default_library(), opt);
  ASSERT_TRUE(r.snapped);
  EXPECT_EQ(r.op->name, "x");
  EXPECT_NEAR(r.r2, 1.0, 1e-12);
  const auto& p = r.affine;
  for (double x : {-1.0, 0.0, 0.7}) EXPECT_NEAR(p.c * (p.a * x + p.b) + p.d, 2.0 * x + 3.0, 1e-6);
}

TEST(Snap, RecoversShiftedSine) {
  const auto xs = grid(-1.0, 1.0, 200);
  std::vector<double> ys;
  for (double x : xs) ys.push_back(3.0 * std::sin(2.0 * x + 1.0) - 0.5);
  const SnapResult r = snap_edge(xs, ys, default_library());
  ASSERT_TRUE(r.snapped);
  EXPECT_EQ(r.op->name, "sin");
  EXPECT_GE(r.r2, 0.999);
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double v = r.affine.c * std::sin(r.affine.a * xs[i] + r.affine.b) + r.affine.d;
    s += (v - ys[i]) * (v - ys[i]);
  }
  EXPECT_LE(std::sqrt(s / static_cast<double>(xs.size())), 1e-3);
  for (const auto& c : r.candidates) {
    if (!std::isfinite(c.r2)) continue;
    EXPECT_NEAR(c.r2, snap_r2(*c.op, c.affine, xs, ys), 1e-9) << c.op->name;
  }
}

TEST(Snap, NoiseIsRejected) {
  std::mt19937_64 g(17);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto xs = grid(-1.0, 1.0, 200);
  std::vector<double> ys;
  for (std::size_t i = 0; i < xs.size(); ++i) ys.push_back(n(g));
  const SnapResult r = snap_edge(xs, ys, default_library());
  EXPECT_FALSE(r.snapped);
}

TEST(Snap, RejectsTooFewSamples) {
  const auto xs = grid(0.0, 1.0, 5);
  EXPECT_THROW(snap_edge(xs, xs, default_library()), ConfigError);
}

TEST(Gp, ConstantTarget) {
  const Dataset d = two_inputs(50, 3, [](double, double) { return 7.0; });
  GpConfig cfg;
  cfg.population = 100;
  cfg.generations = 10;
  cfg.unary = make_library({"x", "sin", "exp"});
  cfg.seed = 1;
  const GpResult r = gp_search(d, cfg);
  EXPECT_EQ(r.complexity, 1);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(r.formula.evaluate(d.row(i)), 7.0, 1e-9);
}

TEST(Gp, SeededRunsAreIdentical) {
  const Dataset d = two_inputs(80, 4, [](double a, double b) { return a + b; });
  GpConfig cfg;
  cfg.population = 100;
  cfg.generations = 30;
  cfg.unary = make_library({"x", "sin", "exp"});
  cfg.seed = 5;
  const GpResult a = gp_search(d, cfg);
  const GpResult b = gp_search(d, cfg);
  EXPECT_EQ(to_sexpr(*a.raw), to_sexpr(*b.raw));
  EXPECT_EQ(a.fitness, b.fitness);
  EXPECT_EQ(a.best_fitness_trace, b.best_fitness_trace);
  cfg.parallel = false;
  const GpResult c = gp_search(d, cfg);
  EXPECT_EQ(to_sexpr(*a.raw), to_sexpr(*c.raw));
}

TEST(Gp, FitnessPenalizesComplexity) {
  const Dataset d = two_inputs(40, 6, [](double a, double b) { return a + b; });
  const ExprPtr exact = make_binary(Expr::Kind::Add, make_variable(0), make_variable(1));
  const ExprPtr padded = make_binary(Expr::Kind::Add, exact, make_binary(Expr::Kind::Mul, make_constant(0.0),
                                                                          make_variable(0)));
  // Complexity is counted on the simplified individual.
  EXPECT_NEAR(gp_fitness(*exact, d, 0.001), 1.0 - 0.001 * complexity(*simplify(exact)), 1e-12);
  EXPECT_EQ(gp_fitness(*padded, d, 0.001), gp_fitness(*exact, d, 0.001));
  const ExprPtr wobble = make_binary(Expr::Kind::Add, exact, make_apply(find_operator("sin"), {1, 0, 1, 0}, make_variable(0)));
  EXPECT_GT(gp_fitness(*exact, d, 0.001), gp_fitness(*wobble, d, 0.001));
}
