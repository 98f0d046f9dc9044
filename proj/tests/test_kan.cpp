#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "kanheat/checkpoint.hpp"
#include "kanheat/errors.hpp"
#include "kanheat/kan.hpp"
#include "kanheat/kernels.hpp"
#include "kanheat/training.hpp"
#include "oracles.hpp"

using namespace kanheat;

namespace {

SplineEdge fitted_edge(double lo, double hi, int G, int k, double slope, double intercept) {
  SplineEdge e(KnotGrid(lo, hi, G, k));
  e.base_weight = 0.0;
  e.spline_weight = 1.0;
  DenseMatrix design(200, static_cast<std::size_t>(G + k));
  std::vector<double> target(200);
  for (std::size_t p = 0; p < 200; ++p) {
    const double x = lo + (hi - lo) * static_cast<double>(p) / 199.0;
    const auto b = bspline_basis(e.grid, x);
    for (std::size_t c = 0; c < b.size(); ++c) design(p, c) = b[c];
    target[p] = slope * x + intercept;
  }
  e.coeffs = solve_least_squares(design, target).coeffs;
  return e;
}

Dataset random_batch(int cols, std::size_t rows, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Dataset d;
  d.rows = rows;
  d.cols = static_cast<std::size_t>(cols);
  for (int c = 0; c < cols; ++c) d.feature_names.push_back("x" + std::to_string(c + 1));
  for (std::size_t r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) d.inputs.push_back(u(rng));
    d.targets.push_back(u(rng));
  }
  return d;
}

}  // namespace

TEST(Edge, LockedIdentity) {
  KanNetwork net({1, 1}, 5, 3);
  lock_edge_symbolic(net, 0, 0, 0, "x", {1, 0, 1, 0}, false);
  EXPECT_DOUBLE_EQ(edge_eval(net.edge(0, 0, 0), 0.7), 0.7);
}

TEST(Edge, ConstantCoefficients) {
  SplineEdge e(KnotGrid(0.0, 1.0, 5, 3));
  e.base_weight = 0.0;
  e.spline_weight = 1.0;
  e.coeffs.assign(e.coeffs.size(), 2.5);
  for (double x : {0.0, 0.13, 0.5, 0.99, 1.0}) EXPECT_NEAR(edge_eval(e, x), 2.5, 1e-12);
}

TEST(Edge, LeastSquaresFitOfLine) {
  const SplineEdge e = fitted_edge(0.0, 1.0, 5, 3, 2.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double x = i / 99.0;
    EXPECT_NEAR(edge_eval(e, x), 2.0 * x + 3.0, 1e-3);
  }
}

TEST(Edge, SinLock) {
  KanNetwork net({1, 1}, 5, 3);
  lock_edge_symbolic(net, 0, 0, 0, "sin", {2.0, 1.0, 3.0, -0.5}, true);
  EXPECT_NEAR(edge_eval(net.edge(0, 0, 0), 0.25), 3.0 * std::sin(1.5) - 0.5, 1e-15);
  EXPECT_THROW(lock_edge_symbolic(net, 0, 0, 0, "nope", {}, false), ConfigError);
}

TEST(Forward, IdentitySum) {
  KanNetwork net({2, 1}, 5, 3);
  lock_edge_symbolic(net, 0, 0, 0, "x", {}, false);
  lock_edge_symbolic(net, 0, 1, 0, "x", {}, false);
  EXPECT_NEAR(net.predict(std::vector<double>{0.2, 0.3}), 0.5, 1e-15);
}

TEST(Forward, ConstantZeroEdgesGiveBias) {
  KanNetwork net({3, 1}, 5, 3);
  for (int i = 0; i < 3; ++i) lock_edge_symbolic(net, 0, i, 0, "0", {}, false);
  net.layer(0).biases[0] = 1.75;
  EXPECT_DOUBLE_EQ(net.predict(std::vector<double>{0.1, -4.0, 9.0}), 1.75);
}

TEST(Forward, MatchesNestedLoopOracle) {
  Rng rng(17);
  KanNetwork net = KanNetwork::random({3, 4, 2, 1}, 5, 3, rng);
  lock_edge_symbolic(net, 1, 2, 1, "sin", {1.3, -0.2, 0.7, 0.1}, true);
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  for (int t = 0; t < 50; ++t) {
    const std::vector<double> x{u(g), u(g), u(g)};
    EXPECT_NEAR(net.predict(x), oracle::kan_forward(net, x), 1e-12);
  }
  EXPECT_EQ(net.forward(std::vector<double>{0.1, 0.2, 0.3}).size(), 1u);
}

TEST(GridRefit, NoOpWhenCovered) {
  Rng rng(4);
  KanNetwork net = KanNetwork::random({1, 1}, 5, 3, rng);
  const KanNetwork before = net;
  std::vector<double> xs;
  for (int i = 0; i <= 50; ++i) xs.push_back(-1.0 + 2.0 * i / 50.0);
  grid_refit(net, xs, xs.size());
  for (double x : xs) EXPECT_NEAR(net.predict(std::vector<double>{x}), before.predict(std::vector<double>{x}), 1e-6);
}

TEST(GridRefit, CoversWiderSamplesAndKeepsLine) {
  KanNetwork net({1, 1}, 5, 3, 0.0, 1.0);
  net.edge(0, 0, 0) = fitted_edge(0.0, 1.0, 5, 3, 2.0, 3.0);
  std::vector<double> xs;
  for (int i = 0; i <= 100; ++i) xs.push_back(-0.5 + 2.0 * i / 100.0);
  const RefitReport rep = grid_refit(net, xs, xs.size());
  EXPECT_EQ(rep.edges_refit, 1);
  const auto& g = net.edge(0, 0, 0).grid;
  EXPECT_LE(g.lo(), -0.5);
  EXPECT_GE(g.hi(), 1.5);
  std::size_t clamped = 0;
  for (double x : xs) {
    bool c = false;
    net.edge(0, 0, 0).eval(x, c);
    clamped += c;
  }
  EXPECT_EQ(clamped, 0u);
  for (double x : xs) EXPECT_NEAR(edge_eval(net.edge(0, 0, 0), x), 2.0 * x + 3.0, 1e-3) << x;
}

TEST(L2Penalty, Examples) {
  KanNetwork zero({2, 2, 1}, 3, 2);
  for (int l = 0; l < zero.depth(); ++l) {
    for (auto& e : zero.layer(l).edges) e.base_weight = e.spline_weight = 0.0;
  }
  EXPECT_EQ(l2_penalty(zero), 0.0);

  KanNetwork one({1, 1}, 1, 1);
  auto& e = one.edge(0, 0, 0);
  e.coeffs = {1.0, 2.0};
  e.base_weight = e.spline_weight = 0.0;
  EXPECT_DOUBLE_EQ(l2_penalty(one), 5.0);

  Rng rng(8);
  const KanNetwork net = KanNetwork::random({2, 3, 1}, 5, 3, rng);
  const auto p = net.parameters();
  const auto mask = net.l2_mask();
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += mask[i] ? p[i] * p[i] : 0.0;
  EXPECT_NEAR(l2_penalty(net), s, 1e-12);
}

TEST(Prune, TinyThresholdKeepsEverything) {
  Rng rng(9);
  KanNetwork net = KanNetwork::random({2, 3, 1}, 5, 3, rng);
  const KanNetwork before = net;
  const Dataset d = random_batch(2, 64, 1);
  const PruneReport rep = prune(net, d.inputs, d.rows, 1e-300);
  EXPECT_EQ(rep.edges_pruned, 0);
  EXPECT_TRUE(net == before);
}

TEST(Prune, DeadEdgeRemoved) {
  Rng rng(10);
  KanNetwork net = KanNetwork::random({2, 1}, 5, 3, rng);
  auto& dead = net.edge(0, 1, 0);
  dead.coeffs.assign(dead.coeffs.size(), 0.0);
  dead.base_weight = 0.0;
  const Dataset d = random_batch(2, 64, 2);
  prune(net, d.inputs, d.rows, 1e-9);
  EXPECT_TRUE(net.edge(0, 1, 0).is_zero());
  EXPECT_FALSE(net.edge(0, 0, 0).locked());
}

TEST(Prune, IrrelevantInputPrunedAfterTraining) {
  std::mt19937_64 g(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dataset d;
  d.rows = 500;
  d.cols = 2;
  d.feature_names = {"x1", "x2"};
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double x1 = u(g), x2 = u(g);
    d.inputs.insert(d.inputs.end(), {x1, x2});
    d.targets.push_back(std::sin(2.0 * x1));
  }
  const DatasetSplits sp = apply_split(d, shuffle_split(d.rows, 0.8, 0.2, 1));
  Rng rng(13);
  KanNetwork net = KanNetwork::random({2, 1}, 5, 3, rng);
  TrainConfig cfg;
  cfg.optimizer = OptimizerKind::Lbfgs;
  cfg.max_epochs = 200;
  cfg.early_stop_patience = 20;
  cfg.l2_coeff = 1e-4;
  train(net, sp.train, sp.val, cfg);

  // Ablation: contribution spread of the x2 edge before pruning.
  std::vector<double> contrib;
  for (std::size_t r = 0; r < d.rows; ++r) contrib.push_back(edge_eval(net.edge(0, 1, 0), d.at(r, 1)));
  const double mean = std::accumulate(contrib.begin(), contrib.end(), 0.0) / contrib.size();
  double rms = 0.0;
  for (double c : contrib) rms += (c - mean) * (c - mean);
  rms = std::sqrt(rms / contrib.size());

  prune(net, d.inputs, d.rows, 0.1);
  EXPECT_TRUE(net.edge(0, 1, 0).is_zero());
  EXPECT_FALSE(net.edge(0, 0, 0).locked());
  EXPECT_LT(rms, 1e-3);
}

TEST(Lock, AllLinearSingleLayerIsAffine) {
  KanNetwork net({25, 1}, 5, 3);
  std::vector<double> slope(25);
  for (int i = 0; i < 25; ++i) {
    slope[static_cast<std::size_t>(i)] = 0.01 * (i + 1);
    lock_edge_symbolic(net, 0, i, 0, "x", {1.0, 0.0, slope[static_cast<std::size_t>(i)], 0.0}, true);
  }
  net.layer(0).biases[0] = -3.0;
  std::vector<double> x(25);
  for (int t = 0; t < 5; ++t) {
    double expected = -3.0;
    for (int i = 0; i < 25; ++i) {
      x[static_cast<std::size_t>(i)] = 20.0 + t + 0.3 * i;
      expected += slope[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    }
    EXPECT_NEAR(net.predict(x), expected, 1e-12);
  }
  EXPECT_EQ(net.parameter_count(), 25u * 4 + 1);
}

TEST(Gradient, MatchesCentralDifferencesOverHundredPerturbations) {
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 100; ++seed) {
    Rng rng(seed);
    KanNetwork net = KanNetwork::random({2, 3, 1}, 4, 3, rng);
    lock_edge_symbolic(net, 1, 1, 0, "sin", {1.1, 0.2, 0.8, -0.1}, true);
    const Dataset batch = random_batch(2, 16, seed, -0.9, 0.9);
    const auto params = net.parameters();
    const auto grad = gradients(net, batch, 1e-3);
    KanNetwork probe = net;
    const auto f = [&](const std::vector<double>& p) {
      probe.set_parameters(p);
      return objective(probe, batch, 1e-3);
    };
    // One random coordinate per perturbation, two-sided difference h = 1e-5.
    std::mt19937_64 pick(seed);
    for (int t = 0; t < 25 && checked < 100; ++t, ++checked) {
      const std::size_t i = pick() % params.size();
      std::vector<double> p = params;
      p[i] += 1e-5;
      const double fp = f(p);
      p[i] -= 2e-5;
      const double fm = f(p);
      const double fd = (fp - fm) / 2e-5;
      EXPECT_LE(std::abs(grad[i] - fd) / std::max(1e-2, std::abs(fd)), 1e-4) << "seed " << seed << " param " << i;
    }
  }
}

TEST(Gradient, FullVectorOnSmallNet) {
  Rng rng(21);
  KanNetwork net = KanNetwork::random({3, 2, 1}, 5, 3, rng);
  const Dataset batch = random_batch(3, 16, 21, -0.9, 0.9);
  const auto grad = gradients(net, batch);
  KanNetwork probe = net;
  const double err = oracle::fd_gradient_error(
      [&](const std::vector<double>& p) {
        probe.set_parameters(p);
        return objective(probe, batch);
      },
      net.parameters(), grad);
  EXPECT_LE(err, 1e-4);
}

TEST(Gradient, AllFrozenIsEmpty) {
  KanNetwork net({2, 1}, 5, 3);
  lock_edge_symbolic(net, 0, 0, 0, "x", {}, false);
  lock_edge_symbolic(net, 0, 1, 0, "x", {}, false);
  const Dataset batch = random_batch(2, 4, 1);
  const auto g = gradients(net, batch);
  ASSERT_EQ(g.size(), 1u);  // the output bias remains
  EXPECT_EQ(net.parameter_count(), 1u);
}

TEST(Kernels, ParallelMatchesSerial) {
  Rng rng(31);
  const KanNetwork net = KanNetwork::random({4, 6, 1}, 5, 3, rng);
  const Dataset batch = random_batch(4, 333, 31);
  std::vector<double> gs(net.parameter_count()), gp(net.parameter_count());
  const double ls = loss_and_gradient_serial(net, BatchView{&batch, {}}, 1e-4, gs);
  const double lp = loss_and_gradient_parallel(net, BatchView{&batch, {}}, 1e-4, gp);
  EXPECT_NEAR(ls, lp, 1e-12 * std::abs(ls));
  for (std::size_t i = 0; i < gs.size(); ++i) EXPECT_NEAR(gs[i], gp[i], 1e-12 * (1.0 + std::abs(gs[i])));
  EXPECT_EQ(predict_serial(net, batch), predict_parallel(net, batch));
}

TEST(Checkpoint, RoundTripIsExact) {
  Rng rng(41);
  KanNetwork net = KanNetwork::random({2, 3, 1}, 5, 3, rng);
  lock_edge_symbolic(net, 0, 1, 2, "exp", {0.3, -0.1, 1.7, 0.25}, true);
  lock_edge_symbolic(net, 1, 0, 0, "0", {}, false);
  std::stringstream ss;
  save_checkpoint(net, ss);
  const KanNetwork back = load_kan_checkpoint(ss);
  EXPECT_TRUE(back == net);
  std::stringstream bad("not a checkpoint\n");
  EXPECT_THROW(load_kan_checkpoint(bad), DataError);
}

TEST(Topology, RemoveHiddenNode) {
  Rng rng(51);
  KanNetwork net = KanNetwork::random({2, 3, 1}, 5, 3, rng);
  net.remove_hidden_node(1, 1);
  EXPECT_EQ(net.widths(), (std::vector<int>{2, 2, 1}));
  EXPECT_EQ(net.layer(0).edges.size(), 4u);
  EXPECT_EQ(net.layer(1).edges.size(), 2u);
}
