#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "kanheat/checkpoint.hpp"
#include "kanheat/errors.hpp"
#include "kanheat/kernels.hpp"
#include "kanheat/lbfgs.hpp"
#include "kanheat/metrics.hpp"
#include "kanheat/mlp.hpp"
#include "kanheat/training.hpp"
#include "oracles.hpp"

using namespace kanheat;

namespace {

Dataset line_data(std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dataset d;
  d.rows = rows;
  d.cols = 2;
  d.feature_names = {"x1", "x2"};
  for (std::size_t r = 0; r < rows; ++r) {
    const double a = u(g), b = u(g);
    d.inputs.insert(d.inputs.end(), {a, b});
    d.targets.push_back(a);
  }
  return d;
}

double mlp_reference(const MlpNetwork& net, const std::vector<double>& x) {
  std::vector<double> cur = x;
  for (int l = 0; l < net.depth(); ++l) {
    const auto& w = net.weights(l);
    const auto& b = net.biases(l);
    const std::size_t n_in = cur.size();
    std::vector<double> next(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) {
      double s = b[j];
      for (std::size_t i = 0; i < n_in; ++i) s += w[j * n_in + i] * cur[i];
      next[j] = (l + 1 < net.depth()) ? std::max(0.0, s) : s;
    }
    cur = next;
  }
  return cur.front();
}

}  // namespace

TEST(Mlp, MatchesNestedLoopOracle) {
  Rng rng(3);
  const MlpNetwork net = MlpNetwork::random({7, 64, 32, 1}, rng);
  std::mt19937_64 g(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(7);
    for (double& v : x) v = n(g);
    EXPECT_NEAR(net.predict(x), mlp_reference(net, x), 1e-12);
  }
}

TEST(Mlp, GradientMatchesCentralDifferences) {
  Rng rng(5);
  MlpNetwork net = MlpNetwork::random({3, 8, 4, 1}, rng);
  Dataset batch;
  batch.rows = 16;
  batch.cols = 3;
  batch.feature_names = {"a", "b", "c"};
  std::mt19937_64 g(6);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 3; ++c) batch.inputs.push_back(n(g));
    batch.targets.push_back(n(g));
  }
  const auto grad = gradients(net, batch, 1e-3);
  MlpNetwork probe = net;
  const double err = oracle::fd_gradient_error(
      [&](const std::vector<double>& p) {
        probe.set_parameters(p);
        return objective(probe, batch, 1e-3);
      },
      net.parameters(), grad);
  EXPECT_LE(err, 1e-4);
}

TEST(Mlp, PiecewiseLinearOnSharedPattern) {
  Rng rng(7);
  const MlpNetwork net = MlpNetwork::random({2, 6, 1}, rng);
  const std::vector<double> u{0.3, -0.2};
  std::vector<double> v{0.3 + 1e-4, -0.2 + 2e-4};
  for (double lam : {0.1, 0.5, 0.9}) {
    const std::vector<double> w{lam * u[0] + (1 - lam) * v[0], lam * u[1] + (1 - lam) * v[1]};
    EXPECT_NEAR(net.predict(w), lam * net.predict(u) + (1 - lam) * net.predict(v), 1e-9);
  }
}

TEST(Mlp, CheckpointRoundTrip) {
  Rng rng(8);
  const MlpNetwork net = MlpNetwork::random({7, 5, 1}, rng);
  std::stringstream ss;
  save_checkpoint(net, ss);
  EXPECT_TRUE(load_mlp_checkpoint(ss) == net);
}

TEST(Gradient, LinearHandDerivative) {
  // y = w x with w = 1 on (x = 1, y = 0): d/dw (w - 0)^2 = 2.
  MlpNetwork net({1, 1});
  net.weights(0) = {1.0};
  Dataset d;
  d.rows = 1;
  d.cols = 1;
  d.feature_names = {"x"};
  d.inputs = {1.0};
  d.targets = {0.0};
  const auto g = gradients(net, d);
  EXPECT_DOUBLE_EQ(g[0], 2.0);
}

TEST(Adam, FirstStepAndZeroGradient) {
  std::vector<double> p{1.0};
  AdamState s(1);
  adam_step(p, std::vector<double>{0.0}, s, 0.001);
  EXPECT_EQ(p[0], 1.0);

  std::vector<double> q{0.0};
  AdamState t(1);
  adam_step(q, std::vector<double>{1.0}, t, 0.001);
  EXPECT_NEAR(q[0], -0.001 / (1.0 + 1e-8), 1e-15);
  const double after_one = q[0];
  adam_step(q, std::vector<double>{1.0}, t, 0.001);
  EXPECT_LT(q[0], after_one);
}

TEST(Schedule, Values) {
  EXPECT_DOUBLE_EQ(Schedule::constant().at(0.1, 12345), 0.1);
  EXPECT_NEAR(Schedule::exp_decay(0.95, 1000).at(1e-3, 1000), 0.95e-3, 1e-18);
  EXPECT_NEAR(Schedule::exp_decay(0.95, 1000).at(1e-3, 0), 1e-3, 1e-18);
  EXPECT_NEAR(Schedule::cosine(5000).at(5e-4, 0), 5e-4, 1e-18);
  EXPECT_NEAR(Schedule::cosine(5000).at(5e-4, 2500), 2.5e-4, 1e-12);
  EXPECT_NEAR(Schedule::cosine(5000).at(5e-4, 5000), 0.0, 1e-18);
  EXPECT_THROW(Schedule::exp_decay(1.5, 10).validate(), ConfigError);
  EXPECT_THROW(Schedule::cosine(0).validate(), ConfigError);
}

TEST(Lbfgs, QuadraticAndRosenbrock) {
  const auto quad = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * (x[0] - 3.0);
    return (x[0] - 3.0) * (x[0] - 3.0);
  };
  const auto q = lbfgs_minimize(quad, {0.0});
  EXPECT_NEAR(q.x[0], 3.0, 1e-6);
  EXPECT_LE(q.iterations, 5);

  const auto rosen = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  LbfgsOptions opt;
  opt.max_iterations = 500;
  const auto r = lbfgs_minimize(rosen, {-1.2, 1.0}, opt);
  EXPECT_LE(r.value, 1e-6);

  const auto at_opt = lbfgs_minimize(quad, {3.0});
  EXPECT_EQ(at_opt.iterations, 0);
}

TEST(Train, RealizableTargetAndDeterminism) {
  const Dataset d = line_data(400, 1);
  const DatasetSplits sp = apply_split(d, shuffle_split(d.rows, 0.7, 0.15, 2));
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 60;
  cfg.seed = 3;
  cfg.grid_refit_every = 50;
  Rng g1(9), g2(9);
  KanNetwork a = KanNetwork::random({2, 1}, 5, 3, g1);
  KanNetwork b = KanNetwork::random({2, 1}, 5, 3, g2);
  const TrainHistory ha = train(a, sp.train, sp.val, cfg);
  const TrainHistory hb = train(b, sp.train, sp.val, cfg);
  ASSERT_EQ(ha.rows.size(), hb.rows.size());
  for (std::size_t i = 0; i < ha.rows.size(); ++i) {
    EXPECT_EQ(ha.rows[i].train_loss, hb.rows[i].train_loss);
    EXPECT_EQ(ha.rows[i].val_loss, hb.rows[i].val_loss);
  }
  EXPECT_TRUE(a == b);
  EXPECT_GE(r2(sp.val.targets, predict(a, sp.val)), 0.99);
}

TEST(Train, PatienceStopsOnWorseningValidation) {
  // Validation targets are the negated training targets, so any progress on
  // the training loss makes the validation loss worse.
  Dataset tr = line_data(64, 5);
  Dataset va = tr;
  for (double& y : va.targets) y = -y;
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 50;
  cfg.early_stop_patience = 1;
  cfg.batch_size = 0;
  MlpNetwork net({2, 1});
  net.weights(0) = {0.0, 0.0};
  const TrainHistory h = train(net, tr, va, cfg);
  EXPECT_EQ(h.rows.size(), 2u);
  EXPECT_EQ(h.best_epoch, 1);
  EXPECT_EQ(h.stop_reason, "early_stop");
}

TEST(Train, DivergenceIsReported) {
  Dataset d = line_data(32, 7);
  d.targets[3] = std::numeric_limits<double>::infinity();
  TrainConfig cfg;
  cfg.max_epochs = 3;
  Rng rng(1);
  MlpNetwork net = MlpNetwork::random({2, 4, 1}, rng);
  EXPECT_THROW(train(net, d, d, cfg), NumericError);
}

TEST(Kernels, ParallelMlpIndependentOfSchedule) {
  Rng rng(12);
  const MlpNetwork net = MlpNetwork::random({7, 64, 32, 1}, rng);
  Dataset d;
  d.rows = 257;
  d.cols = 7;
  d.feature_names = {"a", "b", "c", "d", "e", "f", "g"};
  std::mt19937_64 g(13);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t i = 0; i < d.rows * d.cols; ++i) d.inputs.push_back(n(g));
  for (std::size_t i = 0; i < d.rows; ++i) d.targets.push_back(n(g));
  std::vector<double> g1(net.parameter_count()), g2(net.parameter_count());
  const double l1 = loss_and_gradient_parallel(net, BatchView{&d, {}}, 0.0, g1);
  const double l2 = loss_and_gradient_parallel(net, BatchView{&d, {}}, 0.0, g2);
  EXPECT_EQ(l1, l2);
  EXPECT_EQ(g1, g2);
  std::vector<double> gs(net.parameter_count());
  const double ls = loss_and_gradient_serial(net, BatchView{&d, {}}, 0.0, gs);
  EXPECT_NEAR(l1, ls, 1e-12 * ls);
}
