#include "kanheat/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "kanheat/format.hpp"
#include "kanheat/kernels.hpp"
#include "kanheat/rng.hpp"

namespace kanheat {

Schedule Schedule::exp_decay(double rate, long steps) {
  Schedule s;
  s.kind = Kind::ExpDecay;
  s.rate = rate;
  s.steps = steps;
  s.validate();
  return s;
}

Schedule Schedule::cosine(long total_steps) {
  Schedule s;
  s.kind = Kind::Cosine;
  s.total_steps = total_steps;
  s.validate();
  return s;
}

double Schedule::at(double lr0, long step) const {
  switch (kind) {
    case Kind::Constant:
      return lr0;
    case Kind::ExpDecay:
      return lr0 * std::pow(rate, static_cast<double>(step) / static_cast<double>(steps));
    case Kind::Cosine: {
      const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
      return 0.5 * lr0 * (1.0 + std::cos(M_PI * t));
    }
  }
  return lr0;
}

void Schedule::validate() const {
  if (kind == Kind::ExpDecay) {
    if (!(rate > 0.0 && rate < 1.0)) throw ConfigError("exp_decay rate must lie in (0,1)");
    if (steps < 1) throw ConfigError("exp_decay steps must be >= 1");
  }
  if (kind == Kind::Cosine && total_steps < 1) throw ConfigError("cosine total_steps must be >= 1");
}

void TrainConfig::validate() const {
  schedule.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (!(l2_coeff >= 0.0)) throw ConfigError("l2_coeff must be >= 0");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be >= 1");
  if (grid_refit_every < 0) throw ConfigError("grid_refit_every must be >= 0");
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size() || grads.size() != params.size()) {
    throw ShapeError("adam_step: state and gradient must match the parameter count");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grads[i];
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEpsilon);
  }
}

namespace {

template <class Model>
double loss_grad(const Model& net, const Dataset& batch, double l2, std::vector<double>& grad) {
  grad.assign(net.parameter_count(), 0.0);
  if (batch.rows == 0) throw DataError("gradients: empty batch");
  return loss_and_gradient(net, BatchView{&batch, {}}, l2, grad, true);
}

template <class Model>
std::vector<double> gradients_impl(const Model& net, const Dataset& batch, double l2) {
  std::vector<double> grad;
  const double loss = loss_grad(net, batch, l2, grad);
  if (!std::isfinite(loss)) throw NumericError("gradients: non-finite loss");
  return grad;
}

void refit_hook(KanNetwork& net, const Dataset& data) { grid_refit(net, data.inputs, data.rows); }
void refit_hook(MlpNetwork&, const Dataset&) {}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class Model>
TrainHistory train_adam(Model& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.rows == 0) throw DataError("train: empty training set");
  const auto start = Clock::now();
  const std::size_t n = train_set.rows;
  const std::size_t batch = (cfg.batch_size == 0 || cfg.batch_size > n) ? n : cfg.batch_size;
  Rng rng = derive_rng(cfg.seed, 0x7261696eULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainHistory hist;
  Model best = net;
  hist.best_val_loss = std::numeric_limits<double>::infinity();
  AdamState state(net.parameter_count());
  std::vector<double> grad(net.parameter_count());
  std::vector<double> params;
  long step = 0;
  int bad = 0;
  int last_finite = 0;
  hist.stop_reason = "max_epochs";

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double lr = cfg.schedule.at(cfg.learning_rate, step);
    for (std::size_t off = 0; off < n; off += batch) {
      const std::size_t len = std::min(batch, n - off);
      const BatchView view{&train_set, std::span<const std::size_t>(order.data() + off, len)};
      const double loss = loss_and_gradient(net, view, cfg.l2_coeff, grad, cfg.parallel);
      if (!std::isfinite(loss)) {
        hist.stop_reason = "diverged";
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch), hist, last_finite);
      }
      lr = cfg.schedule.at(cfg.learning_rate, step);
      params = net.parameters();
      adam_step(params, grad, state, lr);
      net.set_parameters(params);
      ++step;
      if (cfg.grid_refit_every > 0 && step % cfg.grid_refit_every == 0) {
        refit_hook(net, train_set);
        state = AdamState(net.parameter_count());
        ++hist.grid_refits;
      }
    }
    HistoryRow row;
    row.epoch = epoch;
    row.lr = lr;
    row.train_loss = mean_squared_error(net, train_set, cfg.parallel);
    row.val_loss = val_set.rows > 0 ? mean_squared_error(net, val_set, cfg.parallel) : row.train_loss;
    row.wall_seconds = seconds_since(start);
    hist.rows.push_back(row);
    if (!std::isfinite(row.train_loss) || !std::isfinite(row.val_loss)) {
      hist.stop_reason = "diverged";
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch), hist, last_finite);
    }
    last_finite = epoch;
    if (row.val_loss < hist.best_val_loss) {
      hist.best_val_loss = row.val_loss;
      hist.best_epoch = epoch;
      best = net;
      bad = 0;
    } else if (++bad >= cfg.early_stop_patience) {
      hist.stop_reason = "early_stop";
      break;
    }
  }
  net = std::move(best);
  return hist;
}

template <class Model>
TrainHistory train_lbfgs(Model& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.rows == 0) throw DataError("lbfgs_fit: empty training set");
  const auto start = Clock::now();
  TrainHistory hist;
  Model work = net;
  auto val_loss = [&](const Model& m) {
    return val_set.rows > 0 ? mean_squared_error(m, val_set, cfg.parallel) : mean_squared_error(m, train_set, cfg.parallel);
  };

  HistoryRow first;
  first.epoch = 0;
  first.train_loss = mean_squared_error(net, train_set, cfg.parallel);
  first.val_loss = val_loss(net);
  first.wall_seconds = seconds_since(start);
  hist.rows.push_back(first);
  if (!std::isfinite(first.train_loss) || !std::isfinite(first.val_loss)) {
    hist.stop_reason = "diverged";
    throw DivergenceError("lbfgs_fit: non-finite loss at the starting point", hist, 0);
  }
  hist.best_val_loss = first.val_loss;
  hist.best_epoch = 0;
  Model best = net;
  int bad = 0;

  const Objective f = [&](std::span<const double> x, std::span<double> g) {
    work.set_parameters(x);
    return loss_and_gradient(work, BatchView{&train_set, {}}, cfg.l2_coeff, g, cfg.parallel);
  };
  const IterationCallback cb = [&](int it, std::span<const double> x, double) {
    work.set_parameters(x);
    HistoryRow row;
    row.epoch = it;
    row.train_loss = mean_squared_error(work, train_set, cfg.parallel);
    row.val_loss = val_loss(work);
    row.wall_seconds = seconds_since(start);
    hist.rows.push_back(row);
    if (!std::isfinite(row.val_loss)) return false;
    if (row.val_loss < hist.best_val_loss) {
      hist.best_val_loss = row.val_loss;
      hist.best_epoch = it;
      best = work;
      bad = 0;
    } else if (++bad >= cfg.early_stop_patience) {
      hist.stop_reason = "early_stop";
      return false;
    }
    return true;
  };

  LbfgsOptions opt;
  opt.max_iterations = cfg.max_epochs;
  const auto res = lbfgs_minimize(f, net.parameters(), opt, cb);
  hist.fallback_steps = res.fallback_steps;
  if (hist.stop_reason.empty()) hist.stop_reason = res.stop_reason;
  if (!std::isfinite(hist.rows.back().val_loss)) {
    hist.stop_reason = "diverged";
    throw DivergenceError("lbfgs_fit: non-finite validation loss", hist, hist.rows.back().epoch - 1);
  }
  net = std::move(best);
  return hist;
}

}  // namespace

std::vector<double> gradients(const KanNetwork& net, const Dataset& batch, double l2) {
  return gradients_impl(net, batch, l2);
}
std::vector<double> gradients(const MlpNetwork& net, const Dataset& batch, double l2) {
  return gradients_impl(net, batch, l2);
}

double objective(const KanNetwork& net, const Dataset& batch, double l2) {
  std::vector<double> g;
  return loss_grad(net, batch, l2, g);
}
double objective(const MlpNetwork& net, const Dataset& batch, double l2) {
  std::vector<double> g;
  return loss_grad(net, batch, l2, g);
}

TrainHistory train(KanNetwork& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config) {
  if (config.optimizer == OptimizerKind::Lbfgs) return train_lbfgs(net, train_set, val_set, config);
  return train_adam(net, train_set, val_set, config);
}

TrainHistory train(MlpNetwork& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config) {
  if (config.optimizer == OptimizerKind::Lbfgs) return train_lbfgs(net, train_set, val_set, config);
  return train_adam(net, train_set, val_set, config);
}

TrainHistory mlp_train(MlpNetwork& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config) {
  if (config.optimizer != OptimizerKind::Adam) throw ConfigError("mlp_train: the MLP baseline trains with adam");
  return train_adam(net, train_set, val_set, config);
}

TrainHistory lbfgs_fit(KanNetwork& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config) {
  return train_lbfgs(net, train_set, val_set, config);
}

void write_history_csv(const TrainHistory& history, std::ostream& os) {
  os << "epoch,train_loss,val_loss,lr\n";
  for (const auto& r : history.rows) {
    os << r.epoch << ',' << format_real(r.train_loss) << ',' << format_real(r.val_loss) << ','
       << format_real(r.lr) << '\n';
  }
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  write_history_csv(history, os);
}

}  // namespace kanheat
