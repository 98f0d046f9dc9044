#include "kanheat/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "kanheat/errors.hpp"
#include "kanheat/format.hpp"
#include "kanheat/kernels.hpp"
#include "kanheat/training.hpp"

namespace kanheat {

namespace {

double target_variance(const Dataset& d) {
  const double n = static_cast<double>(d.rows);
  const double m = std::accumulate(d.targets.begin(), d.targets.end(), 0.0) / n;
  double v = 0.0;
  for (double y : d.targets) v += (y - m) * (y - m);
  return v / n;
}

TrainConfig finetune_config(int steps, int patience, std::uint64_t seed, bool parallel) {
  TrainConfig c;
  c.optimizer = OptimizerKind::Lbfgs;
  c.max_epochs = steps;
  c.early_stop_patience = patience;
  c.seed = seed;
  c.parallel = parallel;
  return c;
}

// Fine-tune and score; a diverged trial scores +inf.
double finetune(KanNetwork& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg) {
  try {
    train(net, train_set, val_set, cfg);
  } catch (const NumericError&) {
    return INFINITY;
  }
  const double v = mean_squared_error(net, val_set, cfg.parallel);
  return std::isfinite(v) ? v : INFINITY;
}

}  // namespace

void drop_hidden_node(KanNetwork& net, int node_layer, int j, const Dataset& data) {
  const auto acts = layer_inputs(net, data.inputs, data.rows);
  auto& layer = net.layer(node_layer);
  const auto& xs = acts[static_cast<std::size_t>(node_layer)];
  const auto n_in = static_cast<std::size_t>(layer.n_in);
  for (int k = 0; k < layer.n_out; ++k) {
    double s = 0.0;
    for (std::size_t r = 0; r < data.rows; ++r) s += layer.edge(j, k).eval(xs[r * n_in + static_cast<std::size_t>(j)]);
    layer.biases[static_cast<std::size_t>(k)] += s / static_cast<double>(data.rows);
  }
  net.remove_hidden_node(node_layer, j);
}

GreedyPruneReport greedy_prune(KanNetwork& net, const Dataset& train_set, const Dataset& val_set,
                               const GreedyPruneOptions& options) {
  if (options.tolerance < 0.0 || options.candidates < 1) throw ConfigError("greedy_prune: invalid options");
  GreedyPruneReport report;
  report.baseline_val = mean_squared_error(net, val_set, options.parallel);
  const double limit = report.baseline_val + options.tolerance * target_variance(val_set);
  const TrainConfig cfg = finetune_config(options.finetune_steps, options.patience, options.seed, options.parallel);

  bool progress = true;
  while (progress) {
    progress = false;
    const auto spread = edge_activation_std(net, train_set.inputs, train_set.rows);
    std::vector<std::tuple<double, int, int>> ranked;
    for (int nl = 1; nl < net.depth(); ++nl) {
      if (net.widths()[static_cast<std::size_t>(nl)] <= 1) continue;
      const auto& in = net.layer(nl - 1);
      const auto& out = net.layer(nl);
      for (int j = 0; j < in.n_out; ++j) {
        double a = 0.0, b = 0.0;
        for (int i = 0; i < in.n_in; ++i) a = std::max(a, spread[static_cast<std::size_t>(nl - 1)][static_cast<std::size_t>(i * in.n_out + j)]);
        for (int k = 0; k < out.n_out; ++k) b = std::max(b, spread[static_cast<std::size_t>(nl)][static_cast<std::size_t>(j * out.n_out + k)]);
        ranked.emplace_back(a * b, nl, j);
      }
    }
    std::sort(ranked.begin(), ranked.end());
    const auto tries = std::min(ranked.size(), static_cast<std::size_t>(options.candidates));
    for (std::size_t c = 0; c < tries; ++c) {
      KanNetwork trial = net;
      drop_hidden_node(trial, std::get<1>(ranked[c]), std::get<2>(ranked[c]), train_set);
      ++report.trials;
      if (finetune(trial, train_set, val_set, cfg) <= limit) {
        net = std::move(trial);
        ++report.nodes_removed;
        progress = true;
        break;
      }
    }
  }
  report.final_val = mean_squared_error(net, val_set, options.parallel);
  return report;
}

GuidedSnapReport guided_symbolic(KanNetwork& net, const Dataset& train_set, const Dataset& val_set,
                                 const OperatorLibrary& library, const GuidedSnapOptions& options) {
  if (options.tolerance < 0.0) throw ConfigError("guided_symbolic: tolerance must be >= 0");
  GuidedSnapReport report;
  report.baseline_val = mean_squared_error(net, val_set, options.parallel);
  const double limit = report.baseline_val + options.tolerance * target_variance(val_set);
  const TrainConfig cfg = finetune_config(options.finetune_steps, options.patience, options.seed, options.parallel);

  for (int l = 0; l < net.depth(); ++l) {
    const int n_in = net.layer(l).n_in;
    const int n_out = net.layer(l).n_out;
    for (int i = 0; i < n_in; ++i) {
      for (int j = 0; j < n_out; ++j) {
        if (net.edge(l, i, j).locked()) continue;
        const auto acts = layer_inputs(net, train_set.inputs, train_set.rows);
        const auto& in = acts[static_cast<std::size_t>(l)];
        std::vector<double> xs(train_set.rows), ys(train_set.rows);
        for (std::size_t r = 0; r < train_set.rows; ++r) {
          xs[r] = in[r * static_cast<std::size_t>(n_in) + static_cast<std::size_t>(i)];
          ys[r] = net.edge(l, i, j).eval(xs[r]);
        }
        const std::string where = "layer " + std::to_string(l) + " edge " + std::to_string(i) + "->" + std::to_string(j);
        const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
        if (!(*hi - *lo > 1e-12)) {
          const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
          net.lock_edge(l, i, j, "x", AffineParams{1.0, 0.0, 0.0, mean}, false);
          ++report.locked;
          report.log.push_back(where + ": constant input");
          continue;
        }
        const SnapResult fit = snap_edge(xs, ys, library, options.snap);
        std::vector<const SnapCandidate*> order;
        for (const auto& c : fit.candidates) {
          if (c.r2 >= options.snap.r2_floor) order.push_back(&c);
        }
        std::sort(order.begin(), order.end(), [](const SnapCandidate* a, const SnapCandidate* b) {
          if (a->op->complexity_weight != b->op->complexity_weight) return a->op->complexity_weight < b->op->complexity_weight;
          if (a->r2 != b->r2) return a->r2 > b->r2;
          return a->op->name < b->op->name;
        });
        bool done = false;
        for (const SnapCandidate* c : order) {
          KanNetwork trial = net;
          trial.lock_edge(l, i, j, c->op->name, c->affine, true);
          grid_refit(trial, train_set.inputs, train_set.rows);
          ++report.trials;
          const double v = finetune(trial, train_set, val_set, cfg);
          if (v <= limit) {
            net = std::move(trial);
            ++report.locked;
            report.log.push_back(where + ": " + c->op->name + " r2=" + format_fixed(c->r2, 6) + " val=" + format_real(v));
            done = true;
            break;
          }
        }
        if (!done) {
          ++report.kept_numeric;
          report.log.push_back(where + ": kept numeric");
        }
      }
    }
  }
  report.final_val = mean_squared_error(net, val_set, options.parallel);
  return report;
}

}  // namespace kanheat
