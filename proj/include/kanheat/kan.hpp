#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kanheat/numerics.hpp"
#include "kanheat/operators.hpp"
#include "kanheat/rng.hpp"

namespace kanheat {

// c * f(a * x + b) + d
struct AffineParams {
  double a = 1.0;
  double b = 0.0;
  double c = 1.0;
  double d = 0.0;
  friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

struct SymbolicLock {
  const Operator* op = nullptr;
  AffineParams affine;
  bool trainable = false;
};

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double silu_derivative(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

/// One learnable univariate activation on a KAN edge:
///   phi(x) = w_b * silu(x) + w_s * sum_i c_i B_i(clamp(x))
/// The spline argument is clamped into the grid domain. A symbolic lock
/// replaces the whole expression with c * f(a x + b) + d.
struct SplineEdge {
  KnotGrid grid;
  std::vector<double> coeffs;
  double base_weight = 1.0;
  double spline_weight = 0.1;
  std::optional<SymbolicLock> lock;

  SplineEdge() = default;
  explicit SplineEdge(KnotGrid g);

  bool locked() const { return lock.has_value(); }
  // Locked to the constant-zero operator (a pruned edge).
  bool is_zero() const;
  double spline_value(double x) const;
  double eval(double x) const;
  double eval(double x, bool& clamped) const;
  std::size_t trainable_count() const;
};

double edge_eval(const SplineEdge& edge, double x);

struct ForwardStats {
  std::size_t clamped = 0;
};

class KanNetwork {
 public:
  struct Layer {
    int n_in = 0;
    int n_out = 0;
    std::vector<SplineEdge> edges;  // row-major: edges[i * n_out + j]
    std::vector<double> biases;     // one per output node

    SplineEdge& edge(int i, int j) { return edges[static_cast<std::size_t>(i * n_out + j)]; }
    const SplineEdge& edge(int i, int j) const {
      return edges[static_cast<std::size_t>(i * n_out + j)];
    }
  };

  KanNetwork() = default;
  /// Deterministic zero-initialized network (coeffs 0, w_b = 1, w_s = 0.1, bias 0).
  KanNetwork(std::vector<int> widths, int intervals, int degree, double lo = -1.0, double hi = 1.0);

  /// Seeded initialization: w_b ~ U(-1,1)/sqrt(n_in), w_s = 0.1,
  /// w_s * c_i ~ U(-0.1, 0.1).
  static KanNetwork random(std::vector<int> widths, int intervals, int degree, Rng& rng,
                           double lo = -1.0, double hi = 1.0);

  const std::vector<int>& widths() const { return widths_; }
  int depth() const { return static_cast<int>(layers_.size()); }
  int intervals() const { return intervals_; }
  int degree() const { return degree_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }

  Layer& layer(int l) { return layers_[static_cast<std::size_t>(l)]; }
  const Layer& layer(int l) const { return layers_[static_cast<std::size_t>(l)]; }
  SplineEdge& edge(int l, int i, int j) { return layer(l).edge(i, j); }
  const SplineEdge& edge(int l, int i, int j) const { return layer(l).edge(i, j); }
  std::size_t edge_count() const;

  std::vector<double> forward(std::span<const double> input, ForwardStats* stats = nullptr) const;
  double predict(std::span<const double> input) const;

  // Flat trainable parameter vector: per layer, per edge (row-major) either
  // [coeffs..., w_b, w_s] (unlocked) or [a, b, c, d] (trainable lock), then
  // the layer biases.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);
  // 1 where the parameter participates in the L2 penalty (spline coeffs and
  // edge weights of unlocked edges).
  std::vector<char> l2_mask() const;

  /// Squared error of one sample; adds d(err^2)/d(theta) into grad.
  double accumulate_sample(std::span<const double> input, double target, std::span<double> grad) const;

  void lock_edge(int l, int i, int j, const std::string& op_name, AffineParams affine,
                 bool trainable_affine);
  // Drops hidden node j of hidden layer `node_layer` (1..depth-1). Its
  // outgoing contributions must already be folded into the next biases.
  void remove_hidden_node(int node_layer, int j);

  friend bool operator==(const KanNetwork& a, const KanNetwork& b);

 private:
  std::vector<int> widths_;
  std::vector<Layer> layers_;
  int intervals_ = 0;
  int degree_ = 0;
};

bool operator==(const SplineEdge& a, const SplineEdge& b);

double l2_penalty(const KanNetwork& net);

/// Locks edge (layer, i, j) to c * f(a x + b) + d for the named operator.
/// Throws ConfigError listing the registry when the name is unknown.
void lock_edge_symbolic(KanNetwork& net, int layer, int i, int j, const std::string& op_name,
                        AffineParams affine, bool trainable_affine);

struct RefitReport {
  int edges_refit = 0;
  int edges_skipped = 0;
  std::vector<std::string> warnings;
  double rms_change = 0.0;
};

/// Moves unlocked edge grids to cover observed pre-activations (5% margin) and
/// refits their coefficients by least squares against the previous spline.
/// `inputs` is row-major, rows x input_dim.
RefitReport grid_refit(KanNetwork& net, std::span<const double> inputs, std::size_t rows);

struct PruneReport {
  int edges_pruned = 0;
  int nodes_removed = 0;
  double rms_change = 0.0;
};

/// Locks edges with output std below threshold * (max std in layer) to the
/// constant 0 (their mean is folded into the node bias) and removes dead
/// hidden nodes.
PruneReport prune(KanNetwork& net, std::span<const double> inputs, std::size_t rows, double threshold);

// Per-edge output standard deviation on a batch, indexed [layer][i * n_out + j].
std::vector<std::vector<double>> edge_activation_std(const KanNetwork& net,
                                                     std::span<const double> inputs, std::size_t rows);

// Pre-activation samples reaching each layer: [layer][row * n_in + i].
std::vector<std::vector<double>> layer_inputs(const KanNetwork& net, std::span<const double> inputs,
                                              std::size_t rows);

}  // namespace kanheat
