#pragma once

#include <span>
#include <vector>

#include "kanheat/rng.hpp"

namespace kanheat {

// Fully connected regressor: ReLU hidden layers, identity output.
class MlpNetwork {
 public:
  MlpNetwork() = default;
  // Zero weights and biases.
  explicit MlpNetwork(std::vector<int> widths);
  // Weights ~ N(0, 2 / fan_in), zero biases.
  static MlpNetwork random(std::vector<int> widths, Rng& rng);

  const std::vector<int>& widths() const { return widths_; }
  int depth() const { return static_cast<int>(weights_.size()); }
  int input_dim() const { return widths_.front(); }

  // weights(l) is n_out x n_in row-major.
  std::vector<double>& weights(int l) { return weights_[static_cast<std::size_t>(l)]; }
  const std::vector<double>& weights(int l) const { return weights_[static_cast<std::size_t>(l)]; }
  std::vector<double>& biases(int l) { return biases_[static_cast<std::size_t>(l)]; }
  const std::vector<double>& biases(int l) const { return biases_[static_cast<std::size_t>(l)]; }

  std::vector<double> forward(std::span<const double> input) const;
  double predict(std::span<const double> input) const;

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);
  std::vector<char> l2_mask() const;

  double accumulate_sample(std::span<const double> input, double target, std::span<double> grad) const;

  friend bool operator==(const MlpNetwork&, const MlpNetwork&) = default;

 private:
  std::vector<int> widths_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> biases_;
};

double mlp_forward(const MlpNetwork& net, std::span<const double> input);

}  // namespace kanheat
