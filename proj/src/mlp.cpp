#include "kanheat/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kanheat/errors.hpp"

namespace kanheat {

MlpNetwork::MlpNetwork(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ConfigError("MlpNetwork: need at least input and output widths");
  for (int w : widths_) {
    if (w < 1) throw ConfigError("MlpNetwork: widths must be positive");
  }
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    weights_.emplace_back(static_cast<std::size_t>(widths_[l] * widths_[l + 1]), 0.0);
    biases_.emplace_back(static_cast<std::size_t>(widths_[l + 1]), 0.0);
  }
}

MlpNetwork MlpNetwork::random(std::vector<int> widths, Rng& rng) {
  MlpNetwork net(std::move(widths));
  for (int l = 0; l < net.depth(); ++l) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / net.widths_[static_cast<std::size_t>(l)]));
    for (double& w : net.weights(l)) w = dist(rng);
  }
  return net;
}

std::vector<double> MlpNetwork::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_dim()) {
    std::ostringstream os;
    os << "mlp_forward: input length " << input.size() << " != " << input_dim();
    throw ShapeError(os.str());
  }
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  for (int l = 0; l < depth(); ++l) {
    const int n_in = widths_[static_cast<std::size_t>(l)];
    const int n_out = widths_[static_cast<std::size_t>(l + 1)];
    const auto& w = weights(l);
    next.assign(biases(l).begin(), biases(l).end());
    for (int o = 0; o < n_out; ++o) {
      double v = next[static_cast<std::size_t>(o)];
      const double* row = w.data() + static_cast<std::size_t>(o * n_in);
      for (int i = 0; i < n_in; ++i) v += row[i] * cur[static_cast<std::size_t>(i)];
      next[static_cast<std::size_t>(o)] = (l + 1 < depth()) ? std::max(0.0, v) : v;
    }
    cur.swap(next);
  }
  return cur;
}

double MlpNetwork::predict(std::span<const double> input) const { return forward(input).front(); }

double mlp_forward(const MlpNetwork& net, std::span<const double> input) { return net.predict(input); }

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < depth(); ++l) n += weights(l).size() + biases(l).size();
  return n;
}

std::vector<double> MlpNetwork::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (int l = 0; l < depth(); ++l) {
    p.insert(p.end(), weights(l).begin(), weights(l).end());
    p.insert(p.end(), biases(l).begin(), biases(l).end());
  }
  return p;
}

void MlpNetwork::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw ShapeError("set_parameters: length mismatch");
  std::size_t k = 0;
  for (int l = 0; l < depth(); ++l) {
    for (double& w : weights(l)) w = params[k++];
    for (double& b : biases(l)) b = params[k++];
  }
}

std::vector<char> MlpNetwork::l2_mask() const {
  std::vector<char> mask;
  for (int l = 0; l < depth(); ++l) {
    mask.insert(mask.end(), weights(l).size(), 1);
    mask.insert(mask.end(), biases(l).size(), 0);
  }
  return mask;
}

double MlpNetwork::accumulate_sample(std::span<const double> input, double target,
                                     std::span<double> grad) const {
  thread_local std::vector<std::vector<double>> acts;
  thread_local std::vector<double> delta;
  thread_local std::vector<double> prev_delta;
  acts.resize(static_cast<std::size_t>(depth() + 1));
  acts[0].assign(input.begin(), input.end());
  for (int l = 0; l < depth(); ++l) {
    const int n_in = widths_[static_cast<std::size_t>(l)];
    const int n_out = widths_[static_cast<std::size_t>(l + 1)];
    const auto& w = weights(l);
    auto& out = acts[static_cast<std::size_t>(l + 1)];
    out.assign(biases(l).begin(), biases(l).end());
    const auto& in = acts[static_cast<std::size_t>(l)];
    for (int o = 0; o < n_out; ++o) {
      double v = out[static_cast<std::size_t>(o)];
      const double* row = w.data() + static_cast<std::size_t>(o * n_in);
      for (int i = 0; i < n_in; ++i) v += row[i] * in[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(o)] = (l + 1 < depth()) ? std::max(0.0, v) : v;
    }
  }
  const double err = acts.back()[0] - target;

  std::vector<std::size_t> offset(static_cast<std::size_t>(depth()));
  std::size_t k = 0;
  for (int l = 0; l < depth(); ++l) {
    offset[static_cast<std::size_t>(l)] = k;
    k += weights(l).size() + biases(l).size();
  }

  delta.assign(acts.back().size(), 0.0);
  delta[0] = 2.0 * err;
  for (int l = depth() - 1; l >= 0; --l) {
    const int n_in = widths_[static_cast<std::size_t>(l)];
    const int n_out = widths_[static_cast<std::size_t>(l + 1)];
    const auto& w = weights(l);
    const auto& in = acts[static_cast<std::size_t>(l)];
    const std::size_t wo = offset[static_cast<std::size_t>(l)];
    const std::size_t bo = wo + w.size();
    prev_delta.assign(static_cast<std::size_t>(n_in), 0.0);
    for (int o = 0; o < n_out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      if (d == 0.0) continue;
      const double* row = w.data() + static_cast<std::size_t>(o * n_in);
      double* g = grad.data() + wo + static_cast<std::size_t>(o * n_in);
      for (int i = 0; i < n_in; ++i) {
        g[i] += d * in[static_cast<std::size_t>(i)];
        prev_delta[static_cast<std::size_t>(i)] += d * row[i];
      }
      grad[bo + static_cast<std::size_t>(o)] += d;
    }
    if (l > 0) {
      // ReLU gate of the hidden layer feeding this one.
      for (int i = 0; i < n_in; ++i) {
        if (in[static_cast<std::size_t>(i)] <= 0.0) prev_delta[static_cast<std::size_t>(i)] = 0.0;
      }
    }
    delta.swap(prev_delta);
  }
  return err * err;
}

}  // namespace kanheat
