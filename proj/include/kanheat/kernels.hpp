#pragma once

// Batch loss/gradient and prediction kernels. Each has a plain serial
// reference and an OpenMP version. The OpenMP version reduces fixed-size row
// chunks in chunk order, so its result does not depend on the thread count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "kanheat/dataset.hpp"

namespace kanheat {

inline constexpr std::size_t kKernelChunk = 32;

// Rows of a dataset addressed through an optional index list.
struct BatchView {
  const Dataset* data = nullptr;
  std::span<const std::size_t> index;  // empty means all rows

  std::size_t size() const { return index.empty() ? data->rows : index.size(); }
  std::size_t row_id(std::size_t k) const { return index.empty() ? k : index[k]; }
};

inline double masked_l2(std::span<const double> params, std::span<const char> mask) {
  double s = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (mask[i]) s += params[i] * params[i];
  }
  return s;
}

namespace detail {

template <class Model>
double finish_loss(const Model& net, double sq_sum, std::size_t n, double l2, std::span<double> grad) {
  const double inv = 1.0 / static_cast<double>(n);
  for (double& g : grad) g *= inv;
  double loss = sq_sum * inv;
  if (l2 > 0.0) {
    const auto params = net.parameters();
    const auto mask = net.l2_mask();
    loss += l2 * masked_l2(params, mask);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (mask[i]) grad[i] += 2.0 * l2 * params[i];
    }
  }
  return loss;
}

}  // namespace detail

/// Loss = mean squared error + l2 * penalty; writes its gradient into grad.
template <class Model>
double loss_and_gradient_serial(const Model& net, const BatchView& batch, double l2, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  double sq = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const std::size_t r = batch.row_id(k);
    sq += net.accumulate_sample(batch.data->row(r), batch.data->targets[r], grad);
  }
  return detail::finish_loss(net, sq, batch.size(), l2, grad);
}

template <class Model>
double loss_and_gradient_parallel(const Model& net, const BatchView& batch, double l2, std::span<double> grad) {
  const std::size_t n = batch.size();
  const std::size_t p = grad.size();
  const std::size_t chunks = (n + kKernelChunk - 1) / kKernelChunk;
  std::vector<double> partial(chunks * p, 0.0);
  std::vector<double> sq(chunks, 0.0);
  const long long nchunks = static_cast<long long>(chunks);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long c = 0; c < nchunks; ++c) {
    const std::size_t cu = static_cast<std::size_t>(c);
    std::span<double> g(partial.data() + cu * p, p);
    const std::size_t end = std::min(n, (cu + 1) * kKernelChunk);
    double s = 0.0;
    for (std::size_t k = cu * kKernelChunk; k < end; ++k) {
      const std::size_t r = batch.row_id(k);
      s += net.accumulate_sample(batch.data->row(r), batch.data->targets[r], g);
    }
    sq[cu] = s;
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    total += sq[c];
    const double* g = partial.data() + c * p;
    for (std::size_t i = 0; i < p; ++i) grad[i] += g[i];
  }
  return detail::finish_loss(net, total, n, l2, grad);
}

template <class Model>
double loss_and_gradient(const Model& net, const BatchView& batch, double l2, std::span<double> grad,
                         bool parallel) {
  return parallel ? loss_and_gradient_parallel(net, batch, l2, grad)
                  : loss_and_gradient_serial(net, batch, l2, grad);
}

template <class Model>
std::vector<double> predict_serial(const Model& net, const Dataset& data) {
  std::vector<double> out(data.rows);
  for (std::size_t r = 0; r < data.rows; ++r) out[r] = net.predict(data.row(r));
  return out;
}

template <class Model>
std::vector<double> predict_parallel(const Model& net, const Dataset& data) {
  std::vector<double> out(data.rows);
  const long long rows = static_cast<long long>(data.rows);
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < rows; ++r) {
    out[static_cast<std::size_t>(r)] = net.predict(data.row(static_cast<std::size_t>(r)));
  }
  return out;
}

template <class Model>
std::vector<double> predict(const Model& net, const Dataset& data, bool parallel = true) {
  return parallel ? predict_parallel(net, data) : predict_serial(net, data);
}

// Mean squared error of the model on every row (normalized units).
template <class Model>
double mean_squared_error(const Model& net, const Dataset& data, bool parallel = true) {
  const auto pred = predict(net, data, parallel);
  double s = 0.0;
  for (std::size_t r = 0; r < data.rows; ++r) {
    const double e = pred[r] - data.targets[r];
    s += e * e;
  }
  return s / static_cast<double>(data.rows);
}

}  // namespace kanheat
