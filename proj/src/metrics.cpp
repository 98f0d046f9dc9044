#include "kanheat/metrics.hpp"

#include <cmath>

#include "kanheat/errors.hpp"

namespace kanheat {

namespace {

void check(std::span<const double> y, std::span<const double> yhat) {
  if (y.empty() || y.size() != yhat.size()) throw ShapeError("metrics: truth and prediction lengths differ or are zero");
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double mse(std::span<const double> y, std::span<const double> yhat) {
  check(y, yhat);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return s / static_cast<double>(y.size());
}

double r2(std::span<const double> y, std::span<const double> yhat) {
  check(y, yhat);
  const double m = mean(y);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    ss_tot += (y[i] - m) * (y[i] - m);
  }
  if (!(ss_tot > 0.0)) throw DomainError("r2 undefined: truth has zero variance");
  return 1.0 - ss_res / ss_tot;
}

double smape(std::span<const double> y, std::span<const double> yhat) {
  check(y, yhat);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double den = std::abs(y[i]) + std::abs(yhat[i]);
    if (den > 0.0) s += 200.0 * std::abs(y[i] - yhat[i]) / den;
  }
  return s / static_cast<double>(y.size());
}

double mape(std::span<const double> y, std::span<const double> yhat, std::size_t* excluded) {
  check(y, yhat);
  double s = 0.0;
  std::size_t used = 0, skipped = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::abs(y[i]) < 1e-9) {
      ++skipped;
      continue;
    }
    s += std::abs((y[i] - yhat[i]) / y[i]);
    ++used;
  }
  if (excluded) *excluded = skipped;
  return used == 0 ? 0.0 : 100.0 * s / static_cast<double>(used);
}

double pearson(std::span<const double> y, std::span<const double> yhat) {
  check(y, yhat);
  const double my = mean(y), mp = mean(yhat);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxy += (y[i] - my) * (yhat[i] - mp);
    sxx += (y[i] - my) * (y[i] - my);
    syy += (yhat[i] - mp) * (yhat[i] - mp);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return 0.0;
  const double r = sxy / std::sqrt(sxx * syy);
  return std::fmax(-1.0, std::fmin(1.0, r));
}

Metrics compute_metrics(std::span<const double> y, std::span<const double> yhat) {
  Metrics m;
  m.r2 = r2(y, yhat);
  m.mse = mse(y, yhat);
  m.smape = smape(y, yhat);
  m.pearson = pearson(y, yhat);
  m.mape = mape(y, yhat, &m.mape_excluded);
  return m;
}

}  // namespace kanheat
