#pragma once

#include <cstddef>
#include <span>

namespace kanheat {

struct Metrics {
  double r2 = 0.0;
  double mape = 0.0;   // percent
  double smape = 0.0;  // percent, in [0, 200]
  double pearson = 0.0;
  double mse = 0.0;
  std::size_t mape_excluded = 0;  // rows with |y| < 1e-9
};

// All metrics take truth first. Lengths must match and be nonzero
// (ShapeError otherwise).
double r2(std::span<const double> y, std::span<const double> yhat);  // DomainError if var(y) = 0
double mse(std::span<const double> y, std::span<const double> yhat);
double smape(std::span<const double> y, std::span<const double> yhat);
double pearson(std::span<const double> y, std::span<const double> yhat);
// Rows with |y| < 1e-9 are skipped; their count goes to *excluded.
double mape(std::span<const double> y, std::span<const double> yhat, std::size_t* excluded = nullptr);

Metrics compute_metrics(std::span<const double> y, std::span<const double> yhat);

}  // namespace kanheat
