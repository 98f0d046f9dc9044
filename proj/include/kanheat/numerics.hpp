#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kanheat {

// Error function, |error| <= 1e-10 over the real line. Throws DomainError on
// non-finite input.
double erf(double x);
// 1 - erf(x), evaluated directly for large x to avoid cancellation.
double erfc(double x);

/// Uniform knot vector for splines of degree `k` over `[lo, hi]` split into `G`
/// intervals. `k` extra knots are appended on each side at the same spacing, so
/// the knots are strictly increasing and there are `G + 2k + 1` of them. The
/// evaluation domain is `[knots[k], knots[G + k]]` where the `G + k` basis
/// functions form a partition of unity.
class KnotGrid {
 public:
  KnotGrid() = default;
  KnotGrid(double lo, double hi, int intervals, int degree);
  /// Adopts an explicit knot vector. Validates length and monotonicity.
  KnotGrid(std::vector<double> knots, int intervals, int degree);

  int intervals() const { return intervals_; }
  int degree() const { return degree_; }
  int basis_count() const { return intervals_ + degree_; }
  double lo() const { return knots_[static_cast<std::size_t>(degree_)]; }
  double hi() const { return knots_[static_cast<std::size_t>(intervals_ + degree_)]; }
  const std::vector<double>& knots() const { return knots_; }
  bool contains(double x) const { return x >= lo() && x <= hi(); }

  /// Index s with knots[s] <= x < knots[s+1], s in [k, G+k-1]. Points at or
  /// beyond the domain ends map to the boundary intervals, so local evaluation
  /// there continues the boundary polynomial piece.
  int span(double x) const;

  // Equally spaced knots (to 1e-12 relative); enables the division-free path.
  bool uniform() const { return uniform_; }
  double inverse_spacing() const { return inv_h_; }

  friend bool operator==(const KnotGrid&, const KnotGrid&) = default;

 private:
  void classify();

  std::vector<double> knots_;
  int intervals_ = 0;
  int degree_ = 0;
  bool uniform_ = false;
  double inv_h_ = 0.0;
};

// The k+1 basis functions that may be nonzero at x, starting at index
// `first`, plus their first derivatives.
struct LocalBasis {
  int first = 0;
  std::vector<double> values;
  std::vector<double> derivatives;
};

/// Evaluates the nonzero basis functions (and derivatives) at x. Writes k+1
/// entries into `values` / `derivatives`; returns the index of the first one.
/// `scratch` must hold at least 2*(k+1) doubles. Outside the domain this is the
/// polynomial continuation of the boundary piece (no range check).
int bspline_local(const KnotGrid& grid, double x, std::span<double> values,
                  std::span<double> derivatives, std::span<double> scratch);

LocalBasis bspline_local(const KnotGrid& grid, double x);

/// Full basis vector of length G + k. Throws OutOfRangeError naming the grid
/// bounds when x lies outside the domain.
std::vector<double> bspline_basis(const KnotGrid& grid, double x);

// Row-major dense matrix used for small least-squares problems.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct LeastSquaresResult {
  std::vector<double> coeffs;
  // Set when the design was rank deficient and the ridge fallback was used.
  bool ridge_fallback = false;
  int rank = 0;
};

/// Minimizes |design * c - target|^2. Rank-deficient designs are solved with
/// ridge damping 1e-8 and flagged.
LeastSquaresResult solve_least_squares(const DenseMatrix& design, std::span<const double> target);

}  // namespace kanheat
