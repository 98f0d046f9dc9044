#include "kanheat/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kanheat/errors.hpp"

namespace kanheat {

namespace {

constexpr double kSeriesLimit = 3.0;

void require_finite(double x, const char* fn) {
  if (!std::isfinite(x)) {
    std::ostringstream os;
    os << fn << ": non-finite argument " << x;
    throw DomainError(os.str());
  }
}

// erf for 0 <= x <= 3 from erf(x) = 2/sqrt(pi) * exp(-x^2) * sum (2x^2)^n x / (2n+1)!!.
// All terms are positive, so there is no cancellation.
double erf_series(double x) {
  const double two_x2 = 2.0 * x * x;
  double term = x;
  double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= two_x2 / (2.0 * n + 1.0);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x) * sum;
}

// erfc for x > 3 from the Laplace continued fraction, evaluated with modified Lentz.
double erfc_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = f;
  double d = 0.0;
  for (int n = 1; n < 500; ++n) {
    const double a = 0.5 * n;
    d = x + a * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x * x) / (std::sqrt(std::numbers::pi) * f);
}

double erf_nonneg(double x) {
  if (x <= kSeriesLimit) return erf_series(x);
  return 1.0 - erfc_continued_fraction(x);
}

}  // namespace

double erf(double x) {
  require_finite(x, "erf");
  const double v = erf_nonneg(std::abs(x));
  return x < 0.0 ? -v : v;
}

double erfc(double x) {
  require_finite(x, "erfc");
  if (x > kSeriesLimit) return erfc_continued_fraction(x);
  if (x >= 0.0) return 1.0 - erf_series(x);
  if (x >= -kSeriesLimit) return 1.0 + erf_series(-x);
  return 2.0 - erfc_continued_fraction(-x);
}

KnotGrid::KnotGrid(double lo, double hi, int intervals, int degree)
    : intervals_(intervals), degree_(degree) {
  if (intervals < 1 || degree < 0) throw ConfigError("KnotGrid: need G >= 1 and k >= 0");
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("KnotGrid: domain must satisfy lo < hi");
  }
  const double h = (hi - lo) / intervals;
  const int n = intervals + 2 * degree + 1;
  knots_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) knots_[static_cast<std::size_t>(i)] = lo + (i - degree) * h;
  // Pin the domain ends exactly.
  knots_[static_cast<std::size_t>(degree)] = lo;
  knots_[static_cast<std::size_t>(intervals + degree)] = hi;
  classify();
}

KnotGrid::KnotGrid(std::vector<double> knots, int intervals, int degree)
    : knots_(std::move(knots)), intervals_(intervals), degree_(degree) {
  if (intervals < 1 || degree < 0) throw ConfigError("KnotGrid: need G >= 1 and k >= 0");
  if (knots_.size() != static_cast<std::size_t>(intervals + 2 * degree + 1)) {
    throw ConfigError("KnotGrid: knot count must be G + 2k + 1");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw ConfigError("KnotGrid: knots must be strictly increasing");
  }
  classify();
}

void KnotGrid::classify() {
  const double h = (knots_.back() - knots_.front()) / static_cast<double>(knots_.size() - 1);
  uniform_ = true;
  for (std::size_t i = 1; i < knots_.size() && uniform_; ++i) {
    uniform_ = std::abs((knots_[i] - knots_[i - 1]) - h) <= 1e-12 * h;
  }
  inv_h_ = 1.0 / h;
}

int KnotGrid::span(double x) const {
  const int last = intervals_ + degree_ - 1;
  if (x < knots_[static_cast<std::size_t>(degree_)]) return degree_;
  if (x >= knots_[static_cast<std::size_t>(last)]) return last;
  if (uniform_) {
    int s = degree_ + static_cast<int>((x - lo()) * inv_h_);
    s = std::clamp(s, degree_, last);
    // Guard against rounding at knot boundaries.
    if (x < knots_[static_cast<std::size_t>(s)]) --s;
    else if (x >= knots_[static_cast<std::size_t>(s + 1)]) ++s;
    return s;
  }
  const auto begin = knots_.begin() + degree_;
  const auto end = knots_.begin() + last + 1;
  const auto it = std::upper_bound(begin, end, x);
  return static_cast<int>(it - knots_.begin()) - 1;
}

namespace {

// Cox-de Boor on equally spaced knots in units of the spacing: every
// denominator is j. t is the offset of x inside its knot span.
template <int P>
void uniform_local(double t, double ih, double* values, double* derivatives) {
  values[0] = 1.0;
  derivatives[0] = 0.0;
  for (int j = 1; j <= P; ++j) {
    if (j == P) {
      derivatives[0] = -values[0] * ih;
      for (int r = 1; r < P; ++r) derivatives[r] = (values[r - 1] - values[r]) * ih;
      derivatives[P] = values[P - 1] * ih;
    }
    const double inv_j = 1.0 / j;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = values[r] * inv_j;
      values[r] = saved + (r + 1 - t) * temp;
      saved = (t + j - r - 1) * temp;
    }
    values[j] = saved;
  }
}

void uniform_local_dynamic(int p, double t, double ih, double* values, double* derivatives) {
  values[0] = 1.0;
  derivatives[0] = 0.0;
  for (int j = 1; j <= p; ++j) {
    if (j == p) {
      derivatives[0] = -values[0] * ih;
      for (int r = 1; r < p; ++r) derivatives[r] = (values[r - 1] - values[r]) * ih;
      derivatives[p] = values[p - 1] * ih;
    }
    const double inv_j = 1.0 / j;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = values[r] * inv_j;
      values[r] = saved + (r + 1 - t) * temp;
      saved = (t + j - r - 1) * temp;
    }
    values[j] = saved;
  }
}

}  // namespace

int bspline_local(const KnotGrid& grid, double x, std::span<double> values,
                  std::span<double> derivatives, std::span<double> scratch) {
  const int p = grid.degree();
  const int s = grid.span(x);
  const auto& u = grid.knots();
  double* left = scratch.data();
  double* right = scratch.data() + (p + 1);

  if (grid.uniform()) {
    const double t = (x - u[static_cast<std::size_t>(s)]) * grid.inverse_spacing();
    if (p == 3) {
      uniform_local<3>(t, grid.inverse_spacing(), values.data(), derivatives.data());
    } else {
      uniform_local_dynamic(p, t, grid.inverse_spacing(), values.data(), derivatives.data());
    }
    return s - p;
  }

  values[0] = 1.0;
  derivatives[0] = 0.0;
  for (int j = 1; j <= p; ++j) {
    if (j == p) {
      // values[0..p-1] hold the degree p-1 functions starting at s-p+1.
      for (int r = 0; r <= p; ++r) {
        const int i = s - p + r;
        double d = 0.0;
        if (r >= 1) d += values[r - 1] / (u[i + p] - u[i]);
        if (r <= p - 1) d -= values[r] / (u[i + p + 1] - u[i + 1]);
        derivatives[r] = p * d;
      }
    }
    left[j] = x - u[s + 1 - j];
    right[j] = u[s + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = values[r] / (right[r + 1] + left[j - r]);
      values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[j] = saved;
  }
  return s - p;
}

LocalBasis bspline_local(const KnotGrid& grid, double x) {
  if (!grid.contains(x)) {
    std::ostringstream os;
    os << "bspline: x = " << x << " outside grid domain [" << grid.lo() << ", " << grid.hi() << "]";
    throw OutOfRangeError(os.str());
  }
  const auto n = static_cast<std::size_t>(grid.degree() + 1);
  LocalBasis out;
  out.values.resize(n);
  out.derivatives.resize(n);
  std::vector<double> scratch(2 * n);
  out.first = bspline_local(grid, x, out.values, out.derivatives, scratch);
  return out;
}

std::vector<double> bspline_basis(const KnotGrid& grid, double x) {
  const LocalBasis local = bspline_local(grid, x);
  std::vector<double> full(static_cast<std::size_t>(grid.basis_count()), 0.0);
  for (std::size_t r = 0; r < local.values.size(); ++r) {
    full[static_cast<std::size_t>(local.first) + r] = local.values[r];
  }
  return full;
}

LeastSquaresResult solve_least_squares(const DenseMatrix& design, std::span<const double> target) {
  if (design.rows != target.size()) throw ShapeError("solve_least_squares: target length != design rows");
  if (design.rows < design.cols) throw ShapeError("solve_least_squares: need rows >= cols");
  for (double v : design.data) {
    if (!std::isfinite(v)) throw DomainError("solve_least_squares: non-finite design entry");
  }
  const auto m = static_cast<Eigen::Index>(design.rows);
  const auto n = static_cast<Eigen::Index>(design.cols);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(
      design.data.data(), m, n);
  Eigen::Map<const Eigen::VectorXd> b(target.data(), m);

  LeastSquaresResult out;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  out.rank = static_cast<int>(qr.rank());
  Eigen::VectorXd c;
  if (qr.rank() == n) {
    c = qr.solve(b);
  } else {
    out.ridge_fallback = true;
    Eigen::MatrixXd normal = a.transpose() * a;
    normal.diagonal().array() += 1e-8;
    c = normal.ldlt().solve(a.transpose() * b);
  }
  out.coeffs.assign(c.data(), c.data() + c.size());
  return out;
}

}  // namespace kanheat
