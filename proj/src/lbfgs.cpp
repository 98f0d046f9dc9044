#include "kanheat/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "kanheat/errors.hpp"

namespace kanheat {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct LinePoint {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;
};

// Evaluates phi(alpha) = f(x + alpha d) and its derivative.
class LineFunction {
 public:
  LineFunction(const Objective& f, std::span<const double> x, std::span<const double> d)
      : f_(f), x_(x), d_(d), trial_(x.size()), grad_(x.size()) {}

  LinePoint eval(double alpha) {
    for (std::size_t i = 0; i < x_.size(); ++i) trial_[i] = x_[i] + alpha * d_[i];
    const double v = f_(trial_, grad_);
    return {alpha, v, dot(grad_, d_)};
  }
  const std::vector<double>& trial() const { return trial_; }
  const std::vector<double>& grad() const { return grad_; }

 private:
  const Objective& f_;
  std::span<const double> x_;
  std::span<const double> d_;
  std::vector<double> trial_;
  std::vector<double> grad_;
};

// Minimizer of the cubic matching values and slopes at lo and hi, kept
// inside the bracket.
double cubic_step(const LinePoint& lo, const LinePoint& hi) {
  const double d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (lo.alpha - hi.alpha);
  const double disc = d1 * d1 - lo.slope * hi.slope;
  const double a = std::min(lo.alpha, hi.alpha);
  const double b = std::max(lo.alpha, hi.alpha);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), hi.alpha - lo.alpha);
    const double t = hi.alpha - (hi.alpha - lo.alpha) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    const double margin = 0.1 * (b - a);
    if (std::isfinite(t) && t > a + margin && t < b - margin) return t;
  }
  return 0.5 * (a + b);
}

bool finite_point(const LinePoint& p) { return std::isfinite(p.value) && std::isfinite(p.slope); }

// Strong-Wolfe search (bracketing then zoom). Leaves the accepted point in
// `line` and returns true on success.
bool strong_wolfe(LineFunction& line, const LinePoint& zero, double alpha0, const LbfgsOptions& opt,
                  LinePoint& accepted) {
  LinePoint prev = zero;
  double alpha = alpha0;
  int evals = 0;
  auto zoom = [&](LinePoint lo, LinePoint hi) {
    while (evals < opt.max_line_search) {
      const double a = cubic_step(lo, hi);
      const LinePoint p = line.eval(a);
      ++evals;
      if (!finite_point(p) || p.value > zero.value + opt.c1 * a * zero.slope || p.value >= lo.value) {
        hi = p;
      } else {
        if (std::abs(p.slope) <= -opt.c2 * zero.slope) {
          accepted = p;
          return true;
        }
        if (p.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = p;
      }
      if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
    }
    return false;
  };
  while (evals < opt.max_line_search) {
    const LinePoint p = line.eval(alpha);
    ++evals;
    if (!finite_point(p)) {
      alpha = 0.5 * (prev.alpha + alpha);
      continue;
    }
    if (p.value > zero.value + opt.c1 * alpha * zero.slope || (evals > 1 && p.value >= prev.value)) {
      if (zoom(prev, p)) return true;
      break;
    }
    if (std::abs(p.slope) <= -opt.c2 * zero.slope) {
      accepted = p;
      return true;
    }
    if (p.slope >= 0.0) {
      if (zoom(p, prev)) return true;
      break;
    }
    prev = p;
    alpha *= 2.0;
  }
  return false;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& opt,
                           const IterationCallback& callback) {
  if (opt.memory < 1) throw ConfigError("lbfgs: memory must be >= 1");
  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);
  std::vector<double> g(n);
  res.value = f(res.x, g);
  if (!std::isfinite(res.value)) throw NumericError("lbfgs: non-finite objective at the starting point");

  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> d(n);
  std::vector<double> alpha_buf;

  if (n == 0 || inf_norm(g) <= opt.gradient_tolerance) {
    res.stop_reason = "converged";
    return res;
  }

  res.stop_reason = "max_iterations";
  while (res.iterations < opt.max_iterations) {
    // Two-loop recursion for d = -H g.
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    const std::size_t m = s_hist.size();
    alpha_buf.assign(m, 0.0);
    for (std::size_t k = m; k-- > 0;) {
      alpha_buf[k] = rho_hist[k] * dot(s_hist[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha_buf[k] * y_hist[k][i];
    }
    if (m > 0) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha_buf[k] - beta) * s_hist[k][i];
    }

    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = dot(g, d);
    }
    const double alpha0 = m == 0 ? std::min(1.0, 1.0 / inf_norm(g)) : 1.0;

    LineFunction line(f, res.x, d);
    LinePoint accepted;
    const LinePoint zero{0.0, res.value, slope};
    std::vector<double> x_new;
    std::vector<double> g_new;
    double f_new = res.value;
    if (strong_wolfe(line, zero, alpha0, opt, accepted)) {
      f_new = accepted.value;
      line.eval(accepted.alpha);
      x_new = line.trial();
      g_new = line.grad();
    } else {
      // Steepest descent with step halving.
      ++res.fallback_steps;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      LineFunction sd(f, res.x, d);
      double a = 1.0 / std::max(inf_norm(g), 1e-300);
      bool ok = false;
      for (int h = 0; h < 60; ++h, a *= 0.5) {
        const LinePoint p = sd.eval(a);
        if (std::isfinite(p.value) && p.value < res.value) {
          f_new = p.value;
          x_new = sd.trial();
          g_new = sd.grad();
          ok = true;
          break;
        }
      }
      if (!ok) {
        res.stop_reason = "line_search_failed";
        break;
      }
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    const double f_old = res.value;
    res.x = std::move(x_new);
    g = std::move(g_new);
    res.value = f_new;
    ++res.iterations;
    res.trace.push_back(f_new);

    if (callback && !callback(res.iterations, res.x, res.value)) {
      res.stop_reason = "callback";
      break;
    }
    if (inf_norm(g) <= opt.gradient_tolerance) {
      res.stop_reason = "converged";
      break;
    }
    if (f_old - f_new <= 1e-15 * std::max(1.0, std::abs(f_old))) {
      res.stop_reason = "stalled";
      break;
    }
  }
  return res;
}

}  // namespace kanheat
