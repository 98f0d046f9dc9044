#include "kanheat/snap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "kanheat/errors.hpp"
#include "kanheat/format.hpp"

namespace kanheat {

namespace {

constexpr int kScaleCount = 24;
constexpr double kScaleMin = 0.1;
constexpr double kScaleMax = 50.0;
constexpr int kShiftCount = 25;
constexpr double kShiftMax = 10.0;

struct Fit {
  AffineParams p;
  double sse = std::numeric_limits<double>::infinity();
};

// Closed-form c, d for y ~ c f + d.
Fit fit_cd(std::span<const double> f, std::span<const double> y, double a, double b) {
  const std::size_t n = f.size();
  double fm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fm += f[i];
    ym += y[i];
  }
  fm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sff = 0.0, sfy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sff += (f[i] - fm) * (f[i] - fm);
    sfy += (f[i] - fm) * (y[i] - ym);
  }
  Fit fit;
  fit.p.a = a;
  fit.p.b = b;
  fit.p.c = sff > 1e-300 ? sfy / sff : 0.0;
  fit.p.d = ym - fit.p.c * fm;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = fit.p.c * f[i] + fit.p.d - y[i];
    sse += r * r;
  }
  fit.sse = std::isfinite(sse) ? sse : std::numeric_limits<double>::infinity();
  return fit;
}

double sse_of(const Operator& op, const AffineParams& p, std::span<const double> xs, std::span<const double> ys) {
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = p.c * op.eval(op.clamp_to_domain(p.a * xs[i] + p.b)) + p.d - ys[i];
    s += r * r;
  }
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

// Solves the 4x4 system in place by Gaussian elimination with pivoting.
bool solve4(std::array<std::array<double, 4>, 4> m, std::array<double, 4> rhs, std::array<double, 4>& out) {
  for (int c = 0; c < 4; ++c) {
    int piv = c;
    for (int r = c + 1; r < 4; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    }
    if (!(std::abs(m[piv][c]) > 1e-300)) return false;
    std::swap(m[c], m[piv]);
    std::swap(rhs[c], rhs[piv]);
    for (int r = c + 1; r < 4; ++r) {
      const double f = m[r][c] / m[c][c];
      for (int k = c; k < 4; ++k) m[r][k] -= f * m[c][k];
      rhs[r] -= f * rhs[c];
    }
  }
  for (int r = 3; r >= 0; --r) {
    double s = rhs[r];
    for (int k = r + 1; k < 4; ++k) s -= m[r][k] * out[k];
    out[r] = s / m[r][r];
  }
  return std::isfinite(out[0]) && std::isfinite(out[1]) && std::isfinite(out[2]) && std::isfinite(out[3]);
}

// Damped Gauss-Newton over (a, b, c, d).
Fit refine(const Operator& op, Fit fit, std::span<const double> xs, std::span<const double> ys, int iterations) {
  double lambda = 1e-3;
  for (int it = 0; it < iterations; ++it) {
    std::array<std::array<double, 4>, 4> jtj{};
    std::array<double, 4> jtr{};
    const AffineParams& p = fit.p;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double z_raw = p.a * xs[i] + p.b;
      const double z = op.clamp_to_domain(z_raw);
      const double fz = op.eval(z);
      const double dz = z == z_raw ? p.c * op.derivative(z) : 0.0;
      const std::array<double, 4> j{dz * xs[i], dz, fz, 1.0};
      const double r = p.c * fz + p.d - ys[i];
      for (int u = 0; u < 4; ++u) {
        jtr[u] += j[u] * r;
        for (int v = 0; v < 4; ++v) jtj[u][v] += j[u] * j[v];
      }
    }
    bool improved = false;
    for (int attempt = 0; attempt < 8 && !improved; ++attempt) {
      auto m = jtj;
      for (int u = 0; u < 4; ++u) m[u][u] += lambda * (jtj[u][u] + 1e-12);
      std::array<double, 4> delta{};
      std::array<double, 4> rhs{-jtr[0], -jtr[1], -jtr[2], -jtr[3]};
      if (solve4(m, rhs, delta)) {
        AffineParams q{p.a + delta[0], p.b + delta[1], p.c + delta[2], p.d + delta[3]};
        const double s = sse_of(op, q, xs, ys);
        if (s < fit.sse) {
          fit.p = q;
          fit.sse = s;
          improved = true;
          lambda = std::max(lambda / 3.0, 1e-12);
          break;
        }
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  return fit;
}

Fit search(const Operator& op, std::span<const double> xs, std::span<const double> ys, int refine_iterations) {
  std::vector<double> f(xs.size());
  if (op.name == "x") {
    return fit_cd(xs, ys, 1.0, 0.0);
  }
  Fit best;
  for (int sign = 0; sign < 2; ++sign) {
    for (int k = 0; k < kScaleCount; ++k) {
      const double mag = kScaleMin * std::pow(kScaleMax / kScaleMin, static_cast<double>(k) / (kScaleCount - 1));
      const double a = sign == 0 ? mag : -mag;
      for (int m = 0; m < kShiftCount; ++m) {
        const double b = -kShiftMax + 2.0 * kShiftMax * m / (kShiftCount - 1);
        bool finite = true;
        for (std::size_t i = 0; i < xs.size(); ++i) {
          f[i] = op.eval(op.clamp_to_domain(a * xs[i] + b));
          if (!std::isfinite(f[i])) {
            finite = false;
            break;
          }
        }
        if (!finite) continue;
        const Fit fit = fit_cd(f, ys, a, b);
        if (fit.sse < best.sse) best = fit;
      }
    }
  }
  if (!std::isfinite(best.sse)) return best;
  return refine(op, best, xs, ys, refine_iterations);
}

double total_ss(std::span<const double> ys) {
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double s = 0.0;
  for (double y : ys) s += (y - mean) * (y - mean);
  return s;
}

}  // namespace

double snap_r2(const Operator& op, const AffineParams& affine, std::span<const double> xs,
               std::span<const double> ys) {
  const double sst = total_ss(ys);
  const double sse = sse_of(op, affine, xs, ys);
  if (!(sst > 0.0)) return sse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  return 1.0 - sse / sst;
}

SnapResult snap_edge(std::span<const double> xs, std::span<const double> ys, const OperatorLibrary& library,
                     const SnapOptions& options) {
  if (xs.size() != ys.size()) throw ShapeError("snap_edge: x and y lengths differ");
  if (xs.size() < 10) throw ConfigError("snap_edge: need at least 10 samples");
  if (library.empty()) throw ConfigError("snap_edge: empty operator library");
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (!(*hi - *lo > 1e-12)) throw ConfigError("snap_edge: degenerate x range");

  std::vector<double> sx, sy;
  if (xs.size() > options.max_samples && options.max_samples >= 10) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    const std::size_t m = options.max_samples;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t r = order[k * (xs.size() - 1) / (m - 1)];
      sx.push_back(xs[r]);
      sy.push_back(ys[r]);
    }
  } else {
    sx.assign(xs.begin(), xs.end());
    sy.assign(ys.begin(), ys.end());
  }

  SnapResult res;
  const double sst = total_ss(ys);
  if (!(sst > 1e-24 * static_cast<double>(ys.size()))) {
    // Constant target: any operator with c = 0 reproduces it.
    const Operator* simplest = *std::min_element(library.begin(), library.end(), [](const Operator* a, const Operator* b) {
      return std::tie(a->complexity_weight, a->name) < std::tie(b->complexity_weight, b->name);
    });
    const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    res.snapped = true;
    res.op = simplest;
    res.affine = {1.0, 0.0, 0.0, mean};
    res.r2 = 1.0;
    for (const Operator* op : library) res.candidates.push_back({op, {1.0, 0.0, 0.0, mean}, 1.0});
    return res;
  }

  for (const Operator* op : library) {
    const Fit fit = search(*op, sx, sy, options.refine_iterations);
    SnapCandidate c;
    c.op = op;
    c.affine = fit.p;
    c.r2 = std::isfinite(fit.sse) ? snap_r2(*op, fit.p, xs, ys) : -std::numeric_limits<double>::infinity();
    if (!std::isfinite(c.r2)) c.r2 = -std::numeric_limits<double>::infinity();
    res.candidates.push_back(c);
  }

  double best_r2 = -std::numeric_limits<double>::infinity();
  for (const auto& c : res.candidates) best_r2 = std::max(best_r2, c.r2);
  const double tol = std::max(options.simplicity_tolerance, 1e-12);
  const SnapCandidate* chosen = nullptr;
  for (const auto& c : res.candidates) {
    if (c.r2 < best_r2 - tol) continue;
    if (!chosen) {
      chosen = &c;
      continue;
    }
    const auto key = [](const SnapCandidate& s) { return std::make_tuple(s.op->complexity_weight, -s.r2, s.op->name); };
    if (options.simplicity_tolerance > 0.0) {
      if (key(c) < key(*chosen)) chosen = &c;
    } else if (std::tie(c.op->complexity_weight, c.op->name) < std::tie(chosen->op->complexity_weight, chosen->op->name)) {
      chosen = &c;
    }
  }
  if (chosen && chosen->r2 >= options.r2_floor) {
    res.snapped = true;
    res.op = chosen->op;
    res.affine = chosen->affine;
    res.r2 = chosen->r2;
  } else {
    res.snapped = false;
    res.r2 = chosen ? chosen->r2 : best_r2;
  }
  return res;
}

AutoSymbolicReport auto_symbolic(KanNetwork& net, std::span<const double> inputs, std::size_t rows,
                                 const OperatorLibrary& library, const SnapOptions& options, bool trainable_affine) {
  if (rows == 0) throw DataError("auto_symbolic: no samples");
  const auto acts = layer_inputs(net, inputs, rows);
  AutoSymbolicReport report;
  struct Job {
    int l, i, j;
  };
  std::vector<Job> jobs;
  for (int l = 0; l < net.depth(); ++l) {
    const auto& layer = net.layer(l);
    for (int i = 0; i < layer.n_in; ++i) {
      for (int j = 0; j < layer.n_out; ++j) {
        if (layer.edge(i, j).locked()) {
          ++report.already_locked;
        } else {
          jobs.push_back({l, i, j});
        }
      }
    }
  }
  std::vector<SnapResult> results(jobs.size());
  std::vector<char> constant(jobs.size(), 0);
  const long long njobs = static_cast<long long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long t = 0; t < njobs; ++t) {
    const Job& job = jobs[static_cast<std::size_t>(t)];
    const auto& layer = net.layer(job.l);
    const SplineEdge& edge = layer.edge(job.i, job.j);
    const auto& a = acts[static_cast<std::size_t>(job.l)];
    std::vector<double> xs(rows), ys(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      xs[r] = a[r * static_cast<std::size_t>(layer.n_in) + static_cast<std::size_t>(job.i)];
      ys[r] = edge.eval(xs[r]);
    }
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    SnapResult& res = results[static_cast<std::size_t>(t)];
    if (rows < 10 || !(*hi - *lo > 1e-12)) {
      constant[static_cast<std::size_t>(t)] = 1;
      res.snapped = true;
      res.op = &find_operator("x");
      res.affine = {1.0, 0.0, 0.0, std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(rows)};
      res.r2 = 1.0;
    } else {
      res = snap_edge(xs, ys, library, options);
    }
  }
  for (std::size_t t = 0; t < jobs.size(); ++t) {
    const Job& job = jobs[t];
    const SnapResult& res = results[t];
    std::ostringstream line;
    line << "layer " << job.l << " edge " << job.i << "->" << job.j << ": ";
    if (res.snapped) {
      net.lock_edge(job.l, job.i, job.j, res.op->name, res.affine, trainable_affine);
      ++report.locked;
      line << res.op->name << " r2=" << format_fixed(res.r2, 6) << (constant[t] ? " (constant input)" : "");
    } else {
      ++report.unsnapped;
      line << "numeric r2=" << format_fixed(res.r2, 6);
    }
    report.log.push_back(line.str());
  }
  return report;
}

}  // namespace kanheat
