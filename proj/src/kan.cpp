#include "kanheat/kan.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <sstream>

#include "kanheat/errors.hpp"

namespace kanheat {

namespace {

constexpr std::size_t kMaxDegree = 32;

double local_spline(const KnotGrid& grid, std::span<const double> coeffs, double x) {
  std::array<double, kMaxDegree + 1> values{};
  std::array<double, kMaxDegree + 1> derivs{};
  std::array<double, 2 * (kMaxDegree + 1)> scratch{};
  const int first = bspline_local(grid, x, values, derivs, scratch);
  double s = 0.0;
  for (int r = 0; r <= grid.degree(); ++r) s += coeffs[static_cast<std::size_t>(first + r)] * values[r];
  return s;
}

double lock_eval(const SymbolicLock& lock, double x) {
  const AffineParams& p = lock.affine;
  const double z = lock.op->clamp_to_domain(p.a * x + p.b);
  return p.c * lock.op->eval(z) + p.d;
}

// Per-thread scratch for one backward pass.
struct BackpropWorkspace {
  std::vector<std::vector<double>> nodes;     // node values per layer
  std::vector<std::vector<double>> dnodes;    // adjoints per layer
  std::vector<std::vector<double>> basis;     // [edge * (k+1) + r]
  std::vector<std::vector<double>> dbasis;
  std::vector<std::vector<int>> first;
  std::vector<std::vector<double>> spline;    // spline sum per edge
  std::vector<std::vector<char>> inside;
  std::vector<double> scratch;
  std::vector<std::size_t> offset;  // first parameter index of each layer

  void prepare(const KanNetwork& net) {
    const auto depth = static_cast<std::size_t>(net.depth());
    const auto width = static_cast<std::size_t>(net.degree() + 1);
    nodes.resize(depth + 1);
    dnodes.resize(depth + 1);
    basis.resize(depth);
    dbasis.resize(depth);
    first.resize(depth);
    spline.resize(depth);
    inside.resize(depth);
    for (std::size_t l = 0; l <= depth; ++l) {
      const auto w = static_cast<std::size_t>(net.widths()[l]);
      nodes[l].resize(w);
      dnodes[l].resize(w);
    }
    for (std::size_t l = 0; l < depth; ++l) {
      const std::size_t e = net.layer(static_cast<int>(l)).edges.size();
      basis[l].resize(e * width);
      dbasis[l].resize(e * width);
      first[l].resize(e);
      spline[l].resize(e);
      inside[l].resize(e);
    }
    scratch.resize(2 * width);
    offset.resize(depth);
    std::size_t k = 0;
    for (std::size_t l = 0; l < depth; ++l) {
      offset[l] = k;
      const auto& layer = net.layer(static_cast<int>(l));
      for (const auto& e : layer.edges) k += e.trainable_count();
      k += layer.biases.size();
    }
  }
};

}  // namespace

SplineEdge::SplineEdge(KnotGrid g)
    : grid(std::move(g)), coeffs(static_cast<std::size_t>(grid.basis_count()), 0.0) {}

bool SplineEdge::is_zero() const { return lock && lock->op->name == "0"; }

double SplineEdge::spline_value(double x) const {
  return local_spline(grid, coeffs, std::clamp(x, grid.lo(), grid.hi()));
}

double SplineEdge::eval(double x, bool& clamped) const {
  clamped = false;
  if (lock) return lock_eval(*lock, x);
  const double xc = std::clamp(x, grid.lo(), grid.hi());
  clamped = xc != x;
  return base_weight * silu(x) + spline_weight * local_spline(grid, coeffs, xc);
}

double SplineEdge::eval(double x) const {
  bool clamped = false;
  return eval(x, clamped);
}

std::size_t SplineEdge::trainable_count() const {
  if (lock) return lock->trainable ? 4 : 0;
  return coeffs.size() + 2;
}

double edge_eval(const SplineEdge& edge, double x) { return edge.eval(x); }

bool operator==(const SplineEdge& a, const SplineEdge& b) {
  if (a.grid != b.grid || a.coeffs != b.coeffs || a.base_weight != b.base_weight ||
      a.spline_weight != b.spline_weight || a.lock.has_value() != b.lock.has_value()) {
    return false;
  }
  if (!a.lock) return true;
  return a.lock->op == b.lock->op && a.lock->affine == b.lock->affine &&
         a.lock->trainable == b.lock->trainable;
}

bool operator==(const KanNetwork& a, const KanNetwork& b) {
  if (a.widths_ != b.widths_ || a.intervals_ != b.intervals_ || a.degree_ != b.degree_) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].edges != b.layers_[l].edges || a.layers_[l].biases != b.layers_[l].biases) return false;
  }
  return true;
}

KanNetwork::KanNetwork(std::vector<int> widths, int intervals, int degree, double lo, double hi)
    : widths_(std::move(widths)), intervals_(intervals), degree_(degree) {
  if (widths_.size() < 2) throw ConfigError("KanNetwork: need at least input and output widths");
  for (int w : widths_) {
    if (w < 1) throw ConfigError("KanNetwork: widths must be positive");
  }
  if (degree > static_cast<int>(kMaxDegree)) throw ConfigError("KanNetwork: spline degree too large");
  const KnotGrid grid(lo, hi, intervals, degree);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    Layer layer;
    layer.n_in = widths_[l];
    layer.n_out = widths_[l + 1];
    layer.edges.assign(static_cast<std::size_t>(layer.n_in * layer.n_out), SplineEdge(grid));
    layer.biases.assign(static_cast<std::size_t>(layer.n_out), 0.0);
    layers_.push_back(std::move(layer));
  }
}

KanNetwork KanNetwork::random(std::vector<int> widths, int intervals, int degree, Rng& rng, double lo,
                              double hi) {
  KanNetwork net(std::move(widths), intervals, degree, lo, hi);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (auto& layer : net.layers_) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.n_in));
    for (auto& e : layer.edges) {
      e.base_weight = unit(rng) * scale;
      e.spline_weight = 0.1;
      for (double& c : e.coeffs) c = 0.1 * unit(rng) / e.spline_weight;
    }
  }
  return net;
}

std::size_t KanNetwork::edge_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.edges.size();
  return n;
}

std::vector<double> KanNetwork::forward(std::span<const double> input, ForwardStats* stats) const {
  if (static_cast<int>(input.size()) != input_dim()) {
    std::ostringstream os;
    os << "forward: input length " << input.size() << " != network input width " << input_dim();
    throw ShapeError(os.str());
  }
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  for (const auto& layer : layers_) {
    next.assign(layer.biases.begin(), layer.biases.end());
    for (int i = 0; i < layer.n_in; ++i) {
      const double u = cur[static_cast<std::size_t>(i)];
      for (int j = 0; j < layer.n_out; ++j) {
        bool clamped = false;
        next[static_cast<std::size_t>(j)] += layer.edge(i, j).eval(u, clamped);
        if (clamped && stats) ++stats->clamped;
      }
    }
    cur.swap(next);
  }
  return cur;
}

double KanNetwork::predict(std::span<const double> input) const { return forward(input).front(); }

std::size_t KanNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    for (const auto& e : layer.edges) n += e.trainable_count();
    n += layer.biases.size();
  }
  return n;
}

std::vector<double> KanNetwork::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& layer : layers_) {
    for (const auto& e : layer.edges) {
      if (e.lock) {
        if (e.lock->trainable) {
          const auto& a = e.lock->affine;
          p.insert(p.end(), {a.a, a.b, a.c, a.d});
        }
      } else {
        p.insert(p.end(), e.coeffs.begin(), e.coeffs.end());
        p.push_back(e.base_weight);
        p.push_back(e.spline_weight);
      }
    }
    p.insert(p.end(), layer.biases.begin(), layer.biases.end());
  }
  return p;
}

void KanNetwork::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw ShapeError("set_parameters: length mismatch");
  std::size_t k = 0;
  for (auto& layer : layers_) {
    for (auto& e : layer.edges) {
      if (e.lock) {
        if (e.lock->trainable) {
          auto& a = e.lock->affine;
          a.a = params[k];
          a.b = params[k + 1];
          a.c = params[k + 2];
          a.d = params[k + 3];
          k += 4;
        }
      } else {
        for (double& c : e.coeffs) c = params[k++];
        e.base_weight = params[k++];
        e.spline_weight = params[k++];
      }
    }
    for (double& b : layer.biases) b = params[k++];
  }
}

std::vector<char> KanNetwork::l2_mask() const {
  std::vector<char> mask;
  mask.reserve(parameter_count());
  for (const auto& layer : layers_) {
    for (const auto& e : layer.edges) {
      if (e.lock) {
        if (e.lock->trainable) mask.insert(mask.end(), 4, 0);
      } else {
        mask.insert(mask.end(), e.coeffs.size() + 2, 1);
      }
    }
    mask.insert(mask.end(), layer.biases.size(), 0);
  }
  return mask;
}

double KanNetwork::accumulate_sample(std::span<const double> input, double target,
                                     std::span<double> grad) const {
  thread_local BackpropWorkspace ws;
  ws.prepare(*this);
  const int width = degree_ + 1;
  std::copy(input.begin(), input.end(), ws.nodes[0].begin());

  // Forward, caching local bases.
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    auto& out = ws.nodes[l + 1];
    std::copy(layer.biases.begin(), layer.biases.end(), out.begin());
    for (int i = 0; i < layer.n_in; ++i) {
      const double u = ws.nodes[l][static_cast<std::size_t>(i)];
      const double base = silu(u);
      for (int j = 0; j < layer.n_out; ++j) {
        const auto e = static_cast<std::size_t>(i * layer.n_out + j);
        const SplineEdge& edge = layer.edges[e];
        if (edge.lock) {
          out[static_cast<std::size_t>(j)] += lock_eval(*edge.lock, u);
          continue;
        }
        const double uc = std::clamp(u, edge.grid.lo(), edge.grid.hi());
        ws.inside[l][e] = (uc == u) && u > edge.grid.lo() && u < edge.grid.hi();
        std::span<double> b(ws.basis[l].data() + e * width, static_cast<std::size_t>(width));
        std::span<double> db(ws.dbasis[l].data() + e * width, static_cast<std::size_t>(width));
        const int f = bspline_local(edge.grid, uc, b, db, ws.scratch);
        ws.first[l][e] = f;
        double s = 0.0;
        for (int r = 0; r < width; ++r) s += edge.coeffs[static_cast<std::size_t>(f + r)] * b[r];
        ws.spline[l][e] = s;
        out[static_cast<std::size_t>(j)] += edge.base_weight * base + edge.spline_weight * s;
      }
    }
  }

  const double pred = ws.nodes.back()[0];
  const double err = pred - target;
  std::fill(ws.dnodes.back().begin(), ws.dnodes.back().end(), 0.0);
  ws.dnodes.back()[0] = 2.0 * err;

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const auto& dout = ws.dnodes[l + 1];
    auto& din = ws.dnodes[l];
    std::fill(din.begin(), din.end(), 0.0);
    std::size_t k = ws.offset[l];
    for (int i = 0; i < layer.n_in; ++i) {
      const double u = ws.nodes[l][static_cast<std::size_t>(i)];
      const double sig = 1.0 / (1.0 + std::exp(-u));
      const double base = u * sig;
      const double dbase = sig * (1.0 + u * (1.0 - sig));
      double du = 0.0;
      for (int j = 0; j < layer.n_out; ++j) {
        const auto e = static_cast<std::size_t>(i * layer.n_out + j);
        const SplineEdge& edge = layer.edges[e];
        const double g = dout[static_cast<std::size_t>(j)];
        if (edge.lock) {
          const AffineParams& p = edge.lock->affine;
          const double z = p.a * u + p.b;
          const double zc = edge.lock->op->clamp_to_domain(z);
          const double fp = zc == z ? edge.lock->op->derivative(z) : 0.0;
          if (edge.lock->trainable) {
            grad[k] += g * p.c * fp * u;
            grad[k + 1] += g * p.c * fp;
            grad[k + 2] += g * edge.lock->op->eval(zc);
            grad[k + 3] += g;
            k += 4;
          }
          du += g * p.c * fp * p.a;
          continue;
        }
        const double* b = ws.basis[l].data() + e * width;
        const double* db = ws.dbasis[l].data() + e * width;
        const int f = ws.first[l][e];
        const double gs = g * edge.spline_weight;
        double dspline = 0.0;
        for (int r = 0; r < width; ++r) {
          grad[k + static_cast<std::size_t>(f + r)] += gs * b[r];
          dspline += edge.coeffs[static_cast<std::size_t>(f + r)] * db[r];
        }
        k += edge.coeffs.size();
        grad[k] += g * base;
        grad[k + 1] += g * ws.spline[l][e];
        k += 2;
        du += g * edge.base_weight * dbase;
        if (ws.inside[l][e]) du += gs * dspline;
      }
      din[static_cast<std::size_t>(i)] = du;
    }
    for (int j = 0; j < layer.n_out; ++j) grad[k + static_cast<std::size_t>(j)] += dout[static_cast<std::size_t>(j)];
  }
  return err * err;
}

void KanNetwork::lock_edge(int l, int i, int j, const std::string& op_name, AffineParams affine,
                           bool trainable_affine) {
  if (l < 0 || l >= depth() || i < 0 || i >= layer(l).n_in || j < 0 || j >= layer(l).n_out) {
    throw ShapeError("lock_edge: edge index out of range");
  }
  const Operator& op = find_operator(op_name);
  edge(l, i, j).lock = SymbolicLock{&op, affine, trainable_affine};
}

void KanNetwork::remove_hidden_node(int node_layer, int j) {
  if (node_layer < 1 || node_layer >= depth()) throw ShapeError("remove_hidden_node: not a hidden layer");
  Layer& in = layers_[static_cast<std::size_t>(node_layer - 1)];
  Layer& out = layers_[static_cast<std::size_t>(node_layer)];
  if (in.n_out <= 1) throw ShapeError("remove_hidden_node: cannot remove the last node of a layer");
  std::vector<SplineEdge> in_edges;
  for (int i = 0; i < in.n_in; ++i) {
    for (int jj = 0; jj < in.n_out; ++jj) {
      if (jj != j) in_edges.push_back(in.edge(i, jj));
    }
  }
  in.edges = std::move(in_edges);
  in.biases.erase(in.biases.begin() + j);
  in.n_out -= 1;
  std::vector<SplineEdge> out_edges;
  for (int i = 0; i < out.n_in; ++i) {
    if (i == j) continue;
    for (int kk = 0; kk < out.n_out; ++kk) out_edges.push_back(out.edge(i, kk));
  }
  out.edges = std::move(out_edges);
  out.n_in -= 1;
  widths_[static_cast<std::size_t>(node_layer)] -= 1;
}

double l2_penalty(const KanNetwork& net) {
  double s = 0.0;
  for (int l = 0; l < net.depth(); ++l) {
    for (const auto& e : net.layer(l).edges) {
      if (e.locked()) continue;
      for (double c : e.coeffs) s += c * c;
      s += e.base_weight * e.base_weight + e.spline_weight * e.spline_weight;
    }
  }
  return s;
}

void lock_edge_symbolic(KanNetwork& net, int layer, int i, int j, const std::string& op_name,
                        AffineParams affine, bool trainable_affine) {
  net.lock_edge(layer, i, j, op_name, affine, trainable_affine);
}

std::vector<std::vector<double>> layer_inputs(const KanNetwork& net, std::span<const double> inputs,
                                              std::size_t rows) {
  const auto n0 = static_cast<std::size_t>(net.input_dim());
  if (inputs.size() != rows * n0) throw ShapeError("layer_inputs: inputs size != rows * input_dim");
  std::vector<std::vector<double>> out(static_cast<std::size_t>(net.depth()));
  out[0].assign(inputs.begin(), inputs.end());
  for (int l = 0; l + 1 < net.depth(); ++l) {
    const auto& layer = net.layer(l);
    auto& next = out[static_cast<std::size_t>(l + 1)];
    next.assign(rows * static_cast<std::size_t>(layer.n_out), 0.0);
    const auto& cur = out[static_cast<std::size_t>(l)];
    for (std::size_t r = 0; r < rows; ++r) {
      for (int j = 0; j < layer.n_out; ++j) {
        double v = layer.biases[static_cast<std::size_t>(j)];
        for (int i = 0; i < layer.n_in; ++i) {
          v += layer.edge(i, j).eval(cur[r * static_cast<std::size_t>(layer.n_in) + static_cast<std::size_t>(i)]);
        }
        next[r * static_cast<std::size_t>(layer.n_out) + static_cast<std::size_t>(j)] = v;
      }
    }
  }
  return out;
}

std::vector<std::vector<double>> edge_activation_std(const KanNetwork& net,
                                                     std::span<const double> inputs, std::size_t rows) {
  const auto acts = layer_inputs(net, inputs, rows);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(net.depth()));
  for (int l = 0; l < net.depth(); ++l) {
    const auto& layer = net.layer(l);
    const auto& in = acts[static_cast<std::size_t>(l)];
    auto& s = out[static_cast<std::size_t>(l)];
    s.assign(layer.edges.size(), 0.0);
    for (int i = 0; i < layer.n_in; ++i) {
      for (int j = 0; j < layer.n_out; ++j) {
        double mean = 0.0;
        double m2 = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          const double v = layer.edge(i, j).eval(in[r * static_cast<std::size_t>(layer.n_in) + static_cast<std::size_t>(i)]);
          const double delta = v - mean;
          mean += delta / static_cast<double>(r + 1);
          m2 += delta * (v - mean);
        }
        s[static_cast<std::size_t>(i * layer.n_out + j)] = rows > 0 ? std::sqrt(m2 / static_cast<double>(rows)) : 0.0;
      }
    }
  }
  return out;
}

namespace {

// Spline part continued linearly past the grid ends.
double spline_extended(const SplineEdge& edge, double x) {
  const double lo = edge.grid.lo();
  const double hi = edge.grid.hi();
  if (x >= lo && x <= hi) return edge.spline_value(x);
  const double end = x < lo ? lo : hi;
  const LocalBasis b = bspline_local(edge.grid, end);
  double value = 0.0, slope = 0.0;
  for (std::size_t i = 0; i < b.values.size(); ++i) {
    const double c = edge.coeffs[static_cast<std::size_t>(b.first) + i];
    value += c * b.values[i];
    slope += c * b.derivatives[i];
  }
  return value + slope * (x - end);
}

std::vector<double> predict_rows(const KanNetwork& net, std::span<const double> inputs, std::size_t rows) {
  const auto n0 = static_cast<std::size_t>(net.input_dim());
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = net.predict(inputs.subspan(r * n0, n0));
  return out;
}

double rms_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return a.empty() ? 0.0 : std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace

RefitReport grid_refit(KanNetwork& net, std::span<const double> inputs, std::size_t rows) {
  RefitReport report;
  const auto before = predict_rows(net, inputs, rows);
  const int G = net.intervals();
  const int k = net.degree();
  const auto nbasis = static_cast<std::size_t>(G + k);

  if (rows < nbasis) {
    for (int l = 0; l < net.depth(); ++l) {
      for (const auto& e : net.layer(l).edges) {
        if (!e.locked()) ++report.edges_skipped;
      }
    }
    report.warnings.push_back("grid_refit: " + std::to_string(rows) + " samples < G + k = " +
                              std::to_string(nbasis) + "; refit skipped");
    return report;
  }

  std::vector<double> cur(inputs.begin(), inputs.end());
  for (int l = 0; l < net.depth(); ++l) {
    auto& layer = net.layer(l);
    for (int i = 0; i < layer.n_in; ++i) {
      double umin = std::numeric_limits<double>::infinity();
      double umax = -umin;
      for (std::size_t r = 0; r < rows; ++r) {
        const double u = cur[r * static_cast<std::size_t>(layer.n_in) + static_cast<std::size_t>(i)];
        umin = std::min(umin, u);
        umax = std::max(umax, u);
      }
      for (int j = 0; j < layer.n_out; ++j) {
        SplineEdge& edge = layer.edge(i, j);
        if (edge.locked()) continue;
        const double lo = edge.grid.lo();
        const double hi = edge.grid.hi();
        const bool covered = umin >= lo && umax <= hi;
        const bool tight = (umax - umin) >= 0.5 * (hi - lo);
        if (covered && tight) continue;
        const double range = umax - umin;
        if (!(range > 0.0) || !std::isfinite(range)) {
          ++report.edges_skipped;
          report.warnings.push_back("grid_refit: degenerate activation range on layer " + std::to_string(l) +
                                    " edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
          continue;
        }
        const KnotGrid new_grid(umin - 0.05 * range, umax + 0.05 * range, G, k);
        // Fit points: observed activations plus a uniform sweep of the new domain.
        std::vector<double> pts;
        pts.reserve(rows + 4 * nbasis + 1);
        for (std::size_t r = 0; r < rows; ++r) {
          pts.push_back(cur[r * static_cast<std::size_t>(layer.n_in) + static_cast<std::size_t>(i)]);
        }
        const std::size_t sweep = 4 * nbasis + 1;
        for (std::size_t s = 0; s < sweep; ++s) {
          pts.push_back(new_grid.lo() + (new_grid.hi() - new_grid.lo()) * static_cast<double>(s) /
                                            static_cast<double>(sweep - 1));
        }
        DenseMatrix design(pts.size(), nbasis);
        std::vector<double> target(pts.size());
        for (std::size_t p = 0; p < pts.size(); ++p) {
          target[p] = spline_extended(edge, pts[p]);
          const auto basis = bspline_basis(new_grid, std::clamp(pts[p], new_grid.lo(), new_grid.hi()));
          for (std::size_t c = 0; c < nbasis; ++c) design(p, c) = basis[c];
        }
        edge.coeffs = solve_least_squares(design, target).coeffs;
        edge.grid = new_grid;
        ++report.edges_refit;
      }
    }
    // Propagate through the (possibly updated) layer.
    std::vector<double> next(rows * static_cast<std::size_t>(layer.n_out));
    for (std::size_t r = 0; r < rows; ++r) {
      for (int j = 0; j < layer.n_out; ++j) {
        double v = layer.biases[static_cast<std::size_t>(j)];
        for (int i = 0; i < layer.n_in; ++i) {
          v += layer.edge(i, j).eval(cur[r * static_cast<std::size_t>(layer.n_in) + static_cast<std::size_t>(i)]);
        }
        next[r * static_cast<std::size_t>(layer.n_out) + static_cast<std::size_t>(j)] = v;
      }
    }
    cur.swap(next);
  }
  report.rms_change = rms_diff(before, predict_rows(net, inputs, rows));
  return report;
}

PruneReport prune(KanNetwork& net, std::span<const double> inputs, std::size_t rows, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("prune: threshold must lie in (0, 1)");
  }
  if (rows == 0) throw DataError("prune: empty calibration batch");
  PruneReport report;
  const auto before = predict_rows(net, inputs, rows);
  const auto acts = layer_inputs(net, inputs, rows);

  for (int l = 0; l < net.depth(); ++l) {
    auto& layer = net.layer(l);
    const auto& in = acts[static_cast<std::size_t>(l)];
    std::vector<double> mean(layer.edges.size(), 0.0);
    std::vector<double> stdev(layer.edges.size(), 0.0);
    double max_std = 0.0;
    for (int i = 0; i < layer.n_in; ++i) {
      for (int j = 0; j < layer.n_out; ++j) {
        const auto e = static_cast<std::size_t>(i * layer.n_out + j);
        double m = 0.0;
        double m2 = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          const double v = layer.edges[e].eval(in[r * static_cast<std::size_t>(layer.n_in) + static_cast<std::size_t>(i)]);
          const double delta = v - m;
          m += delta / static_cast<double>(r + 1);
          m2 += delta * (v - m);
        }
        mean[e] = m;
        stdev[e] = std::sqrt(m2 / static_cast<double>(rows));
        max_std = std::max(max_std, stdev[e]);
      }
    }
    for (int i = 0; i < layer.n_in; ++i) {
      for (int j = 0; j < layer.n_out; ++j) {
        const auto e = static_cast<std::size_t>(i * layer.n_out + j);
        SplineEdge& edge = layer.edges[e];
        if (edge.is_zero()) continue;
        if (stdev[e] < threshold * max_std || max_std == 0.0) {
          layer.biases[static_cast<std::size_t>(j)] += mean[e];
          edge.lock = SymbolicLock{&find_operator("0"), AffineParams{}, false};
          ++report.edges_pruned;
        }
      }
    }
  }

  // Remove hidden nodes that are constant (all inputs zero) or unused (all outputs zero).
  bool changed = true;
  while (changed) {
    changed = false;
    for (int nl = 1; nl < net.depth() && !changed; ++nl) {
      auto& in = net.layer(nl - 1);
      auto& out = net.layer(nl);
      for (int j = 0; j < in.n_out && !changed; ++j) {
        if (in.n_out <= 1) break;
        bool all_in_zero = true;
        for (int i = 0; i < in.n_in; ++i) all_in_zero = all_in_zero && in.edge(i, j).is_zero();
        bool all_out_zero = true;
        for (int kk = 0; kk < out.n_out; ++kk) all_out_zero = all_out_zero && out.edge(j, kk).is_zero();
        if (!all_in_zero && !all_out_zero) continue;
        if (all_in_zero) {
          const double value = in.biases[static_cast<std::size_t>(j)];
          for (int kk = 0; kk < out.n_out; ++kk) {
            out.biases[static_cast<std::size_t>(kk)] += out.edge(j, kk).eval(value);
          }
        }
        net.remove_hidden_node(nl, j);
        ++report.nodes_removed;
        changed = true;
      }
    }
  }
  report.rms_change = rms_diff(before, predict_rows(net, inputs, rows));
  return report;
}

}  // namespace kanheat
