#include "kanheat/gp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "kanheat/errors.hpp"
#include "kanheat/numerics.hpp"
#include "kanheat/rng.hpp"

namespace kanheat {

namespace {

using Kind = Expr::Kind;

constexpr double kConstantRange = 10.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::array<Kind, 4> kBinary{Kind::Add, Kind::Sub, Kind::Mul, Kind::Div};

struct Individual {
  ExprPtr tree;
  double fitness = kNegInf;
};

class TreeFactory {
 public:
  TreeFactory(int variables, OperatorLibrary unary) : variables_(variables), unary_(std::move(unary)) {}

  ExprPtr terminal(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (variables_ > 0 && u(rng) < 0.6) {
      std::uniform_int_distribution<int> v(0, variables_ - 1);
      return make_variable(v(rng));
    }
    std::uniform_real_distribution<double> c(-kConstantRange, kConstantRange);
    return make_constant(c(rng));
  }

  ExprPtr function(Rng& rng, ExprPtr a, ExprPtr b) const {
    const auto choices = kBinary.size() + unary_.size();
    std::uniform_int_distribution<std::size_t> pick(0, choices - 1);
    const std::size_t k = pick(rng);
    if (k < kBinary.size()) return make_binary(kBinary[k], std::move(a), std::move(b));
    return make_apply(*unary_[k - kBinary.size()], AffineParams{}, std::move(a));
  }

  // `full` grows every branch to `depth`; otherwise branches may stop early.
  ExprPtr random_tree(Rng& rng, int depth, bool full) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (depth <= 1 || (!full && u(rng) < 0.3)) return terminal(rng);
    ExprPtr a = random_tree(rng, depth - 1, full);
    ExprPtr b = random_tree(rng, depth - 1, full);
    return function(rng, std::move(a), std::move(b));
  }

  const OperatorLibrary& unary() const { return unary_; }
  int variables() const { return variables_; }

 private:
  int variables_;
  OperatorLibrary unary_;
};

std::size_t count_nodes(const ExprPtr& e) { return node_count(*e); }

ExprPtr subtree_at(const ExprPtr& e, std::size_t& index) {
  if (index == 0) return e;
  --index;
  for (const auto& c : e->children) {
    if (ExprPtr found = subtree_at(c, index)) return found;
  }
  return nullptr;
}

ExprPtr replace_at(const ExprPtr& e, std::size_t& index, const ExprPtr& replacement) {
  if (index == 0) {
    index = std::numeric_limits<std::size_t>::max();
    return replacement;
  }
  --index;
  for (std::size_t k = 0; k < e->children.size(); ++k) {
    ExprPtr nc = replace_at(e->children[k], index, replacement);
    if (nc != e->children[k]) {
      auto copy = std::make_shared<Expr>(*e);
      copy->children[k] = nc;
      return copy;
    }
    if (index == std::numeric_limits<std::size_t>::max()) break;
  }
  return e;
}

ExprPtr replace_node(const ExprPtr& root, std::size_t index, const ExprPtr& replacement) {
  return replace_at(root, index, replacement);
}

void collect_constants(const ExprPtr& e, std::vector<double>& out) {
  if (e->kind == Kind::Constant) out.push_back(e->value);
  for (const auto& c : e->children) collect_constants(c, out);
}

ExprPtr with_constants(const ExprPtr& e, const std::vector<double>& values, std::size_t& k) {
  if (e->kind == Kind::Constant) return make_constant(values[k++]);
  if (e->children.empty()) return e;
  auto copy = std::make_shared<Expr>(*e);
  for (auto& c : copy->children) c = with_constants(c, values, k);
  return copy;
}

ExprPtr with_constants(const ExprPtr& e, const std::vector<double>& values) {
  std::size_t k = 0;
  return with_constants(e, values, k);
}

bool residuals(const Expr& e, const Dataset& data, std::vector<double>& r) {
  r.resize(data.rows);
  for (std::size_t i = 0; i < data.rows; ++i) {
    r[i] = evaluate(e, data.row(i)) - data.targets[i];
    if (!std::isfinite(r[i])) return false;
  }
  return true;
}

double sse(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

// Levenberg-Marquardt on the tree's constants with a forward-difference Jacobian.
ExprPtr refine_constants(const ExprPtr& tree, const Dataset& data, int iterations) {
  std::vector<double> theta;
  collect_constants(tree, theta);
  if (theta.empty() || iterations <= 0) return tree;
  ExprPtr cur = tree;
  std::vector<double> r;
  if (!residuals(*cur, data, r)) return tree;
  double cur_sse = sse(r);
  double lambda = 1e-3;
  const std::size_t n = data.rows;
  const std::size_t m = theta.size();
  std::vector<double> rp;
  for (int it = 0; it < iterations; ++it) {
    DenseMatrix jac(n, m);
    bool ok = true;
    for (std::size_t k = 0; k < m && ok; ++k) {
      auto t2 = theta;
      const double h = 1e-6 * std::max(1.0, std::abs(theta[k]));
      t2[k] += h;
      ok = residuals(*with_constants(cur, t2), data, rp);
      for (std::size_t i = 0; ok && i < n; ++i) jac(i, k) = (rp[i] - r[i]) / h;
    }
    if (!ok) break;
    bool improved = false;
    for (int attempt = 0; attempt < 6 && !improved; ++attempt) {
      DenseMatrix aug(n + m, m);
      std::vector<double> rhs(n + m, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < m; ++k) aug(i, k) = jac(i, k);
        rhs[i] = -r[i];
      }
      for (std::size_t k = 0; k < m; ++k) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) col += jac(i, k) * jac(i, k);
        aug(n + k, k) = std::sqrt(lambda * (col + 1e-12));
      }
      const auto step = solve_least_squares(aug, rhs);
      auto t2 = theta;
      for (std::size_t k = 0; k < m; ++k) t2[k] += step.coeffs[k];
      ExprPtr cand = with_constants(cur, t2);
      if (residuals(*cand, data, rp) && sse(rp) < cur_sse) {
        theta = std::move(t2);
        cur = cand;
        r = rp;
        cur_sse = sse(rp);
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return cur;
}

std::size_t tournament(const std::vector<Individual>& pop, int size, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  std::size_t best = pick(rng);
  for (int k = 1; k < size; ++k) {
    const std::size_t c = pick(rng);
    if (pop[c].fitness > pop[best].fitness) best = c;
  }
  return best;
}

ExprPtr point_mutation(const ExprPtr& root, const TreeFactory& f, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, count_nodes(root) - 1);
  const std::size_t idx = pick(rng);
  std::size_t walk = idx;
  const ExprPtr target = subtree_at(root, walk);
  ExprPtr repl;
  switch (target->kind) {
    case Kind::Constant: {
      std::normal_distribution<double> jitter(0.0, 1.0);
      repl = make_constant(target->value + jitter(rng));
      break;
    }
    case Kind::Variable:
      repl = f.terminal(rng);
      break;
    case Kind::Apply: {
      if (f.unary().empty()) return root;
      std::uniform_int_distribution<std::size_t> u(0, f.unary().size() - 1);
      repl = make_apply(*f.unary()[u(rng)], target->affine, target->children[0]);
      break;
    }
    default: {
      std::uniform_int_distribution<std::size_t> b(0, kBinary.size() - 1);
      repl = make_binary(kBinary[b(rng)], target->children[0], target->children[1]);
      break;
    }
  }
  return replace_node(root, idx, repl);
}

ExprPtr subtree_mutation(const ExprPtr& root, const TreeFactory& f, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, count_nodes(root) - 1);
  std::uniform_int_distribution<int> d(1, 3);
  return replace_node(root, pick(rng), f.random_tree(rng, d(rng), false));
}

ExprPtr crossover(const ExprPtr& a, const ExprPtr& b, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pa(0, count_nodes(a) - 1);
  std::uniform_int_distribution<std::size_t> pb(0, count_nodes(b) - 1);
  const std::size_t ia = pa(rng);
  std::size_t ib = pb(rng);
  const ExprPtr donor = subtree_at(b, ib);
  return replace_node(a, ia, donor);
}

void evaluate_population(std::vector<Individual>& pop, const Dataset& data, double weight, bool parallel) {
  const long long n = static_cast<long long>(pop.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (long long i = 0; i < n; ++i) {
      auto& ind = pop[static_cast<std::size_t>(i)];
      ind.fitness = gp_fitness(*ind.tree, data, weight);
    }
  } else {
    for (auto& ind : pop) ind.fitness = gp_fitness(*ind.tree, data, weight);
  }
}

}  // namespace

void GpConfig::validate() const {
  if (population < 2) throw ConfigError("gp: population must be >= 2");
  if (generations < 0) throw ConfigError("gp: generations must be >= 0");
  if (mutation_rate < 0.0 || mutation_rate > 1.0) throw ConfigError("gp: mutation_rate must lie in [0,1]");
  if (crossover_rate < 0.0 || crossover_rate > 1.0) throw ConfigError("gp: crossover_rate must lie in [0,1]");
  if (mutation_rate + crossover_rate > 1.0) throw ConfigError("gp: mutation_rate + crossover_rate must be <= 1");
  if (max_depth < 1 || init_max_depth < 1) throw ConfigError("gp: depths must be >= 1");
  if (tournament_size < 1) throw ConfigError("gp: tournament_size must be >= 1");
  if (simplicity_weight < 0.0) throw ConfigError("gp: simplicity_weight must be >= 0");
}

double gp_fitness(const Expr& individual, const Dataset& data, double simplicity_weight) {
  if (data.rows == 0) throw DataError("gp_fitness: empty dataset");
  double mean = 0.0;
  for (double y : data.targets) mean += y;
  mean /= static_cast<double>(data.rows);
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < data.rows; ++i) {
    const double p = evaluate(individual, data.row(i));
    if (!std::isfinite(p)) return kNegInf;
    sse += (p - data.targets[i]) * (p - data.targets[i]);
    sst += (data.targets[i] - mean) * (data.targets[i] - mean);
  }
  if (!std::isfinite(sse)) return kNegInf;
  const double accuracy = sst > 0.0 ? 1.0 - sse / sst : 1.0 / (1.0 + sse / static_cast<double>(data.rows));
  const int cx = complexity(*simplify(std::shared_ptr<const Expr>(std::shared_ptr<const Expr>{}, &individual)));
  return accuracy - simplicity_weight * cx;
}

GpResult gp_search(const Dataset& data, const GpConfig& config) {
  config.validate();
  data.validate();
  OperatorLibrary unary;
  for (const Operator* op : config.unary) {
    if (op->name != "x" && op->name != "0") unary.push_back(op);
  }
  const TreeFactory factory(static_cast<int>(data.cols), unary);
  Rng rng = derive_rng(config.seed, 0x6770ULL);

  std::vector<Individual> pop;
  pop.reserve(static_cast<std::size_t>(config.population));
  const int min_depth = std::min(2, config.init_max_depth);
  const int depth_span = config.init_max_depth - min_depth + 1;
  for (int i = 0; i < config.population; ++i) {
    const int d = min_depth + i % depth_span;
    const bool full = (i / depth_span) % 2 == 0;
    pop.push_back({factory.random_tree(rng, d, full), kNegInf});
  }
  evaluate_population(pop, data, config.simplicity_weight, config.parallel);

  GpResult res;
  Individual best{nullptr, kNegInf};
  auto track = [&](const std::vector<Individual>& p) {
    for (const auto& ind : p) {
      if (ind.fitness > best.fitness || !best.tree) best = ind;
    }
  };
  track(pop);
  res.best_fitness_trace.push_back(best.fitness);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int gen = 0; gen < config.generations; ++gen) {
    std::vector<Individual> next;
    next.reserve(pop.size());
    std::size_t elite = 0;
    for (std::size_t i = 1; i < pop.size(); ++i) {
      if (pop[i].fitness > pop[elite].fitness) elite = i;
    }
    Individual champion = pop[elite];
    ExprPtr refined = refine_constants(champion.tree, data, config.constant_refine_iterations);
    if (refined != champion.tree) {
      const double f = gp_fitness(*refined, data, config.simplicity_weight);
      if (f > champion.fitness) champion = {refined, f};
    }
    next.push_back(champion);

    while (next.size() < pop.size()) {
      const double r = u(rng);
      const Individual& p1 = pop[tournament(pop, config.tournament_size, rng)];
      ExprPtr child;
      if (r < config.crossover_rate) {
        const Individual& p2 = pop[tournament(pop, config.tournament_size, rng)];
        child = crossover(p1.tree, p2.tree, rng);
      } else if (r < config.crossover_rate + config.mutation_rate) {
        child = u(rng) < 0.5 ? point_mutation(p1.tree, factory, rng) : subtree_mutation(p1.tree, factory, rng);
      } else {
        child = p1.tree;
      }
      if (depth(*child) > config.max_depth) child = p1.tree;
      next.push_back({child, kNegInf});
    }
    // The elite keeps its already computed fitness.
    std::vector<Individual> fresh(next.begin() + 1, next.end());
    evaluate_population(fresh, data, config.simplicity_weight, config.parallel);
    std::copy(fresh.begin(), fresh.end(), next.begin() + 1);
    pop = std::move(next);
    track(pop);
    res.best_fitness_trace.push_back(best.fitness);
  }

  res.raw = best.tree;
  res.fitness = best.fitness;
  res.formula.root = simplify(best.tree);
  res.formula.variables = static_cast<int>(data.cols);
  res.complexity = res.formula.complexity();
  res.r2 = best.fitness + config.simplicity_weight * complexity(*simplify(best.tree));
  for (const auto& ind : pop) res.final_population_fitness.push_back(ind.fitness);
  return res;
}

}  // namespace kanheat
