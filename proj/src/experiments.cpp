#include "kanheat/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "kanheat/errors.hpp"
#include "kanheat/format.hpp"
#include "kanheat/gp.hpp"
#include "kanheat/kan.hpp"
#include "kanheat/kernels.hpp"
#include "kanheat/mlp.hpp"
#include "kanheat/operators.hpp"
#include "kanheat/refine.hpp"
#include "kanheat/rng.hpp"
#include "kanheat/snap.hpp"

namespace kanheat {

namespace {

TrainConfig adam_config(double lr, Schedule schedule, std::size_t batch, double l2, int epochs) {
  TrainConfig c;
  c.optimizer = OptimizerKind::Adam;
  c.learning_rate = lr;
  c.schedule = schedule;
  c.batch_size = batch;
  c.l2_coeff = l2;
  c.max_epochs = epochs;
  c.early_stop_patience = 100;
  c.grid_refit_every = 200;
  return c;
}

TrainConfig lbfgs_config(int steps, int patience, std::uint64_t seed, bool parallel) {
  TrainConfig c;
  c.optimizer = OptimizerKind::Lbfgs;
  c.max_epochs = steps;
  c.early_stop_patience = patience;
  c.seed = seed;
  c.parallel = parallel;
  return c;
}

std::vector<double> physical_targets(const Dataset& normalized) {
  std::vector<double> out(normalized.rows);
  for (std::size_t r = 0; r < normalized.rows; ++r) {
    out[r] = normalized.normalization.denormalize_target(normalized.targets[r]);
  }
  return out;
}

std::vector<double> physical_predictions(const std::vector<double>& pred, const NormalizationSpec& spec) {
  std::vector<double> out(pred.size());
  for (std::size_t r = 0; r < pred.size(); ++r) out[r] = spec.denormalize_target(pred[r]);
  return out;
}

OperatorLibrary case_library(const CaseSettings& s) {
  return s.library.empty() ? default_library() : make_library(s.library);
}

std::string join_widths(const std::vector<int>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

void run_gp(SeedRun& run, const CaseSettings& s, const RunConfig& config, const DatasetSplits& sp) {
  GpConfig gc;
  gc.population = config.gp_population;
  gc.generations = config.gp_generations;
  gc.unary = case_library(s);
  gc.seed = derive_seed(run.seed, 0x6770);
  gc.parallel = config.parallel;
  const Dataset train_raw = denormalize(sp.train);
  const Dataset test_raw = denormalize(sp.test);
  const GpResult g = gp_search(train_raw, gc);
  run.gp_formula = g.formula.infix(sp.train.feature_names);
  run.gp_r2 = r2(test_raw.targets, g.formula.evaluate(test_raw));
}

}  // namespace

// ---------------------------------------------------------------------------
// Cases

CaseSettings case_settings(const std::string& id, const RunConfig& config) {
  CaseSettings s;
  s.id = id;
  if (id == "1") {
    s.widths = {1, 20, 10, 1};
    s.library = {"x", "sin", "exp", "log", "sqrt"};
    s.train = adam_config(1e-3, Schedule::exp_decay(0.95, 1000), 32, 1e-5, 300);
    s.simplify = CaseSettings::Simplify::Guided;
  } else if (id == "2") {
    s.widths = {2, 30, 20, 10, 1};
    s.grid_lo = 0.0;
    s.library = {"x", "sin", "exp", "log", "sqrt", "erf", "erfc"};
    // Epochs so the optimizer covers the 5000-step cosine schedule once:
    // 3000 training rows in batches of 64.
    const long batches = (3000 + 63) / 64;
    s.train = adam_config(5e-4, Schedule::cosine(5000), 64, 5e-5, static_cast<int>((5000 + batches - 1) / batches));
    s.simplify = CaseSettings::Simplify::Threshold;
  } else if (id == "3") {
    s.widths = {24, 8, 1};
    s.library = {"x", "sin", "exp"};
    s.train = adam_config(1e-3, Schedule::exp_decay(0.95, 1000), 32, 1e-5, 300);
    s.simplify = CaseSettings::Simplify::Threshold;
  } else if (id == "3star") {
    s.widths = {25, 1};
    s.library = {"x"};
    s.simplify = CaseSettings::Simplify::LockedLinear;
  } else {
    std::string valid;
    for (const auto& c : kCaseIds) valid += (valid.empty() ? "" : ", ") + c;
    throw ConfigError("unknown case '" + id + "'; valid cases: " + valid);
  }
  if (!config.kan_widths.empty()) {
    if (config.kan_widths.front() != s.widths.front() || config.kan_widths.back() != 1) {
      throw ConfigError("kan.widths for case " + id + " must start with " + std::to_string(s.widths.front()) +
                        " and end with 1");
    }
    if (s.simplify == CaseSettings::Simplify::LockedLinear && config.kan_widths.size() != 2) {
      throw ConfigError("kan.widths for case 3star must be a single layer");
    }
    s.widths = config.kan_widths;
  }
  if (config.seeds > 0) s.seeds = config.seeds;
  s.train.parallel = config.parallel;
  return s;
}

CaseData make_case_data(const std::string& id, std::uint64_t seed, const RunConfig& config) {
  if (id == "1") return gen_case1(seed);
  if (id == "2") return gen_case2(seed);
  if (id == "3" || id == "3star") {
    Case3Config c3;
    c3.wall = config.wall;
    if (!config.weather.empty()) {
      c3.series = sol_air_profile(read_weather_csv(config.weather), SurfaceOrientation::Vertical, config.wall.h_out);
    }
    return gen_case3(seed, id == "3star" ? Case3Variant::Star : Case3Variant::Naive, c3);
  }
  case_settings(id, config);  // throws with the valid list
  return {};
}

SeedRun run_case_seed(const CaseSettings& s, const RunConfig& config, std::uint64_t seed) {
  SeedRun run;
  run.seed = seed;
  const CaseData cd = make_case_data(s.id, seed, config);
  const DatasetSplits sp = apply_split(cd.data, cd.split);
  const NormalizationSpec& spec = cd.data.normalization;
  const OperatorLibrary library = case_library(s);
  run.log.push_back("widths " + join_widths(s.widths) + " grid " + std::to_string(s.grid) + " degree " +
                    std::to_string(s.degree) + " library " + describe_library(library));
  try {
    Rng rng = derive_rng(seed, 1);
    KanNetwork net = KanNetwork::random(s.widths, s.grid, s.degree, rng, s.grid_lo, s.grid_hi);
    const TrainConfig finetune = lbfgs_config(s.finetune_steps, s.finetune_patience, seed, config.parallel);

    if (s.simplify == CaseSettings::Simplify::LockedLinear) {
      for (int i = 0; i < net.layer(0).n_in; ++i) {
        for (int j = 0; j < net.layer(0).n_out; ++j) lock_edge_symbolic(net, 0, i, j, "x", {1.0, 0.0, 0.0, 0.0}, true);
      }
      run.history = train(net, sp.train, sp.val, finetune);
      run.log.push_back("all edges locked to x; lbfgs " + run.history.stop_reason);
    } else {
      TrainConfig tc = s.train;
      tc.seed = seed;
      run.history = train(net, sp.train, sp.val, tc);
      run.log.push_back("adam " + run.history.stop_reason + " best epoch " + std::to_string(run.history.best_epoch) +
                        " val " + format_real(run.history.best_val_loss));
      if (s.simplify == CaseSettings::Simplify::Guided) {
        GreedyPruneOptions po;
        po.tolerance = s.tolerance;
        po.seed = seed;
        po.parallel = config.parallel;
        const GreedyPruneReport pr = greedy_prune(net, sp.train, sp.val, po);
        run.log.push_back("greedy prune removed " + std::to_string(pr.nodes_removed) + " nodes, widths " +
                          join_widths(net.widths()));
        GuidedSnapOptions go;
        go.tolerance = s.tolerance;
        go.seed = seed;
        go.parallel = config.parallel;
        const GuidedSnapReport gr = guided_symbolic(net, sp.train, sp.val, library, go);
        run.log.insert(run.log.end(), gr.log.begin(), gr.log.end());
      } else {
        const PruneReport pr = prune(net, sp.train.inputs, sp.train.rows, s.prune_threshold);
        run.log.push_back("prune " + std::to_string(pr.edges_pruned) + " edges, " + std::to_string(pr.nodes_removed) +
                          " nodes");
        const AutoSymbolicReport ar = auto_symbolic(net, sp.train.inputs, sp.train.rows, library);
        run.log.insert(run.log.end(), ar.log.begin(), ar.log.end());
      }
      run.finetune = train(net, sp.train, sp.val, finetune);
      run.log.push_back("lbfgs " + run.finetune.stop_reason + " val " + format_real(run.finetune.best_val_loss));
    }

    run.truth = physical_targets(sp.test);
    const Dataset test_raw = denormalize(sp.test);
    if (test_raw.cols == 1) {
      run.axis.assign(test_raw.inputs.begin(), test_raw.inputs.end());
      run.axis_label = test_raw.feature_names.front();
    }
    run.network_r2 = r2(run.truth, physical_predictions(predict(net, sp.test, config.parallel), spec));
    const SymbolicFormula f = denormalize(extract_formula(net), spec);
    run.prediction = f.evaluate(test_raw);
    run.metrics = compute_metrics(run.truth, run.prediction);
    run.complexity = f.complexity();
    run.partial = f.partial;
    run.formula = f.infix(cd.data.feature_names);
    run.sexpr = f.sexpr();
    run.linear = linear_form(f.root, f.variables);
    if (config.gp_enabled) run_gp(run, s, config, sp);
    run.ok = std::isfinite(run.metrics.r2);
    if (!run.ok) run.error = "formula R2 is not finite";
  } catch (const DivergenceError& e) {
    run.error = e.what();
    run.history = e.history();
  } catch (const NumericError& e) {
    run.error = e.what();
  } catch (const DomainError& e) {
    run.error = e.what();
  }
  return run;
}

CaseReport run_case(const std::string& id, const RunConfig& config) {
  CaseReport rep;
  rep.id = id;
  rep.settings = case_settings(id, config);
  for (int k = 0; k < rep.settings.seeds; ++k) {
    rep.runs.push_back(run_case_seed(rep.settings, config, config.seed + static_cast<std::uint64_t>(k)));
  }
  for (std::size_t i = 0; i < rep.runs.size(); ++i) {
    const SeedRun& r = rep.runs[i];
    if (!r.ok) continue;
    if (rep.best < 0) {
      rep.best = static_cast<int>(i);
      continue;
    }
    const SeedRun& b = rep.runs[static_cast<std::size_t>(rep.best)];
    if (r.metrics.r2 > b.metrics.r2 + 1e-12 ||
        (std::abs(r.metrics.r2 - b.metrics.r2) <= 1e-12 && r.complexity < b.complexity)) {
      rep.best = static_cast<int>(i);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Case-4 models

std::string model_name(ModelKind kind) { return kind == ModelKind::Kan ? "kan" : "mlp"; }

Aggregate aggregate(std::span<const double> values) {
  Aggregate a;
  a.n = static_cast<int>(values.size());
  if (a.n == 0) {
    a.mean = std::numeric_limits<double>::quiet_NaN();
    a.std = a.mean;
    return a;
  }
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / a.n;
  if (a.n < 2) {
    a.std = std::numeric_limits<double>::quiet_NaN();
    return a;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(ss / (a.n - 1));
  return a;
}

namespace {

// One Case-4 model that can keep training across calls.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual TrainHistory fit(const Dataset& train_set, const Dataset& val_set) = 0;
  virtual std::vector<double> predict(const Dataset& data) const = 0;
};

class KanRegressor final : public Regressor {
 public:
  explicit KanRegressor(std::uint64_t seed) : seed_(seed) {
    Rng rng = derive_rng(seed, 1);
    net_ = KanNetwork::random({7, 20, 1}, 10, 10, rng);
  }
  TrainHistory fit(const Dataset& train_set, const Dataset& val_set) override {
    if (!fitted_) grid_refit(net_, train_set.inputs, train_set.rows);
    fitted_ = true;
    return train(net_, train_set, val_set, lbfgs_config(100, 3, seed_, false));
  }
  std::vector<double> predict(const Dataset& data) const override { return kanheat::predict(net_, data, false); }

 private:
  std::uint64_t seed_;
  KanNetwork net_;
  bool fitted_ = false;
};

class MlpRegressor final : public Regressor {
 public:
  explicit MlpRegressor(std::uint64_t seed) : seed_(seed) {
    Rng rng = derive_rng(seed, 1);
    net_ = MlpNetwork::random({7, 64, 32, 1}, rng);
  }
  TrainHistory fit(const Dataset& train_set, const Dataset& val_set) override {
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.batch_size = 32;
    c.max_epochs = 200;
    c.early_stop_patience = 10;
    c.seed = derive_seed(seed_, static_cast<std::uint64_t>(++calls_));
    c.parallel = false;
    return train(net_, train_set, val_set, c);
  }
  std::vector<double> predict(const Dataset& data) const override { return kanheat::predict(net_, data, false); }

 private:
  std::uint64_t seed_;
  MlpNetwork net_;
  int calls_ = 0;
};

std::unique_ptr<Regressor> make_regressor(ModelKind kind, std::uint64_t seed) {
  if (kind == ModelKind::Kan) return std::make_unique<KanRegressor>(seed);
  return std::make_unique<MlpRegressor>(seed);
}

struct FixedSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

FixedSplit normalized_split(const Dataset& raw, std::uint64_t master) {
  const DatasetSplits sp = apply_split(raw, shuffle_split(raw.rows, 0.70, 0.15, derive_seed(master, 0x73706c)));
  const NormalizationSpec spec = fit_zscore(sp.train);
  spec.validate(raw.feature_names);
  return {normalize(sp.train, spec), normalize(sp.val, spec), normalize(sp.test, spec)};
}

// Scores the model on the test rows in physical units.
void evaluate_into(ModelOutcome& out, Regressor& model, const Dataset& test) {
  out.truth = physical_targets(test);
  out.prediction = physical_predictions(model.predict(test), test.normalization);
  out.metrics = compute_metrics(out.truth, out.prediction);
  out.ok = std::isfinite(out.metrics.r2);
  if (!out.ok) out.error = "non-finite R2";
}

void check_raw(const Dataset& raw) {
  if (raw.cols != kCase4Features.size()) {
    throw DataError("case-4 data needs " + std::to_string(kCase4Features.size()) + " features, got " +
                    std::to_string(raw.cols));
  }
  raw.validate();
}

template <class Body>
void parallel_runs(std::size_t count, bool parallel, Body body) {
  const long long n = static_cast<long long>(count);
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long k = 0; k < n; ++k) body(static_cast<std::size_t>(k));
  } else {
    for (long long k = 0; k < n; ++k) body(static_cast<std::size_t>(k));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Sparsity

SparsityReport run_sparsity(const Dataset& raw, const std::vector<double>& rates, const ProtocolOptions& options) {
  check_raw(raw);
  if (options.seeds < 1) throw ConfigError("sparsity: seeds must be >= 1");
  for (double r : rates) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("sparsity: rates must lie in (0, 1], got " + format_real(r));
  }
  const FixedSplit fs = normalized_split(raw, options.master_seed);
  SparsityReport rep;
  rep.rates = rates;
  for (ModelKind m : options.models) {
    for (double r : rates) {
      SparsityCell cell;
      cell.model = m;
      cell.rate = r;
      const double rows = std::ceil(r * static_cast<double>(fs.train.rows) - 1e-9);
      if (rows < 10.0) {
        cell.skipped = true;
        rep.warnings.push_back("rate " + format_fixed(r, 2) + " gives " + format_real(rows) +
                               " training rows (< 10); skipped for " + model_name(m));
      } else {
        cell.runs.resize(static_cast<std::size_t>(options.seeds));
      }
      rep.cells.push_back(std::move(cell));
    }
  }

  struct Job {
    std::size_t cell;
    std::size_t rate_index;
    int seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < rep.cells.size(); ++c) {
    if (rep.cells[c].skipped) continue;
    for (int k = 0; k < options.seeds; ++k) jobs.push_back({c, c % rates.size(), k});
  }
  parallel_runs(jobs.size(), options.parallel, [&](std::size_t j) {
    const Job& job = jobs[j];
    SparsityCell& cell = rep.cells[job.cell];
    ModelOutcome& out = cell.runs[static_cast<std::size_t>(job.seed)];
    out.seed = derive_seed(options.master_seed, static_cast<std::uint64_t>(job.seed));
    try {
      const Dataset sub = subsample(fs.train, cell.rate, derive_seed(out.seed, 0x7261 + job.rate_index));
      auto model = make_regressor(cell.model, out.seed);
      out.history = model->fit(sub, fs.val);
      evaluate_into(out, *model, fs.test);
    } catch (const DivergenceError& e) {
      out.error = e.what();
      out.history = e.history();
    } catch (const NumericError& e) {
      out.error = e.what();
    } catch (const DomainError& e) {
      out.error = e.what();
    }
  });
  for (SparsityCell& cell : rep.cells) {
    std::vector<double> r2s;
    for (const auto& o : cell.runs) {
      if (o.ok) r2s.push_back(o.metrics.r2);
    }
    cell.r2 = aggregate(r2s);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Continual

ContinualReport run_continual(const Dataset& raw, const std::vector<double>& rates, const ProtocolOptions& options) {
  check_raw(raw);
  if (options.seeds < 1) throw ConfigError("continual: seeds must be >= 1");
  for (double r : rates) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("continual: rates must lie in (0, 1], got " + format_real(r));
  }
  const std::vector<Dataset> tasks = normalize_by_task1(split_tasks(raw, 3, derive_seed(options.master_seed, 0x7461)));
  tasks.front().normalization.validate(raw.feature_names);
  std::array<DatasetSplits, 3> parts;
  for (std::size_t t = 0; t < 3; ++t) {
    parts[t] = apply_split(tasks[t], shuffle_split(tasks[t].rows, 0.70, 0.15, derive_seed(options.master_seed, 100 + t)));
  }

  ContinualReport rep;
  rep.rates = rates;
  for (ModelKind m : options.models) {
    for (double r : rates) {
      ContinualCell cell;
      cell.model = m;
      cell.rate = r;
      rep.cells.push_back(std::move(cell));
    }
  }

  struct Result {
    bool ok = false;
    std::string error;
    TaskMatrix matrix{};
  };
  const std::size_t seeds = static_cast<std::size_t>(options.seeds);
  std::vector<Result> results(rep.cells.size() * seeds);
  parallel_runs(results.size(), options.parallel, [&](std::size_t j) {
    const std::size_t c = j / seeds;
    const std::size_t k = j % seeds;
    const ContinualCell& cell = rep.cells[c];
    const std::size_t rate_index = c % rates.size();
    const std::uint64_t seed = derive_seed(options.master_seed, k);
    Result& res = results[j];
    try {
      auto model = make_regressor(cell.model, seed);
      for (std::size_t t = 0; t < 3; ++t) {
        const Dataset sub = subsample(parts[t].train, cell.rate, derive_seed(seed, 0x7261 + 16 * t + rate_index));
        model->fit(sub, parts[t].val);
        for (std::size_t e = 0; e < 3; ++e) {
          const Dataset& test = parts[e].test;
          const auto truth = physical_targets(test);
          res.matrix[t][e] = r2(truth, physical_predictions(model->predict(test), test.normalization));
          if (!std::isfinite(res.matrix[t][e])) throw NumericError("non-finite R2");
        }
      }
      res.ok = true;
    } catch (const NumericError& e) {
      res.error = e.what();
    } catch (const DomainError& e) {
      res.error = e.what();
    }
  });

  for (std::size_t c = 0; c < rep.cells.size(); ++c) {
    ContinualCell& cell = rep.cells[c];
    for (std::size_t k = 0; k < seeds; ++k) {
      const Result& res = results[c * seeds + k];
      if (res.ok) {
        cell.seeds.push_back(k);
        cell.matrices.push_back(res.matrix);
      } else {
        cell.failures.push_back("seed" + std::to_string(k) + ": " + res.error);
      }
    }
    cell.n = static_cast<int>(cell.matrices.size());
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t e = 0; e < 3; ++e) {
        std::vector<double> v;
        for (const auto& m : cell.matrices) v.push_back(m[t][e]);
        const Aggregate a = aggregate(v);
        cell.mean[t][e] = a.mean;
        cell.std[t][e] = a.std;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Extreme values

std::vector<std::size_t> extreme_subset(std::span<const double> truth, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("extreme threshold must lie in (0, 1)");
  if (truth.empty()) return {};
  std::vector<double> sorted(truth.begin(), truth.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (1.0 - threshold) * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double q = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] > q) idx.push_back(i);
  }
  return idx;
}

std::vector<ExtremeRow> extreme_analysis(std::span<const double> truth, std::span<const double> prediction,
                                         const std::vector<double>& thresholds) {
  if (truth.size() != prediction.size()) throw ShapeError("extreme_analysis: truth and prediction lengths differ");
  std::vector<ExtremeRow> rows;
  for (double thr : thresholds) {
    ExtremeRow row;
    row.threshold = thr;
    const auto idx = extreme_subset(truth, thr);
    row.count = idx.size();
    if (idx.size() < 5) {
      row.skipped = true;
      row.r2 = std::numeric_limits<double>::quiet_NaN();
      row.mean_signed_error = row.r2;
      rows.push_back(row);
      continue;
    }
    std::vector<double> y, p;
    double bias = 0.0;
    for (std::size_t i : idx) {
      y.push_back(truth[i]);
      p.push_back(prediction[i]);
      bias += prediction[i] - truth[i];
    }
    row.mean_signed_error = bias / static_cast<double>(idx.size());
    try {
      row.r2 = r2(y, p);
    } catch (const DomainError&) {
      row.r2 = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

ExtremeReport run_extreme(const Dataset& raw, const std::vector<double>& thresholds, const ProtocolOptions& options) {
  check_raw(raw);
  if (options.seeds < 1) throw ConfigError("extreme: seeds must be >= 1");
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("extreme: thresholds must lie in (0, 1), got " + format_real(t));
  }
  const FixedSplit fs = normalized_split(raw, options.master_seed);
  ExtremeReport rep;
  rep.thresholds = thresholds;
  const std::size_t seeds = static_cast<std::size_t>(options.seeds);
  for (ModelKind m : options.models) {
    ExtremeModel em;
    em.model = m;
    em.runs.resize(seeds);
    em.rows.resize(seeds);
    rep.models.push_back(std::move(em));
  }
  parallel_runs(rep.models.size() * seeds, options.parallel, [&](std::size_t j) {
    ExtremeModel& em = rep.models[j / seeds];
    const std::size_t k = j % seeds;
    ModelOutcome& out = em.runs[k];
    out.seed = derive_seed(options.master_seed, k);
    try {
      auto model = make_regressor(em.model, out.seed);
      out.history = model->fit(fs.train, fs.val);
      evaluate_into(out, *model, fs.test);
      em.rows[k] = extreme_analysis(out.truth, out.prediction, thresholds);
    } catch (const DivergenceError& e) {
      out.error = e.what();
      out.history = e.history();
    } catch (const NumericError& e) {
      out.error = e.what();
    } catch (const DomainError& e) {
      out.error = e.what();
    }
  });
  return rep;
}

Dataset load_case4_data(const RunConfig& config, std::size_t* dropped) {
  if (!config.data.empty()) {
    Case4Load l = load_case4(config.data);
    if (dropped) *dropped = l.dropped;
    return std::move(l.data);
  }
  if (dropped) *dropped = 0;
  return generate_case4_surrogate(config.seed, config.surrogate);
}

}  // namespace kanheat
