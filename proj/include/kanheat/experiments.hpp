#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kanheat/config.hpp"
#include "kanheat/dataset.hpp"
#include "kanheat/datasets.hpp"
#include "kanheat/metrics.hpp"
#include "kanheat/symbolic.hpp"
#include "kanheat/training.hpp"

namespace kanheat {

// ---------------------------------------------------------------------------
// Formula-discovery cases

inline const std::vector<std::string> kCaseIds{"1", "2", "3", "3star"};

struct CaseSettings {
  enum class Simplify { Guided, Threshold, LockedLinear };

  std::string id;
  std::vector<int> widths;
  int grid = 5;
  int degree = 3;
  double grid_lo = -1.0;  // initial edge grid domain
  double grid_hi = 1.0;
  std::vector<std::string> library;  // empty: default library
  TrainConfig train;  // Adam stage (unused for locked-linear)
  Simplify simplify = Simplify::Threshold;
  double prune_threshold = 0.01;
  double tolerance = 1e-3;  // guided simplification budget, fraction of var(y)
  int finetune_steps = 100;
  int finetune_patience = 3;
  int seeds = 5;
};

/// Per-case defaults with RunConfig overrides applied. Unknown ids throw
/// ConfigError listing the valid ones.
CaseSettings case_settings(const std::string& id, const RunConfig& config);

struct SeedRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Metrics metrics;          // extracted formula on the test split, physical units
  double network_r2 = 0.0;  // trained network before extraction, same rows
  int complexity = 0;
  bool partial = false;
  std::string formula;      // infix, physical units
  std::string sexpr;
  std::optional<LinearForm> linear;
  std::string gp_formula;
  double gp_r2 = 0.0;
  TrainHistory history;
  TrainHistory finetune;
  std::vector<std::string> log;
  std::vector<double> truth;       // test split, physical units
  std::vector<double> prediction;  // formula on the test split
  std::vector<double> axis;        // the input, for one-input cases
  std::string axis_label;
};

struct CaseReport {
  std::string id;
  CaseSettings settings;
  std::vector<SeedRun> runs;
  int best = -1;  // index into runs; highest R^2, then lowest complexity

  const SeedRun* best_run() const { return best < 0 ? nullptr : &runs[static_cast<std::size_t>(best)]; }
};

/// Case data for one seed (case 3 reads config.weather when set).
CaseData make_case_data(const std::string& id, std::uint64_t seed, const RunConfig& config);

SeedRun run_case_seed(const CaseSettings& settings, const RunConfig& config, std::uint64_t seed);
/// Seeds config.seed, config.seed + 1, ... (settings.seeds of them).
CaseReport run_case(const std::string& id, const RunConfig& config);

// ---------------------------------------------------------------------------
// Case-4 protocols

enum class ModelKind { Kan, Mlp };
std::string model_name(ModelKind kind);

inline const std::vector<double> kSparsityRates{1.0, 0.5, 0.25, 0.1, 0.05};
inline const std::vector<double> kContinualRates{1.0, 0.5, 0.25, 0.1};
inline const std::vector<double> kExtremeThresholds{0.25, 0.10, 0.05};

struct ModelOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Metrics metrics;
  TrainHistory history;
  std::vector<double> truth;
  std::vector<double> prediction;
};

struct Aggregate {
  int n = 0;
  double mean = 0.0;
  double std = 0.0;  // sample std (n - 1); NaN when n < 2
};
Aggregate aggregate(std::span<const double> values);

struct ProtocolOptions {
  int seeds = 10;
  std::uint64_t master_seed = 0;
  bool parallel = true;
  std::vector<ModelKind> models{ModelKind::Kan, ModelKind::Mlp};
};

struct SparsityCell {
  ModelKind model = ModelKind::Kan;
  double rate = 1.0;
  bool skipped = false;
  std::vector<ModelOutcome> runs;
  Aggregate r2;
};

struct SparsityReport {
  std::vector<double> rates;
  std::vector<SparsityCell> cells;  // model-major, then rate
  std::vector<std::string> warnings;
};

SparsityReport run_sparsity(const Dataset& raw, const std::vector<double>& rates, const ProtocolOptions& options);

using TaskMatrix = std::array<std::array<double, 3>, 3>;  // [after task][evaluated task]

struct ContinualCell {
  ModelKind model = ModelKind::Kan;
  double rate = 1.0;
  std::vector<std::size_t> seeds;      // indices of the successful seeds
  std::vector<TaskMatrix> matrices;  // one per successful seed
  std::vector<std::string> failures;
  TaskMatrix mean{};
  TaskMatrix std{};
  int n = 0;
};

struct ContinualReport {
  std::vector<double> rates;
  std::vector<ContinualCell> cells;
};

ContinualReport run_continual(const Dataset& raw, const std::vector<double>& rates, const ProtocolOptions& options);

struct ExtremeRow {
  double threshold = 0.0;
  bool skipped = false;
  std::size_t count = 0;
  double r2 = 0.0;
  double mean_signed_error = 0.0;  // prediction - truth
};

// Rows whose truth exceeds the (1 - threshold) quantile (linear interpolation).
std::vector<std::size_t> extreme_subset(std::span<const double> truth, double threshold);
std::vector<ExtremeRow> extreme_analysis(std::span<const double> truth, std::span<const double> prediction,
                                         const std::vector<double>& thresholds);

struct ExtremeModel {
  ModelKind model = ModelKind::Kan;
  std::vector<ModelOutcome> runs;
  std::vector<std::vector<ExtremeRow>> rows;  // per run
};

struct ExtremeReport {
  std::vector<double> thresholds;
  std::vector<ExtremeModel> models;
};

ExtremeReport run_extreme(const Dataset& raw, const std::vector<double>& thresholds, const ProtocolOptions& options);

/// Case-4 data: config.data when set, otherwise the surrogate.
Dataset load_case4_data(const RunConfig& config, std::size_t* dropped = nullptr);

}  // namespace kanheat
