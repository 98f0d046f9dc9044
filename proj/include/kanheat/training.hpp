#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kanheat/dataset.hpp"
#include "kanheat/errors.hpp"
#include "kanheat/kan.hpp"
#include "kanheat/lbfgs.hpp"
#include "kanheat/mlp.hpp"

namespace kanheat {

enum class OptimizerKind { Adam, Lbfgs };

struct Schedule {
  enum class Kind { Constant, ExpDecay, Cosine };
  Kind kind = Kind::Constant;
  double rate = 0.95;     // exp_decay
  long steps = 1000;      // exp_decay
  long total_steps = 1;   // cosine

  static Schedule constant() { return {}; }
  static Schedule exp_decay(double rate, long steps);
  static Schedule cosine(long total_steps);

  // Learning rate at optimizer step `step` (0-based).
  double at(double lr0, long step) const;
  void validate() const;
};

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  Schedule schedule;
  std::size_t batch_size = 32;  // 0 means full batch
  double l2_coeff = 0.0;
  int max_epochs = 100;         // outer iterations for L-BFGS
  int early_stop_patience = 100;
  std::uint64_t seed = 0;
  // KAN only: refit edge grids to the training pre-activations every this
  // many optimizer steps (0 disables).
  long grid_refit_every = 0;
  bool parallel = true;

  void validate() const;
};

struct HistoryRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;
};

struct TrainHistory {
  std::vector<HistoryRow> rows;
  std::string stop_reason;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  int fallback_steps = 0;
  int grid_refits = 0;
};

// Non-finite loss during training. Carries the history up to the failure.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, TrainHistory history, int last_finite_epoch)
      : NumericError(what), history_(std::move(history)), last_finite_epoch_(last_finite_epoch) {}
  const TrainHistory& history() const { return history_; }
  int last_finite_epoch() const { return last_finite_epoch_; }

 private:
  TrainHistory history_;
  int last_finite_epoch_;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

/// Gradient of MSE + l2 * penalty over the batch. Throws NumericError when
/// the loss is not finite.
std::vector<double> gradients(const KanNetwork& net, const Dataset& batch, double l2 = 0.0);
std::vector<double> gradients(const MlpNetwork& net, const Dataset& batch, double l2 = 0.0);
double objective(const KanNetwork& net, const Dataset& batch, double l2 = 0.0);
double objective(const MlpNetwork& net, const Dataset& batch, double l2 = 0.0);

/// Minibatch Adam (or L-BFGS when config.optimizer says so) with early
/// stopping on validation MSE. On return `net` holds the best-validation
/// parameters.
TrainHistory train(KanNetwork& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config);
TrainHistory train(MlpNetwork& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config);
TrainHistory mlp_train(MlpNetwork& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config);

/// Full-batch L-BFGS, memory 10; max_epochs counts outer iterations and the
/// patience counts non-improving ones.
TrainHistory lbfgs_fit(KanNetwork& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config);

void write_history_csv(const TrainHistory& history, std::ostream& os);
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace kanheat
