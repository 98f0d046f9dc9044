#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kanheat/dataset.hpp"
#include "kanheat/kan.hpp"
#include "kanheat/operators.hpp"
#include "kanheat/snap.hpp"

namespace kanheat {

// Validation-guided simplification. Every accepted change must keep the
// validation MSE within baseline + tolerance * var(val targets), where the
// baseline is measured once on entry.

struct GreedyPruneOptions {
  double tolerance = 1e-3;
  int candidates = 3;  // least important nodes tried per round
  int finetune_steps = 30;
  int patience = 3;
  std::uint64_t seed = 0;
  bool parallel = true;
};

struct GreedyPruneReport {
  int nodes_removed = 0;
  int trials = 0;
  double baseline_val = 0.0;
  double final_val = 0.0;
};

/// Removes hidden nodes one at a time, least important first (product of the
/// largest incoming and outgoing edge activation spread), with a short
/// L-BFGS fine-tune after each removal.
GreedyPruneReport greedy_prune(KanNetwork& net, const Dataset& train_set, const Dataset& val_set,
                               const GreedyPruneOptions& options = {});

struct GuidedSnapOptions {
  double tolerance = 1e-3;
  int finetune_steps = 30;
  int patience = 3;
  SnapOptions snap;
  std::uint64_t seed = 0;
  bool parallel = true;
};

struct GuidedSnapReport {
  int locked = 0;
  int kept_numeric = 0;
  int trials = 0;
  double baseline_val = 0.0;
  double final_val = 0.0;
  std::vector<std::string> log;
};

/// Locks edges one by one, trying operators from simplest to most complex
/// (snap fit R^2 breaks ties). The first lock that survives a fine-tune with
/// trainable affine parameters is kept; edges with no surviving candidate
/// stay numeric.
GuidedSnapReport guided_symbolic(KanNetwork& net, const Dataset& train_set, const Dataset& val_set,
                                 const OperatorLibrary& library, const GuidedSnapOptions& options = {});

// Fold the outgoing edges of a hidden node into the next layer's biases
// (means over `data`) and remove it.
void drop_hidden_node(KanNetwork& net, int node_layer, int j, const Dataset& data);

}  // namespace kanheat
