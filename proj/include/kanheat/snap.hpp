#pragma once

#include <span>
#include <string>
#include <vector>

#include "kanheat/kan.hpp"
#include "kanheat/operators.hpp"

namespace kanheat {

struct SnapOptions {
  double r2_floor = 0.5;
  // Pick the lowest-complexity operator whose R^2 is within this distance of
  // the best one. Zero means plain best R^2.
  double simplicity_tolerance = 0.0;
  int refine_iterations = 20;
  // Samples used for the search; larger inputs are thinned evenly by x.
  std::size_t max_samples = 64;
};

struct SnapCandidate {
  const Operator* op = nullptr;
  AffineParams affine;
  double r2 = -1.0;
};

struct SnapResult {
  bool snapped = false;
  const Operator* op = nullptr;
  AffineParams affine;
  double r2 = 0.0;
  std::vector<SnapCandidate> candidates;  // one per library operator, library order
};

/// Fits y ~ c f(a x + b) + d for every library operator: coarse (a, b) grid
/// with closed-form (c, d), then damped Gauss-Newton on all four.
SnapResult snap_edge(std::span<const double> xs, std::span<const double> ys, const OperatorLibrary& library,
                     const SnapOptions& options = {});

// R^2 of c f(a x + b) + d on the samples, with the operator's domain clamp.
double snap_r2(const Operator& op, const AffineParams& affine, std::span<const double> xs,
               std::span<const double> ys);

struct AutoSymbolicReport {
  int locked = 0;
  int unsnapped = 0;
  int already_locked = 0;
  std::vector<std::string> log;  // "layer i j op r2" per edge
};

/// Snaps every unlocked edge of the network using the pre-activations seen
/// on `inputs` and locks those that pass the floor.
AutoSymbolicReport auto_symbolic(KanNetwork& net, std::span<const double> inputs, std::size_t rows,
                                 const OperatorLibrary& library, const SnapOptions& options = {},
                                 bool trainable_affine = true);

}  // namespace kanheat
