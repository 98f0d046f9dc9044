#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace kanheat {

// Objective value at x; writes the gradient into grad.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;
// Called after every accepted outer iteration. Returning false stops the run.
using IterationCallback = std::function<bool(int iteration, std::span<const double> x, double value)>;

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 100;
  double gradient_tolerance = 1e-10;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 25;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  // Outer iterations where the Wolfe search failed and a halving steepest
  // descent step was taken instead.
  int fallback_steps = 0;
  std::string stop_reason;
  std::vector<double> trace;  // objective after each accepted step
};

/// Limited-memory BFGS with a strong-Wolfe line search.
LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& options = {},
                           const IterationCallback& callback = {});

}  // namespace kanheat
