#pragma once

#include <cstdint>
#include <vector>

#include "kanheat/dataset.hpp"
#include "kanheat/operators.hpp"
#include "kanheat/symbolic.hpp"

namespace kanheat {

struct GpConfig {
  int population = 1000;
  int generations = 100;
  double mutation_rate = 0.1;
  double crossover_rate = 0.7;
  int max_depth = 6;
  int init_max_depth = 4;
  int tournament_size = 5;
  double simplicity_weight = 0.001;
  // Unary primitives; binary ones are always +, -, *, protected /.
  OperatorLibrary unary;
  // Levenberg-Marquardt passes over the elite's constants each generation.
  int constant_refine_iterations = 10;
  std::uint64_t seed = 0;
  bool parallel = true;

  void validate() const;
};

struct GpResult {
  SymbolicFormula formula;   // simplified best-ever individual
  ExprPtr raw;               // best-ever individual as evolved
  double fitness = 0.0;
  double r2 = 0.0;
  int complexity = 0;
  std::vector<double> best_fitness_trace;       // per generation, best-ever
  std::vector<double> final_population_fitness;
};

// R^2 - simplicity_weight * complexity; a constant target scores 1/(1+MSE)
// in place of R^2. Non-finite predictions give -infinity.
double gp_fitness(const Expr& individual, const Dataset& data, double simplicity_weight);

GpResult gp_search(const Dataset& data, const GpConfig& config);

}  // namespace kanheat
