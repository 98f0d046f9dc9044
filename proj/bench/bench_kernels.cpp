// Serial reference vs OpenMP kernels on the same inputs.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "kanheat/gp.hpp"
#include "kanheat/kan.hpp"
#include "kanheat/kernels.hpp"
#include "kanheat/mlp.hpp"

using namespace kanheat;

namespace {

Dataset random_rows(std::size_t rows, std::size_t cols) {
  std::mt19937_64 g(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dataset d;
  d.rows = rows;
  d.cols = cols;
  for (std::size_t c = 0; c < cols; ++c) d.feature_names.push_back("x" + std::to_string(c + 1));
  for (std::size_t r = 0; r < rows; ++r) {
    double y = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = u(g);
      d.inputs.push_back(v);
      y += v * (c % 2 ? -1.0 : 1.0);
    }
    d.targets.push_back(y);
  }
  return d;
}

const Dataset& batch() {
  static const Dataset d = random_rows(2048, 7);
  return d;
}

const KanNetwork& kan() {
  static const KanNetwork net = [] {
    Rng rng(1);
    return KanNetwork::random({7, 10, 5, 1}, 5, 3, rng);
  }();
  return net;
}

const MlpNetwork& mlp() {
  static const MlpNetwork net = [] {
    Rng rng(2);
    return MlpNetwork::random({7, 64, 32, 1}, rng);
  }();
  return net;
}

template <class Model>
void loss_gradient(benchmark::State& state, const Model& net, bool parallel) {
  std::vector<double> grad(net.parameter_count());
  const BatchView view{&batch(), {}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_gradient(net, view, 1e-5, grad, parallel));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch().rows));
}

template <class Model>
void predict_rows(benchmark::State& state, const Model& net, bool parallel) {
  for (auto _ : state) benchmark::DoNotOptimize(predict(net, batch(), parallel));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch().rows));
}

void gp_generations(benchmark::State& state, bool parallel) {
  static const Dataset d = random_rows(200, 2);
  GpConfig cfg;
  cfg.population = 200;
  cfg.generations = 5;
  cfg.unary = make_library({"x", "sin", "exp"});
  cfg.seed = 3;
  cfg.parallel = parallel;
  for (auto _ : state) benchmark::DoNotOptimize(gp_search(d, cfg).fitness);
}

}  // namespace

BENCHMARK_CAPTURE(loss_gradient, kan_serial, kan(), false);
BENCHMARK_CAPTURE(loss_gradient, kan_parallel, kan(), true);
BENCHMARK_CAPTURE(loss_gradient, mlp_serial, mlp(), false);
BENCHMARK_CAPTURE(loss_gradient, mlp_parallel, mlp(), true);
BENCHMARK_CAPTURE(predict_rows, kan_serial, kan(), false);
BENCHMARK_CAPTURE(predict_rows, kan_parallel, kan(), true);
BENCHMARK_CAPTURE(predict_rows, mlp_serial, mlp(), false);
BENCHMARK_CAPTURE(predict_rows, mlp_parallel, mlp(), true);
BENCHMARK_CAPTURE(gp_generations, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(gp_generations, parallel, true)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
