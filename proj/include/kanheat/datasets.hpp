#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kanheat/dataset.hpp"
#include "kanheat/physics.hpp"

namespace kanheat {

// Dataset together with the case's declared split.
struct CaseData {
  Dataset data;
  SplitIndices split;
};

struct Case1Config {
  double length = 0.24;
  double t0 = 20.0;
  double tl = 40.0;
  int points = 100;
};

struct Case2Config {
  double depth = 1.0;         // m, spatial window
  double duration = 86400.0;  // s
  int positions = 50;
  int times = 100;
  double t0 = 20.0;
  double t1 = 40.0;
  double alpha = 2.5e-6;
};

enum class Case3Variant { Naive, Star };

struct Case3Config {
  WallSpec wall;
  SyntheticSolAir sol_air;
  // When non-empty, the hourly sol-air series is used instead of the
  // synthetic profile (it must cover warm-up, lags and the simulated days).
  std::vector<double> series;
  double indoor = 26.0;
  int warmup_days = 5;
  int days = 60;
};

/// 100 points across the wall; input x/L, target (T - T0)/(TL - T0). 70/15/15.
CaseData gen_case1(std::uint64_t seed, const Case1Config& cfg = {});
/// 50 depths x 100 times; inputs (x / depth, tau / duration), target
/// (T - T0)/(T1 - T0). 60/20/20.
CaseData gen_case2(std::uint64_t seed, const Case2Config& cfg = {});
/// Lagged hourly sol-air temperatures against the response-factor flux.
/// Naive: the 24 values before tau; star: tau and the 24 before it. 70/15/15.
/// Inputs are min-max scaled, the target z-scored.
CaseData gen_case3(std::uint64_t seed, Case3Variant variant, const Case3Config& cfg = {});

inline const std::vector<std::string> kCase4Features{"temperature", "dew_point", "humidity", "pressure",
                                                     "area",        "u_value",   "heat_capacity"};
inline constexpr const char* kCase4Target = "heat_flow";

struct Case4Load {
  Dataset data;
  std::size_t dropped = 0;  // rows with missing or non-numeric values
};

Case4Load load_case4(const std::filesystem::path& path);

struct SurrogateConfig {
  int buildings = 6;
  int days = 14;
  double noise_fraction = 0.05;  // of the clean flux standard deviation
  double indoor = 26.0;
};

/// Case-4 surrogate in physical units: synthetic weather, buildings with
/// random area / U-value / heat capacity. Heat flow is wall conduction from
/// response factors plus sensible and latent ventilation load.
Dataset generate_case4_surrogate(std::uint64_t seed, const SurrogateConfig& cfg = {});
void write_case4_csv(const Dataset& ds, const std::filesystem::path& path);

/// ceil(rate * m) rows drawn without replacement, in seeded order.
Dataset subsample(const Dataset& ds, double rate, std::uint64_t seed);
/// Seeded partition into k near-equal parts, remainder to the earliest.
std::vector<Dataset> split_tasks(const Dataset& ds, int k, std::uint64_t seed);
/// Z-scores features and target of every task with Task-1 statistics.
std::vector<Dataset> normalize_by_task1(const std::vector<Dataset>& tasks);

NormalizationSpec fit_minmax(const Dataset& ds);
NormalizationSpec fit_zscore(const Dataset& ds);
// Applies spec to raw data; the result carries the spec.
Dataset normalize(const Dataset& raw, const NormalizationSpec& spec);
// Inverse of normalize; the result carries an identity spec.
Dataset denormalize(const Dataset& ds);

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path, const std::string& target_column);

}  // namespace kanheat
