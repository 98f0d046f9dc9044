#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kanheat {

// Per-column affine normalization: normalized = (raw - shift) / scale.
struct NormalizationSpec {
  enum class Kind { None, MinMax, ZScore, Fixed };
  Kind kind = Kind::None;
  std::vector<double> input_shift;
  std::vector<double> input_scale;
  double target_shift = 0.0;
  double target_scale = 1.0;

  bool identity() const { return kind == Kind::None; }
  double normalize_input(std::size_t col, double raw) const;
  double denormalize_input(std::size_t col, double value) const;
  double normalize_target(double raw) const { return (raw - target_shift) / target_scale; }
  double denormalize_target(double value) const { return value * target_scale + target_shift; }
  void validate(const std::vector<std::string>& names) const;
};

struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> inputs;  // row-major rows x cols
  std::vector<double> targets;
  std::vector<std::string> feature_names;
  std::string target_name = "y";
  NormalizationSpec normalization;
  std::string provenance;

  std::span<const double> row(std::size_t r) const { return {inputs.data() + r * cols, cols}; }
  double at(std::size_t r, std::size_t c) const { return inputs[r * cols + c]; }
  // Copy of the listed rows, preserving metadata.
  Dataset select(std::span<const std::size_t> index) const;
  // Throws DataError on shape or finiteness violations.
  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct DatasetSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Seeded shuffle cut into fractions (train, val, rest). Sizes are floor of
// fraction * rows, with the remainder going to test.
SplitIndices shuffle_split(std::size_t rows, double train_fraction, double val_fraction, std::uint64_t seed);
DatasetSplits apply_split(const Dataset& ds, const SplitIndices& split);

}  // namespace kanheat
