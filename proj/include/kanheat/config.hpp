#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kanheat/datasets.hpp"
#include "kanheat/physics.hpp"

namespace kanheat {

// Settings shared by every command. Files use INI syntax:
//
//   [run]    seed, seeds, out, data, weather, parallel
//   [wall]   thickness, conductivity, diffusivity, h_in, h_out, transmittance
//   [kan]    widths (comma separated, e.g. 1,20,10,1)
//   [gp]     enabled, population, generations
//   [bench]  rates, buildings, days, noise_fraction
//
// Unknown sections or keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  int seeds = 0;  // 0: protocol default (5 for cases, 10 for bench)
  std::filesystem::path out;
  std::filesystem::path data;
  std::filesystem::path weather;
  bool parallel = true;
  WallSpec wall;
  std::vector<int> kan_widths;  // empty: per-case default
  bool gp_enabled = false;
  int gp_population = 1000;
  int gp_generations = 100;
  std::vector<double> rates;  // empty: protocol default
  SurrogateConfig surrogate;

  void validate() const;
};

RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

// Every key with its default, one per line, for --help output.
std::string describe_config_defaults();

std::vector<double> parse_real_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace kanheat
