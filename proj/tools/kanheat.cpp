// kanheat: formula-discovery cases, Case-4 benchmarks and physics checks.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numeric failure,
// 4 physics validation failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kanheat/config.hpp"
#include "kanheat/datasets.hpp"
#include "kanheat/errors.hpp"
#include "kanheat/experiments.hpp"
#include "kanheat/format.hpp"
#include "kanheat/physics.hpp"
#include "kanheat/report.hpp"

namespace fs = std::filesystem;
using namespace kanheat;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitValidation = 4;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> seeds;
  bool serial = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "INI config file (see the footer for keys)");
  cmd->add_option("--out", f.out, "output directory (default: $KAN_HEATLAB_OUT or ./out)");
  cmd->add_option("--seed", f.seed, "master seed (default: 0)");
  cmd->add_option("--seeds", f.seeds, "number of seeds (default: 5 for cases, 10 for bench)")->check(CLI::PositiveNumber);
  cmd->add_flag("--serial", f.serial, "run without OpenMP threads (default: parallel)");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.seeds) c.seeds = *f.seeds;
  if (f.serial) c.parallel = false;
  if (!f.out.empty()) {
    c.out = f.out;
  } else if (c.out.empty()) {
    const char* env = std::getenv("KAN_HEATLAB_OUT");
    c.out = env && *env ? fs::path(env) : fs::path("out");
  }
  c.validate();
  return c;
}

int cmd_case(const std::string& id, const CommonFlags& flags, bool gp) {
  RunConfig cfg = resolve(flags);
  if (gp) cfg.gp_enabled = true;
  const CaseSettings settings = case_settings(id, cfg);
  std::cout << "case " << id << ": " << settings.seeds << " seeds from " << cfg.seed << "\n";
  const CaseReport rep = run_case(id, cfg);
  const fs::path dir = cfg.out / ("case" + id);
  emit_report(rep, dir);
  for (const SeedRun& r : rep.runs) {
    if (r.ok) {
      std::cout << "  seed " << r.seed << "  R2 " << format_fixed(r.metrics.r2, 6) << "  complexity " << r.complexity
                << "  " << r.formula << "\n";
    } else {
      std::cout << "  seed " << r.seed << "  failed: " << r.error << "\n";
    }
  }
  const SeedRun* best = rep.best_run();
  if (!best) {
    std::cerr << "error: every seed failed\n";
    return kExitNumeric;
  }
  std::cout << "best seed " << best->seed << ": R2 " << format_fixed(best->metrics.r2, 6) << "\n  " << best->formula
            << "\nreport written to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_bench(const std::string& protocol, const CommonFlags& flags, const std::string& data, bool surrogate,
              const std::string& rates) {
  RunConfig cfg = resolve(flags);
  if (!data.empty()) cfg.data = data;
  if (!rates.empty()) cfg.rates = parse_real_list(rates);
  cfg.validate();
  if (cfg.data.empty() && !surrogate) throw ConfigError("bench: give --data PATH or --surrogate");
  if (!cfg.data.empty() && surrogate) throw ConfigError("bench: --data and --surrogate are exclusive");

  std::size_t dropped = 0;
  const Dataset raw = load_case4_data(cfg, &dropped);
  std::cout << "bench " << protocol << ": " << raw.rows << " rows"
            << (cfg.data.empty() ? " (surrogate)" : " from " + cfg.data.string());
  if (dropped) std::cout << ", " << dropped << " incomplete rows dropped";
  std::cout << "\n";

  ProtocolOptions opt;
  opt.seeds = cfg.seeds > 0 ? cfg.seeds : 10;
  opt.master_seed = cfg.seed;
  opt.parallel = cfg.parallel;
  const fs::path dir = cfg.out / protocol;
  if (protocol == "sparsity") {
    const SparsityReport rep = run_sparsity(raw, cfg.rates.empty() ? kSparsityRates : cfg.rates, opt);
    emit_report(rep, dir);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& c : rep.cells) {
      std::cout << "  " << model_name(c.model) << " " << rate_dir(c.rate) << "  R2 " << format_fixed(c.r2.mean, 3)
                << " ± " << format_fixed(c.r2.std, 3) << " (n=" << c.r2.n << ")\n";
    }
  } else if (protocol == "continual") {
    const ContinualReport rep = run_continual(raw, cfg.rates.empty() ? kContinualRates : cfg.rates, opt);
    emit_report(rep, dir);
    std::cout << continual_table(rep);
  } else {
    const ExtremeReport rep = run_extreme(raw, kExtremeThresholds, opt);
    emit_report(rep, dir);
    std::cout << "  see " << (dir / "summary.csv").string() << "\n";
  }
  std::cout << "report written to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_oracle(const std::string& wall_config) {
  WallSpec wall;
  if (!wall_config.empty()) wall = load_run_config(wall_config).wall;
  wall.validate();
  bool ok = true;
  for (const OracleCheck& c : validate_oracles(wall)) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << format_real(c.measured) << " (threshold "
              << format_real(c.threshold) << ")\n";
    if (!c.passed) {
      std::cerr << "validation failed: " << c.name << "\n";
      ok = false;
    }
  }
  return ok ? kExitOk : kExitValidation;
}

int cmd_surrogate(const CommonFlags& flags, const std::string& path) {
  const RunConfig cfg = resolve(flags);
  const Dataset ds = generate_case4_surrogate(cfg.seed, cfg.surrogate);
  const fs::path target = path.empty() ? cfg.out / "case4_surrogate.csv" : fs::path(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  write_case4_csv(ds, target);
  std::cout << ds.rows << " rows written to " << target.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KAN heat-transfer lab: formula discovery, Case-4 benchmarks, wall physics checks"};
  app.require_subcommand(1);
  app.footer("Config file keys and defaults:\n" + describe_config_defaults() +
             "\nExit codes: 0 ok, 2 config/input error, 3 numeric failure, 4 validation failure.");

  CommonFlags case_flags, bench_flags, data_flags;

  auto* case_cmd = app.add_subcommand("case", "formula-discovery case studies");
  case_cmd->require_subcommand(1);
  auto* case_run = case_cmd->add_subcommand("run", "train, simplify and extract a formula (best of seeds)");
  std::string case_id;
  bool gp = false;
  case_run->add_option("id", case_id, "case id: 1, 2, 3 or 3star")->required();
  case_run->add_flag("--gp", gp, "also run the genetic-programming search (default: off)");
  add_common(case_run, case_flags);

  auto* bench_cmd = app.add_subcommand("bench", "Case-4 protocols comparing KAN and MLP");
  std::string protocol, data, rates;
  bool surrogate = false;
  bench_cmd->add_option("protocol", protocol, "sparsity, continual or extreme")
      ->required()
      ->check(CLI::IsMember({"sparsity", "continual", "extreme"}));
  bench_cmd->add_option("--data", data, "Case-4 CSV (default: none)");
  bench_cmd->add_flag("--surrogate", surrogate, "use the built-in surrogate dataset (default: off)");
  bench_cmd->add_option("--rates", rates,
                        "comma-separated rates (default: 1,0.5,0.25,0.1,0.05 sparsity; 1,0.5,0.25,0.1 continual)");
  add_common(bench_cmd, bench_flags);

  auto* oracle_cmd = app.add_subcommand("oracle", "physics cross-validation");
  oracle_cmd->require_subcommand(1);
  auto* oracle_validate = oracle_cmd->add_subcommand("validate", "response factors vs harmonic vs finite differences");
  std::string wall_config;
  oracle_validate->add_option("--wall-config", wall_config, "INI file with a [wall] section (default: concrete wall)");

  auto* data_cmd = app.add_subcommand("data", "dataset utilities");
  data_cmd->require_subcommand(1);
  auto* data_surrogate = data_cmd->add_subcommand("surrogate", "write the Case-4 surrogate as CSV");
  std::string surrogate_path;
  data_surrogate->add_option("--path", surrogate_path, "output CSV (default: <out>/case4_surrogate.csv)");
  add_common(data_surrogate, data_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*case_run) return cmd_case(case_id, case_flags, gp);
    if (*bench_cmd) return cmd_bench(protocol, bench_flags, data, surrogate, rates);
    if (*oracle_validate) return cmd_oracle(wall_config);
    if (*data_surrogate) return cmd_surrogate(data_flags, surrogate_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DomainError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
