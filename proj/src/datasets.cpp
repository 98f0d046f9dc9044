#include "kanheat/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "kanheat/csv.hpp"
#include "kanheat/errors.hpp"
#include "kanheat/format.hpp"
#include "kanheat/rng.hpp"

namespace kanheat {

// ---------------------------------------------------------------------------
// Dataset and normalization basics

double NormalizationSpec::normalize_input(std::size_t col, double raw) const {
  if (col >= input_scale.size()) return raw;
  return (raw - input_shift[col]) / input_scale[col];
}

double NormalizationSpec::denormalize_input(std::size_t col, double value) const {
  if (col >= input_scale.size()) return value;
  return value * input_scale[col] + input_shift[col];
}

void NormalizationSpec::validate(const std::vector<std::string>& names) const {
  if (input_shift.size() != input_scale.size()) throw ConfigError("normalization: shift/scale length mismatch");
  for (std::size_t i = 0; i < input_scale.size(); ++i) {
    if (!(input_scale[i] > 0.0) || !std::isfinite(input_scale[i])) {
      const std::string name = i < names.size() ? names[i] : "#" + std::to_string(i);
      throw ConfigError("normalization: feature '" + name + "' has zero spread");
    }
  }
  if (!(target_scale > 0.0) || !std::isfinite(target_scale)) throw ConfigError("normalization: target has zero spread");
}

Dataset Dataset::select(std::span<const std::size_t> index) const {
  Dataset out;
  out.cols = cols;
  out.rows = index.size();
  out.feature_names = feature_names;
  out.target_name = target_name;
  out.normalization = normalization;
  out.provenance = provenance;
  out.inputs.reserve(index.size() * cols);
  out.targets.reserve(index.size());
  for (std::size_t r : index) {
    if (r >= rows) throw ShapeError("Dataset::select: row index out of range");
    out.inputs.insert(out.inputs.end(), inputs.begin() + static_cast<std::ptrdiff_t>(r * cols),
                      inputs.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
    out.targets.push_back(targets[r]);
  }
  return out;
}

void Dataset::validate() const {
  if (rows == 0) throw DataError("dataset is empty");
  if (inputs.size() != rows * cols || targets.size() != rows) throw DataError("dataset shape mismatch");
  if (feature_names.size() != cols) throw DataError("dataset: one feature name per column required");
  for (double v : inputs) {
    if (!std::isfinite(v)) throw DataError("dataset contains non-finite inputs");
  }
  for (double v : targets) {
    if (!std::isfinite(v)) throw DataError("dataset contains non-finite targets");
  }
}

SplitIndices shuffle_split(std::size_t rows, double train_fraction, double val_fraction, std::uint64_t seed) {
  if (train_fraction < 0.0 || val_fraction < 0.0 || train_fraction + val_fraction > 1.0 + 1e-12) {
    throw ConfigError("split fractions must be non-negative and sum to at most 1");
  }
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = derive_rng(seed, 0x73706c6974ULL);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(rows) + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(rows) + 1e-9));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(std::min(rows, n_train + n_val)));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(std::min(rows, n_train + n_val)), order.end());
  return s;
}

DatasetSplits apply_split(const Dataset& ds, const SplitIndices& split) {
  return {ds.select(split.train), ds.select(split.val), ds.select(split.test)};
}

// ---------------------------------------------------------------------------
// Case studies

CaseData gen_case1(std::uint64_t seed, const Case1Config& cfg) {
  if (cfg.points < 2 || !(cfg.length > 0.0) || cfg.tl == cfg.t0) throw ConfigError("gen_case1: invalid configuration");
  CaseData c;
  Dataset& d = c.data;
  d.cols = 1;
  d.rows = static_cast<std::size_t>(cfg.points);
  d.feature_names = {"x"};
  d.target_name = "T";
  d.provenance = "case1 seed=" + std::to_string(seed);
  for (int k = 0; k < cfg.points; ++k) {
    // Evaluated in normalized coordinates (unit wall, 0 to 1) so target and
    // input agree to the bit.
    const double u = static_cast<double>(k) / (cfg.points - 1);
    d.inputs.push_back(u);
    d.targets.push_back(steady_temp(u, 0.0, 1.0, 1.0));
  }
  d.normalization.kind = NormalizationSpec::Kind::Fixed;
  d.normalization.input_shift = {0.0};
  d.normalization.input_scale = {cfg.length};
  d.normalization.target_shift = cfg.t0;
  d.normalization.target_scale = cfg.tl - cfg.t0;
  c.split = shuffle_split(d.rows, 0.70, 0.15, seed);
  return c;
}

CaseData gen_case2(std::uint64_t seed, const Case2Config& cfg) {
  if (cfg.positions < 2 || cfg.times < 1 || !(cfg.depth > 0.0) || !(cfg.duration > 0.0) || cfg.t1 == cfg.t0) {
    throw ConfigError("gen_case2: invalid configuration");
  }
  CaseData c;
  Dataset& d = c.data;
  d.cols = 2;
  d.feature_names = {"x", "tau"};
  d.target_name = "T";
  d.provenance = "case2 seed=" + std::to_string(seed);
  for (int i = 0; i < cfg.positions; ++i) {
    const double x = cfg.depth * i / (cfg.positions - 1);
    for (int j = 1; j <= cfg.times; ++j) {
      const double tau = cfg.duration * j / cfg.times;
      const double t = transient_temp(x, tau, cfg.t0, cfg.t1, cfg.alpha);
      d.inputs.push_back(x / cfg.depth);
      d.inputs.push_back(tau / cfg.duration);
      d.targets.push_back((t - cfg.t0) / (cfg.t1 - cfg.t0));
    }
  }
  d.rows = d.targets.size();
  d.normalization.kind = NormalizationSpec::Kind::Fixed;
  d.normalization.input_shift = {0.0, 0.0};
  d.normalization.input_scale = {cfg.depth, cfg.duration};
  d.normalization.target_shift = cfg.t0;
  d.normalization.target_scale = cfg.t1 - cfg.t0;
  c.split = shuffle_split(d.rows, 0.60, 0.20, seed);
  return c;
}

namespace {

// Min-max inputs, z-scored target; zero spreads fall back to unit scale.
NormalizationSpec fit_minmax_safe(const Dataset& d) {
  NormalizationSpec s;
  s.kind = NormalizationSpec::Kind::MinMax;
  for (std::size_t c = 0; c < d.cols; ++c) {
    double lo = d.at(0, c), hi = d.at(0, c);
    for (std::size_t r = 1; r < d.rows; ++r) {
      lo = std::min(lo, d.at(r, c));
      hi = std::max(hi, d.at(r, c));
    }
    s.input_shift.push_back(lo);
    s.input_scale.push_back(hi > lo ? hi - lo : 1.0);
  }
  const double mean = std::accumulate(d.targets.begin(), d.targets.end(), 0.0) / static_cast<double>(d.rows);
  double var = 0.0;
  for (double y : d.targets) var += (y - mean) * (y - mean);
  const double sd = std::sqrt(var / static_cast<double>(d.rows));
  s.target_shift = mean;
  s.target_scale = sd > 0.0 ? sd : 1.0;
  return s;
}

}  // namespace

CaseData gen_case3(std::uint64_t seed, Case3Variant variant, const Case3Config& cfg) {
  if (cfg.days < 1 || cfg.warmup_days < 0) throw ConfigError("gen_case3: days must be >= 1 and warmup_days >= 0");
  const ResponseFactorSet rf = response_factors(cfg.wall);
  const int lags = variant == Case3Variant::Star ? 25 : 24;
  const int history = std::max(rf.truncation(), 25);
  const int first = history + cfg.warmup_days * 24;
  const int total = first + cfg.days * 24;
  std::vector<double> series;
  if (!cfg.series.empty()) {
    if (static_cast<int>(cfg.series.size()) < total) {
      throw ConfigError("gen_case3: sol-air series has " + std::to_string(cfg.series.size()) + " hours, need " +
                        std::to_string(total));
    }
    series.assign(cfg.series.begin(), cfg.series.begin() + total);
  } else {
    series = cfg.sol_air.hourly(total);
  }

  Dataset raw;
  raw.cols = static_cast<std::size_t>(lags);
  for (int j = 0; j < lags; ++j) {
    const int lag = variant == Case3Variant::Star ? j : j + 1;
    raw.feature_names.push_back("t_sa_lag" + std::to_string(lag));
  }
  raw.target_name = "heat_flow";
  std::vector<double> hist(rf.y.size());
  for (int h = first; h < total; ++h) {
    for (int j = 0; j < lags; ++j) {
      const int lag = variant == Case3Variant::Star ? j : j + 1;
      raw.inputs.push_back(series[static_cast<std::size_t>(h - lag)]);
    }
    for (std::size_t j = 0; j < hist.size(); ++j) hist[j] = series[static_cast<std::size_t>(h) - j];
    raw.targets.push_back(response_factor_heat_flow(rf, hist, cfg.indoor));
  }
  raw.rows = raw.targets.size();
  CaseData c;
  c.data = normalize(raw, fit_minmax_safe(raw));
  c.data.provenance = std::string("case3") + (variant == Case3Variant::Star ? "star" : "") + " seed=" + std::to_string(seed);
  c.split = shuffle_split(c.data.rows, 0.70, 0.15, seed);
  return c;
}

// ---------------------------------------------------------------------------
// Case 4

Case4Load load_case4(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  std::vector<std::size_t> idx;
  for (const auto& f : kCase4Features) idx.push_back(t.column(f));
  const std::size_t target = t.column(kCase4Target);
  Case4Load out;
  Dataset& d = out.data;
  d.cols = kCase4Features.size();
  d.feature_names = kCase4Features;
  d.target_name = kCase4Target;
  d.provenance = "case4 " + path.filename().string();
  std::vector<double> row(d.cols);
  for (const auto& fields : t.rows) {
    bool ok = fields.size() == t.header.size();
    double y = 0.0;
    for (std::size_t c = 0; ok && c < idx.size(); ++c) ok = parse_real(fields[idx[c]], row[c]) && std::isfinite(row[c]);
    ok = ok && parse_real(fields[target], y) && std::isfinite(y);
    if (!ok) {
      ++out.dropped;
      continue;
    }
    d.inputs.insert(d.inputs.end(), row.begin(), row.end());
    d.targets.push_back(y);
  }
  d.rows = d.targets.size();
  if (d.rows == 0) throw DataError("case 4 data " + path.string() + ": no usable rows after cleaning");
  return out;
}

namespace {

// kg water per kg dry air from the dew point (deg C) and pressure (hPa).
double humidity_ratio(double dew_point, double pressure_hpa) {
  const double pv = 610.94 * std::exp(17.625 * dew_point / (243.04 + dew_point));
  return 0.622 * pv / (100.0 * pressure_hpa - pv);
}

}  // namespace

Dataset generate_case4_surrogate(std::uint64_t seed, const SurrogateConfig& cfg) {
  if (cfg.buildings < 1 || cfg.days < 1) throw ConfigError("surrogate: buildings and days must be >= 1");
  Rng rng = derive_rng(seed, 0x73757272ULL);
  Rng building_rng = derive_rng(seed, 0x6275696cULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Building {
    double area, u_value, capacity;
    ResponseFactorSet rf;
  };
  std::vector<Building> buildings;
  int warmup = 240;
  for (int b = 0; b < cfg.buildings; ++b) {
    Building bd;
    bd.area = 80.0 + 520.0 * unit(building_rng);
    bd.u_value = 0.3 + 2.2 * unit(building_rng);
    bd.capacity = 60e3 + 300e3 * unit(building_rng);
    WallSpec wall;
    wall.thickness = 0.2;
    const double r_layer = 1.0 / bd.u_value - 1.0 / wall.h_in - 1.0 / wall.h_out;
    wall.conductivity = wall.thickness / r_layer;
    wall.diffusivity = wall.conductivity / (bd.capacity / wall.thickness);
    bd.rf = response_factors(wall);
    warmup = std::max(warmup, bd.rf.truncation() + 24);
    buildings.push_back(std::move(bd));
  }

  const int hours = cfg.days * 24;
  const int total = warmup + hours;
  std::vector<double> temp(static_cast<std::size_t>(total)), dew(temp.size()), hum(temp.size()), pres(temp.size()),
      irr(temp.size());
  double synoptic = 0.0, pressure = 0.0, cloud = 1.0;
  for (int h = 0; h < total; ++h) {
    const double hod = h % 24;
    if (h % 24 == 0) cloud = 0.3 + 0.7 * unit(rng);
    synoptic = 0.97 * synoptic + 0.5 * normal(rng);
    pressure = 0.99 * pressure + 0.4 * normal(rng);
    const auto u = static_cast<std::size_t>(h);
    temp[u] = 22.0 + synoptic + 6.0 * std::sin(2.0 * std::numbers::pi * (hod - 9.0) / 24.0);
    const double depression = std::max(0.5, 5.0 + 3.0 * std::sin(2.0 * std::numbers::pi * (hod - 9.0) / 24.0) + normal(rng));
    dew[u] = temp[u] - depression;
    const auto magnus = [](double t) { return 17.625 * t / (243.04 + t); };
    hum[u] = 100.0 * std::exp(magnus(dew[u]) - magnus(temp[u]));
    pres[u] = 1013.0 + pressure;
    irr[u] = (hod > 6.0 && hod < 18.0) ? 800.0 * cloud * std::sin(std::numbers::pi * (hod - 6.0) / 12.0) : 0.0;
  }
  std::vector<WeatherRow> weather;
  for (int h = 0; h < total; ++h) {
    const auto u = static_cast<std::size_t>(h);
    weather.push_back({static_cast<double>(h), temp[u], irr[u]});
  }
  const auto sol = sol_air_profile(weather, SurfaceOrientation::Horizontal);

  Dataset d;
  d.cols = kCase4Features.size();
  d.feature_names = kCase4Features;
  d.target_name = kCase4Target;
  d.provenance = "case4 surrogate seed=" + std::to_string(seed);
  const double w_indoor = humidity_ratio(cfg.indoor - 10.0, 1013.0);  // about 50 % RH
  for (const Building& bd : buildings) {
    std::vector<double> hist(bd.rf.y.size());
    for (int h = warmup; h < total; ++h) {
      const auto u = static_cast<std::size_t>(h);
      for (std::size_t j = 0; j < hist.size(); ++j) hist[j] = sol[u - j];
      d.inputs.insert(d.inputs.end(), {temp[u], dew[u], hum[u], pres[u], bd.area, bd.u_value, bd.capacity});
      // Ventilation: one air change per hour of a 3 m storey, sensible plus
      // latent (moisture above the indoor humidity ratio).
      const double air_flow = 1.2 * bd.area * 3.0 / 3600.0;  // kg/s
      const double w_out = humidity_ratio(dew[u], pres[u]);
      const double ventilation =
          air_flow * (1005.0 * (temp[u] - cfg.indoor) + 2.45e6 * std::max(0.0, w_out - w_indoor));
      d.targets.push_back(bd.area * response_factor_heat_flow(bd.rf, hist, cfg.indoor) + ventilation);
    }
  }
  d.rows = d.targets.size();
  const double mean = std::accumulate(d.targets.begin(), d.targets.end(), 0.0) / static_cast<double>(d.rows);
  double var = 0.0;
  for (double y : d.targets) var += (y - mean) * (y - mean);
  const double sigma = cfg.noise_fraction * std::sqrt(var / static_cast<double>(d.rows - (d.rows > 1 ? 1 : 0)));
  for (double& y : d.targets) y += sigma * normal(rng);
  return d;
}

void write_case4_csv(const Dataset& ds, const std::filesystem::path& path) {
  if (ds.feature_names != kCase4Features) throw SchemaError("write_case4_csv: dataset does not carry the case 4 features");
  write_dataset_csv(ds, path);
}

// ---------------------------------------------------------------------------
// Sampling and tasks

Dataset subsample(const Dataset& ds, double rate, std::uint64_t seed) {
  if (!(rate > 0.0) || rate > 1.0) throw ConfigError("subsample: rate must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(ds.rows) - 1e-9));
  if (n == 0) throw DataError("subsample: empty result");
  std::vector<std::size_t> order(ds.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = derive_rng(seed, 0x737562ULL);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(n);
  return ds.select(order);
}

std::vector<Dataset> split_tasks(const Dataset& ds, int k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("split_tasks: k must be >= 1");
  if (ds.rows < static_cast<std::size_t>(k)) throw DataError("split_tasks: fewer rows than tasks");
  std::vector<std::size_t> order(ds.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = derive_rng(seed, 0x7461736bULL);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Dataset> out;
  const std::size_t base = ds.rows / static_cast<std::size_t>(k);
  const std::size_t extra = ds.rows % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (int t = 0; t < k; ++t) {
    const std::size_t len = base + (static_cast<std::size_t>(t) < extra ? 1 : 0);
    out.push_back(ds.select(std::span<const std::size_t>(order.data() + pos, len)));
    pos += len;
  }
  return out;
}

NormalizationSpec fit_zscore(const Dataset& ds) {
  if (ds.rows == 0) throw DataError("fit_zscore: empty dataset");
  NormalizationSpec s;
  s.kind = NormalizationSpec::Kind::ZScore;
  const double n = static_cast<double>(ds.rows);
  for (std::size_t c = 0; c < ds.cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < ds.rows; ++r) mean += ds.at(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < ds.rows; ++r) var += (ds.at(r, c) - mean) * (ds.at(r, c) - mean);
    s.input_shift.push_back(mean);
    s.input_scale.push_back(std::sqrt(var / n));
  }
  double mean = std::accumulate(ds.targets.begin(), ds.targets.end(), 0.0) / n;
  double var = 0.0;
  for (double y : ds.targets) var += (y - mean) * (y - mean);
  s.target_shift = mean;
  s.target_scale = std::sqrt(var / n);
  return s;
}

NormalizationSpec fit_minmax(const Dataset& ds) {
  if (ds.rows == 0) throw DataError("fit_minmax: empty dataset");
  NormalizationSpec s = fit_minmax_safe(ds);
  for (std::size_t c = 0; c < ds.cols; ++c) {
    double lo = ds.at(0, c), hi = ds.at(0, c);
    for (std::size_t r = 1; r < ds.rows; ++r) {
      lo = std::min(lo, ds.at(r, c));
      hi = std::max(hi, ds.at(r, c));
    }
    s.input_scale[c] = hi - lo;
  }
  s.validate(ds.feature_names);
  return s;
}

Dataset normalize(const Dataset& raw, const NormalizationSpec& spec) {
  if (spec.input_scale.size() != raw.cols) throw ShapeError("normalize: spec does not match the feature count");
  Dataset out = raw;
  for (std::size_t r = 0; r < raw.rows; ++r) {
    for (std::size_t c = 0; c < raw.cols; ++c) out.inputs[r * raw.cols + c] = spec.normalize_input(c, raw.at(r, c));
    out.targets[r] = spec.normalize_target(raw.targets[r]);
  }
  out.normalization = spec;
  return out;
}

Dataset denormalize(const Dataset& ds) {
  Dataset out = ds;
  const auto& spec = ds.normalization;
  for (std::size_t r = 0; r < ds.rows; ++r) {
    for (std::size_t c = 0; c < ds.cols; ++c) out.inputs[r * ds.cols + c] = spec.denormalize_input(c, ds.at(r, c));
    out.targets[r] = spec.denormalize_target(ds.targets[r]);
  }
  out.normalization = NormalizationSpec{};
  return out;
}

std::vector<Dataset> normalize_by_task1(const std::vector<Dataset>& tasks) {
  if (tasks.empty()) throw DataError("normalize_by_task1: no tasks");
  NormalizationSpec spec = fit_zscore(tasks.front());
  spec.validate(tasks.front().feature_names);
  std::vector<Dataset> out;
  for (const auto& t : tasks) out.push_back(normalize(t, spec));
  return out;
}

// ---------------------------------------------------------------------------
// CSV

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  for (const auto& n : ds.feature_names) os << n << ',';
  os << ds.target_name << '\n';
  for (std::size_t r = 0; r < ds.rows; ++r) {
    for (std::size_t c = 0; c < ds.cols; ++c) os << format_real(ds.at(r, c)) << ',';
    os << format_real(ds.targets[r]) << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path, const std::string& target_column) {
  const CsvTable t = read_csv(path);
  const std::size_t target = t.column(target_column);
  Dataset d;
  d.target_name = target_column;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c != target) d.feature_names.push_back(t.header[c]);
  }
  d.cols = d.feature_names.size();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    if (f.size() != t.header.size()) throw DataError(path.string() + ": row " + std::to_string(r + 2) + " has wrong field count");
    for (std::size_t c = 0; c < f.size(); ++c) {
      double v = 0.0;
      if (!parse_real(f[c], v)) throw DataError(path.string() + ": bad value '" + f[c] + "' in row " + std::to_string(r + 2));
      if (c == target) d.targets.push_back(v);
      else d.inputs.push_back(v);
    }
  }
  d.rows = d.targets.size();
  return d;
}

}  // namespace kanheat
