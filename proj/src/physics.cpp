#include "kanheat/physics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "kanheat/csv.hpp"
#include "kanheat/errors.hpp"
#include "kanheat/format.hpp"
#include "kanheat/numerics.hpp"

namespace kanheat {

using cplx = std::complex<double>;

double WallSpec::layer_transmittance() const {
  return 1.0 / (1.0 / h_out + thickness / conductivity + 1.0 / h_in);
}

void WallSpec::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("wall: ") + name + " must be > 0");
  };
  positive(thickness, "thickness");
  positive(conductivity, "conductivity");
  positive(diffusivity, "diffusivity");
  positive(h_in, "h_in");
  positive(h_out, "h_out");
  if (transmittance < 0.0) throw ConfigError("wall: transmittance must be > 0");
  if (transmittance > 0.0) {
    const double k = layer_transmittance();
    if (std::abs(transmittance - k) > 1e-9 * std::max(1.0, k)) {
      throw ConfigError("wall: transmittance K inconsistent with 1/K = 1/h_out + L/lambda + 1/h_in (expected " +
                        format_real(k) + ", got " + format_real(transmittance) + ")");
    }
  }
}

WallSpec WallSpec::concrete() { return WallSpec{}; }

double HarmonicSpec::value(double tau) const {
  double t = mean;
  for (const auto& c : components) t += c.amplitude * std::sin(c.omega * tau + c.phase);
  return t;
}

double ResponseFactorSet::sum() const {
  double s = 0.0;
  for (double v : y) s += v;
  return s;
}

double steady_temp(double x, double t0, double tl, double length) {
  if (!(length > 0.0)) throw DomainError("steady_temp: length must be > 0");
  if (x < 0.0 || x > length) {
    throw DomainError("steady_temp: x = " + format_real(x) + " outside [0, " + format_real(length) + "]");
  }
  return t0 + (tl - t0) / length * x;
}

double transient_temp(double x, double tau, double t0, double t1, double alpha) {
  if (!(tau > 0.0)) throw DomainError("transient_temp: tau must be > 0");
  if (!(alpha > 0.0)) throw DomainError("transient_temp: alpha must be > 0");
  if (x < 0.0) throw DomainError("transient_temp: x must be >= 0");
  return t0 + (t1 - t0) * kanheat::erfc(x / (2.0 * std::sqrt(alpha * tau)));
}

HarmonicSpec fourier_decompose(const std::vector<double>& series, int harmonics, double step) {
  const std::size_t m = series.size();
  if (m < 2) throw ConfigError("fourier_decompose: need at least 2 samples");
  if (harmonics < 0 || static_cast<std::size_t>(harmonics) > m / 2) {
    throw ConfigError("fourier_decompose: harmonics must lie in [0, " + std::to_string(m / 2) + "]");
  }
  if (!(step > 0.0)) throw ConfigError("fourier_decompose: step must be > 0");
  HarmonicSpec spec;
  double mean = 0.0;
  for (double v : series) mean += v;
  spec.mean = mean / static_cast<double>(m);
  const double period = step * static_cast<double>(m);
  for (int n = 1; n <= harmonics; ++n) {
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double theta = 2.0 * std::numbers::pi * n * static_cast<double>(k) / static_cast<double>(m);
      a += series[k] * std::cos(theta);
      b += series[k] * std::sin(theta);
    }
    const double scale = (2 * static_cast<std::size_t>(n) == m) ? 1.0 / static_cast<double>(m) : 2.0 / static_cast<double>(m);
    a *= scale;
    b *= scale;
    HarmonicComponent c;
    c.amplitude = std::hypot(a, b);
    c.phase = c.amplitude > 0.0 ? std::atan2(a, b) : 0.0;
    c.omega = 2.0 * std::numbers::pi * n / period;
    spec.components.push_back(c);
  }
  return spec;
}

cplx wall_transfer_b(const WallSpec& wall, double omega) {
  if (omega == 0.0) return cplx(1.0 / wall.layer_transmittance(), 0.0);
  const cplx gamma = std::sqrt(cplx(0.0, omega / wall.diffusivity));
  const cplx gl = gamma * wall.thickness;
  const cplx ch = std::cosh(gl);
  const cplx sh = std::sinh(gl);
  // [T; q] exterior = F_out * S * F_in [T; q] interior, F = [[1, 1/h], [0, 1]].
  const cplx s11 = ch;
  const cplx s12 = sh / (wall.conductivity * gamma);
  const cplx s21 = wall.conductivity * gamma * sh;
  const cplx s22 = ch;
  const double ro = 1.0 / wall.h_out;
  const double ri = 1.0 / wall.h_in;
  // F_out * S
  const cplx m11 = s11 + ro * s21;
  const cplx m12 = s12 + ro * s22;
  // (F_out * S) * F_in, entry (1,2)
  return m11 * ri + m12;
}

HarmonicResponse wall_harmonic_response(const WallSpec& wall, double omega) {
  if (!(omega > 0.0)) throw DomainError("wall_harmonic_response: omega must be > 0");
  wall.validate();
  constexpr int kSteps = 256;
  double phase = 0.0;
  double prev = 0.0;
  for (int k = 1; k <= kSteps; ++k) {
    const double a = std::arg(wall_transfer_b(wall, omega * k / kSteps));
    double d = a - prev;
    while (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
    while (d < -std::numbers::pi) d += 2.0 * std::numbers::pi;
    phase += d;
    prev = a;
  }
  HarmonicResponse r;
  r.attenuation = wall.h_in * std::abs(wall_transfer_b(wall, omega));
  r.phase_delay = phase;
  return r;
}

std::vector<HarmonicResponse> wall_harmonic_response(const WallSpec& wall, const HarmonicSpec& spec) {
  std::vector<HarmonicResponse> out;
  for (const auto& c : spec.components) out.push_back(wall_harmonic_response(wall, c.omega));
  return out;
}

double harmonic_heat_flow(const WallSpec& wall, const HarmonicSpec& spec, const std::vector<HarmonicResponse>& response,
                          double tau) {
  if (response.size() != spec.components.size()) {
    throw ConfigError("harmonic_heat_flow: " + std::to_string(response.size()) + " responses for " +
                      std::to_string(spec.components.size()) + " components");
  }
  double s = 0.0;
  for (std::size_t n = 0; n < response.size(); ++n) {
    const auto& c = spec.components[n];
    s += c.amplitude / response[n].attenuation * std::sin(c.omega * tau + c.phase - response[n].phase_delay);
  }
  return wall.k() * (spec.mean - spec.indoor) + wall.h_in * s;
}

namespace {

// Finite-volume discretization: cell capacities and the conductances between
// neighbours, with half-cell film resistances at both faces.
struct FvGrid {
  int n = 0;
  double cap = 0.0;   // per cell, J/(m^2 K)
  double g = 0.0;     // between cells
  double g_out = 0.0; // exterior air to first cell
  double g_in = 0.0;  // last cell to interior air

  FvGrid(const WallSpec& w, int nodes) : n(nodes) {
    const double dx = w.thickness / nodes;
    cap = w.conductivity / w.diffusivity * dx;
    g = w.conductivity / dx;
    g_out = 1.0 / (1.0 / w.h_out + 0.5 * dx / w.conductivity);
    g_in = 1.0 / (1.0 / w.h_in + 0.5 * dx / w.conductivity);
  }
  double diag(int i) const {
    double d = 0.0;
    d += i == 0 ? g_out : g;
    d += i == n - 1 ? g_in : g;
    return d;
  }
};

// Thomas algorithm; sub/super diagonals are constant -off.
template <class T>
void thomas(const std::vector<T>& diag, T off, std::vector<T>& rhs, std::vector<T>& work) {
  const std::size_t n = diag.size();
  work.resize(n);
  T denom = diag[0];
  work[0] = -off / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - (-off) * work[i - 1];
    work[i] = -off / denom;
    rhs[i] = (rhs[i] - (-off) * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= work[i] * rhs[i + 1];
}

double interpolate(const std::vector<double>& series, double step, double t) {
  const double pos = t / step;
  if (pos <= 0.0) return series.front();
  const auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= series.size()) return series.back();
  const double f = pos - static_cast<double>(k);
  return series[k] * (1.0 - f) + series[k + 1] * f;
}

}  // namespace

std::vector<double> fd_reference_solve(const WallSpec& wall, const std::vector<double>& exterior, double step,
                                       double interior, const FdOptions& options) {
  wall.validate();
  if (options.nodes < 200) throw ConfigError("fd_reference_solve: at least 200 nodes required");
  if (!(options.dt > 0.0) || options.dt > 60.0) throw ConfigError("fd_reference_solve: dt must lie in (0, 60] s");
  if (exterior.empty()) throw ConfigError("fd_reference_solve: empty boundary series");
  if (!(step > 0.0)) throw ConfigError("fd_reference_solve: step must be > 0");

  const FvGrid fv(wall, options.nodes);
  const int n = fv.n;
  const auto un = static_cast<std::size_t>(n);
  const long sub = std::max(1L, static_cast<long>(std::ceil(step / options.dt - 1e-9)));
  const double dt = step / static_cast<double>(sub);

  std::vector<double> temp(un, interior);
  std::vector<double> work;
  if (options.steady_start) {
    std::vector<double> d(un);
    for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = fv.diag(i);
    temp.assign(un, 0.0);
    temp[0] = fv.g_out * exterior.front();
    temp[un - 1] += fv.g_in * interior;
    thomas(d, fv.g, temp, work);
  }

  // (C/dt + A/2) T' = (C/dt - A/2) T + (b + b')/2
  std::vector<double> lhs(un);
  for (int i = 0; i < n; ++i) lhs[static_cast<std::size_t>(i)] = fv.cap / dt + 0.5 * fv.diag(i);
  const double off = 0.5 * fv.g;
  std::vector<double> rhs(un);

  std::vector<double> flux;
  flux.reserve(exterior.size());
  flux.push_back(fv.g_in * (temp[un - 1] - interior));
  double t = 0.0;
  double b_prev = fv.g_out * exterior.front();
  for (std::size_t k = 1; k < exterior.size(); ++k) {
    for (long s = 0; s < sub; ++s) {
      const double t_next = static_cast<double>(k - 1) * step + static_cast<double>(s + 1) * dt;
      const double b_next = fv.g_out * interpolate(exterior, step, t_next);
      for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        double v = (fv.cap / dt - 0.5 * fv.diag(i)) * temp[ui];
        if (i > 0) v += 0.5 * fv.g * temp[ui - 1];
        if (i < n - 1) v += 0.5 * fv.g * temp[ui + 1];
        rhs[ui] = v;
      }
      rhs[0] += 0.5 * (b_prev + b_next);
      rhs[un - 1] += fv.g_in * interior;
      thomas(lhs, off, rhs, work);
      temp.swap(rhs);
      b_prev = b_next;
      t = t_next;
    }
    flux.push_back(fv.g_in * (temp[un - 1] - interior));
  }
  (void)t;
  return flux;
}

cplx fd_frequency_response(const WallSpec& wall, double omega, int nodes) {
  wall.validate();
  if (nodes < 2) throw ConfigError("fd_frequency_response: need at least 2 nodes");
  const FvGrid fv(wall, nodes);
  const auto un = static_cast<std::size_t>(nodes);
  std::vector<cplx> d(un);
  for (int i = 0; i < nodes; ++i) d[static_cast<std::size_t>(i)] = cplx(fv.diag(i), omega * fv.cap);
  std::vector<cplx> rhs(un, cplx(0.0));
  rhs[0] = fv.g_out;
  std::vector<cplx> work;
  thomas(d, cplx(fv.g), rhs, work);
  return fv.g_in * rhs[un - 1];
}

namespace {

std::vector<double> pulse_response(const WallSpec& wall, double timestep, int terms, const FdOptions& options) {
  std::vector<double> ext(static_cast<std::size_t>(terms) + 2, 0.0);
  ext[1] = 1.0;
  FdOptions opt = options;
  opt.steady_start = false;
  const auto q = fd_reference_solve(wall, ext, timestep, 0.0, opt);
  return {q.begin() + 1, q.end()};
}

int suggest_terms(const std::vector<double>& y, double target) {
  const std::size_t j = y.size() - 1;
  const double last = std::abs(y[j]);
  const double prev = std::abs(y[j - 1]);
  if (prev > 0.0 && last < prev) {
    const double ratio = last / prev;
    const double extra = std::log(target / last) / std::log(ratio);
    return static_cast<int>(j) + static_cast<int>(std::ceil(extra)) + 1;
  }
  return static_cast<int>(2 * j);
}

}  // namespace

ResponseFactorSet response_factors(const WallSpec& wall, double timestep, int terms, const FdOptions& options) {
  wall.validate();
  if (!(timestep > 0.0)) throw ConfigError("response_factors: timestep must be > 0");
  const double k = wall.k();
  const double tol = 1e-6 * k;
  ResponseFactorSet set;
  set.timestep = timestep;
  set.transmittance = k;
  if (terms > 0) {
    if (terms < 2) throw ConfigError("response_factors: need at least 2 terms");
    set.y = pulse_response(wall, timestep, terms, options);
    if (std::abs(set.y.back()) >= tol) {
      const int suggested = suggest_terms(set.y, tol);
      throw TruncationError("response_factors: |Y(" + std::to_string(terms) + ")| = " + format_real(std::abs(set.y.back())) +
                                " >= 1e-6 K; try J = " + std::to_string(suggested),
                            suggested);
    }
    return set;
  }
  int j = 48;
  while (true) {
    set.y = pulse_response(wall, timestep, j, options);
    if (std::abs(set.y.back()) < tol) break;
    const int next = std::max(2 * j, suggest_terms(set.y, tol) + 8);
    if (next > 20000) {
      throw TruncationError("response_factors: tail does not decay below 1e-6 K within 20000 terms", next);
    }
    j = next;
  }
  // Trim to the first index where the tail stays below tolerance.
  std::size_t cut = set.y.size();
  while (cut > 2 && std::abs(set.y[cut - 2]) < tol) --cut;
  set.y.resize(cut);
  return set;
}

double response_factor_heat_flow(const ResponseFactorSet& factors, const std::vector<double>& history, double indoor) {
  if (history.size() < factors.y.size()) {
    throw DataError("response_factor_heat_flow: insufficient history (" + std::to_string(history.size()) + " < " +
                    std::to_string(factors.y.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < factors.y.size(); ++j) s += factors.y[j] * (history[j] - indoor);
  return s;
}

std::vector<double> sol_air_profile(const std::vector<WeatherRow>& weather, SurfaceOrientation orientation,
                                    double h_out) {
  if (!(h_out > 0.0)) throw ConfigError("sol_air_profile: h_out must be > 0");
  const double sky = orientation == SurfaceOrientation::Horizontal ? kSkyCorrectionHorizontal : 0.0;
  std::vector<double> out;
  out.reserve(weather.size());
  for (const auto& w : weather) out.push_back(w.t_out + kSolarAbsorptance * w.irradiance / h_out - sky);
  return out;
}

double SyntheticSolAir::at(double tau) const {
  return mean + amplitude1 * std::sin(kDiurnalOmega * tau + phase1) + amplitude2 * std::sin(2.0 * kDiurnalOmega * tau + phase2);
}

std::vector<double> SyntheticSolAir::hourly(int hours, int start_hour) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(0, hours)));
  for (int h = 0; h < hours; ++h) out.push_back(at(static_cast<double>(start_hour + h) * kSecondsPerHour));
  return out;
}

std::vector<WeatherRow> synthetic_weather(const SyntheticSolAir& cfg, int hours) {
  std::vector<WeatherRow> rows;
  for (int h = 0; h < hours; ++h) rows.push_back({static_cast<double>(h), cfg.at(h * kSecondsPerHour), 0.0});
  return rows;
}

std::vector<WeatherRow> read_weather_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t ch = t.column("hour");
  const std::size_t ct = t.column("t_out_C");
  const std::size_t ci = t.column("irradiance_Wm2");
  std::vector<WeatherRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    WeatherRow w;
    if (f.size() != t.header.size() || !parse_real(f[ch], w.hour) || !parse_real(f[ct], w.t_out) ||
        !parse_real(f[ci], w.irradiance)) {
      throw DataError("weather CSV " + path.string() + ": malformed row " + std::to_string(r + 2));
    }
    rows.push_back(w);
  }
  if (rows.empty()) throw DataError("weather CSV " + path.string() + ": no rows");
  return rows;
}

void write_weather_csv(const std::vector<WeatherRow>& rows, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << "hour,t_out_C,irradiance_Wm2\n";
  for (const auto& w : rows) os << format_real(w.hour) << ',' << format_real(w.t_out) << ',' << format_real(w.irradiance) << '\n';
}

namespace {

double rms_over_span(const std::vector<double>& a, const std::vector<double>& b, std::size_t from,
                     const std::vector<double>& reference) {
  double s = 0.0;
  double lo = reference[from], hi = reference[from];
  for (std::size_t i = from; i < a.size(); ++i) {
    s += (a[i] - b[i]) * (a[i] - b[i]);
    lo = std::min(lo, reference[i]);
    hi = std::max(hi, reference[i]);
  }
  const double rms = std::sqrt(s / static_cast<double>(a.size() - from));
  return rms / (hi - lo);
}

}  // namespace

std::vector<OracleCheck> validate_oracles(const WallSpec& wall) {
  wall.validate();
  std::vector<OracleCheck> checks;
  const double k = wall.k();
  auto add = [&](std::string name, double measured, double threshold) {
    checks.push_back({std::move(name), measured, threshold, measured <= threshold});
  };

  const ResponseFactorSet rf = response_factors(wall);
  add("sum_Y_equals_K (relative)", std::abs(rf.sum() - k) / k, 0.005);

  {
    const std::vector<double> ext(48, 36.0);
    const auto q = fd_reference_solve(wall, ext, kSecondsPerHour, 26.0);
    add("fd_steady_flux (relative)", std::abs(q.back() - 10.0 * k) / (10.0 * k), 0.005);
  }

  const SyntheticSolAir sol;
  constexpr int kWarmupHours = 5 * 24;
  const int total = kWarmupHours + 3 * 24;
  if (rf.truncation() >= kWarmupHours) {
    throw ValidationError("response factor truncation exceeds the warm-up window");
  }
  const auto series = sol.hourly(total);
  const auto fd = fd_reference_solve(wall, series, kSecondsPerHour, 26.0);
  const HarmonicSpec spec = [&] {
    HarmonicSpec s = fourier_decompose(std::vector<double>(series.begin(), series.begin() + 24), 12);
    s.indoor = 26.0;
    return s;
  }();
  const auto resp = wall_harmonic_response(wall, spec);
  std::vector<double> harm(series.size()), conv(series.size());
  for (int h = 0; h < total; ++h) {
    harm[static_cast<std::size_t>(h)] = harmonic_heat_flow(wall, spec, resp, h * kSecondsPerHour);
    if (h >= rf.truncation()) {
      std::vector<double> hist(rf.y.size());
      for (std::size_t j = 0; j < hist.size(); ++j) hist[j] = series[static_cast<std::size_t>(h) - j];
      conv[static_cast<std::size_t>(h)] = response_factor_heat_flow(rf, hist, 26.0);
    }
  }
  const auto from = static_cast<std::size_t>(kWarmupHours);
  add("harmonic_vs_response_factor (rms / peak-to-peak)", rms_over_span(harm, conv, from, fd), 0.02);
  add("harmonic_vs_fd (rms / peak-to-peak)", rms_over_span(harm, fd, from, fd), 0.02);
  add("response_factor_vs_fd (rms / peak-to-peak)", rms_over_span(conv, fd, from, fd), 0.02);

  const cplx exact = 1.0 / wall_transfer_b(wall, kDiurnalOmega);
  const cplx fdq = fd_frequency_response(wall, kDiurnalOmega, 2000);
  add("harmonic_magnitude_vs_complex_fd (relative)", std::abs(std::abs(exact) - std::abs(fdq)) / std::abs(fdq), 0.01);
  const HarmonicResponse r1 = wall_harmonic_response(wall, kDiurnalOmega);
  double dphi = std::remainder(r1.phase_delay + std::arg(fdq), 2.0 * std::numbers::pi);
  add("harmonic_phase_vs_complex_fd (rad)", std::abs(dphi), 0.02);

  double worst = 0.0;
  for (std::size_t n = 1; n < resp.size(); ++n) worst = std::max(worst, resp[n - 1].attenuation - resp[n].attenuation);
  add("attenuation_monotone (max decrease)", worst, 0.0);
  return checks;
}

}  // namespace kanheat
