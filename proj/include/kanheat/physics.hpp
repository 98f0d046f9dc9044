#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

namespace kanheat {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double kDiurnalOmega = 2.0 * 3.14159265358979323846 / kSecondsPerDay;

// Homogeneous single-layer wall with surface film coefficients.
struct WallSpec {
  double thickness = 0.24;        // L, m
  double conductivity = 1.74;     // lambda, W/(m K)
  double diffusivity = 1.74 / 2.112e6;  // a, m^2/s
  double h_in = 8.7;              // W/(m^2 K)
  double h_out = 23.0;            // W/(m^2 K)
  double transmittance = 0.0;     // K, W/(m^2 K); 0 means derive from the layers

  // 1 / (1/h_out + L/lambda + 1/h_in)
  double layer_transmittance() const;
  double k() const { return transmittance > 0.0 ? transmittance : layer_transmittance(); }
  // Throws ConfigError naming the violated invariant.
  void validate() const;

  static WallSpec concrete();
};

struct HarmonicComponent {
  double amplitude = 0.0;  // A_n
  double omega = 0.0;      // rad/s
  double phase = 0.0;      // phi_n
};

// t(tau) = mean + sum A_n sin(omega_n tau + phi_n)
struct HarmonicSpec {
  double mean = 0.0;
  double indoor = 26.0;
  std::vector<HarmonicComponent> components;

  double value(double tau) const;
};

struct HarmonicResponse {
  double attenuation = 1.0;  // v_n
  double phase_delay = 0.0;  // psi_n, rad
};

struct ResponseFactorSet {
  double timestep = kSecondsPerHour;
  std::vector<double> y;  // Y(0..J)
  double transmittance = 0.0;  // analytic K of the wall

  int truncation() const { return static_cast<int>(y.size()) - 1; }
  double sum() const;
};

struct FdOptions {
  int nodes = 200;
  double dt = 60.0;
  // Start from the steady profile of the first boundary value; otherwise
  // from a uniform wall at the interior temperature.
  bool steady_start = true;
};

double steady_temp(double x, double t0, double tl, double length);
double transient_temp(double x, double tau, double t0, double t1, double alpha);

/// DFT of a uniformly sampled periodic series (step seconds per sample).
HarmonicSpec fourier_decompose(const std::vector<double>& series, int harmonics, double step = kSecondsPerHour);

// Transfer-matrix entry relating exterior air temperature to interior flux:
// q_in = T_out / B(i omega) for a fixed interior at zero.
std::complex<double> wall_transfer_b(const WallSpec& wall, double omega);
HarmonicResponse wall_harmonic_response(const WallSpec& wall, double omega);
std::vector<HarmonicResponse> wall_harmonic_response(const WallSpec& wall, const HarmonicSpec& spec);

/// HF(tau) = K (t0 - t_in) + h_in sum (A_n / v_n) sin(omega_n tau + phi_n - psi_n)
double harmonic_heat_flow(const WallSpec& wall, const HarmonicSpec& spec,
                          const std::vector<HarmonicResponse>& response, double tau);

/// Interior flux (W/m^2, positive into the room) at every sample time of the
/// exterior series; the boundary is linearly interpolated between samples.
std::vector<double> fd_reference_solve(const WallSpec& wall, const std::vector<double>& exterior, double step,
                                       double interior, const FdOptions& options = {});

// Complex amplitude of interior flux per unit exterior amplitude at omega,
// by a finite-volume frequency-domain solve.
std::complex<double> fd_frequency_response(const WallSpec& wall, double omega, int nodes = 2000);

/// Interior flux response at j * timestep to a unit triangular exterior pulse
/// of base 2 * timestep. With terms = 0 the truncation grows until
/// |Y(J)| < 1e-6 K; otherwise a too-short tail raises TruncationError.
ResponseFactorSet response_factors(const WallSpec& wall, double timestep = kSecondsPerHour, int terms = 0,
                                   const FdOptions& options = {});

/// sum_j Y(j) (t_a(tau - j) - t_in); history[0] is t_a(tau), history[j] is
/// t_a(tau - j).
double response_factor_heat_flow(const ResponseFactorSet& factors, const std::vector<double>& history,
                                 double indoor = 26.0);

// Hourly weather: dry-bulb temperature and global irradiance.
struct WeatherRow {
  double hour = 0.0;
  double t_out = 0.0;
  double irradiance = 0.0;
};

enum class SurfaceOrientation { Horizontal, Vertical };

inline constexpr double kSolarAbsorptance = 0.7;
inline constexpr double kSkyCorrectionHorizontal = 3.9;

std::vector<double> sol_air_profile(const std::vector<WeatherRow>& weather, SurfaceOrientation orientation,
                                    double h_out = 23.0);

// Two-harmonic diurnal profile 30 + 8 sin(w tau - pi/2) + 2 sin(2 w tau).
struct SyntheticSolAir {
  double mean = 30.0;
  double amplitude1 = 8.0;
  double phase1 = -1.5707963267948966;
  double amplitude2 = 2.0;
  double phase2 = 0.0;

  double at(double tau) const;
  std::vector<double> hourly(int hours, int start_hour = 0) const;
};

std::vector<WeatherRow> synthetic_weather(const SyntheticSolAir& cfg, int hours);
std::vector<WeatherRow> read_weather_csv(const std::filesystem::path& path);
void write_weather_csv(const std::vector<WeatherRow>& rows, const std::filesystem::path& path);

// Cross-validation of the oracles against each other.
struct OracleCheck {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

std::vector<OracleCheck> validate_oracles(const WallSpec& wall);

}  // namespace kanheat
