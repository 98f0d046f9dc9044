#include "kanheat/operators.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "kanheat/errors.hpp"
#include "kanheat/numerics.hpp"

namespace kanheat {

namespace {

constexpr double kDomainFloor = 1e-9;

double op_zero(double) { return 0.0; }
double d_zero(double) { return 0.0; }
double op_x(double z) { return z; }
double d_x(double) { return 1.0; }
double op_sq(double z) { return z * z; }
double d_sq(double z) { return 2.0 * z; }
double op_sin(double z) { return std::sin(z); }
double d_sin(double z) { return std::cos(z); }
double op_exp(double z) { return std::exp(z); }
double op_log(double z) { return std::log(z); }
double d_log(double z) { return 1.0 / z; }
double op_sqrt(double z) { return std::sqrt(z); }
double d_sqrt(double z) { return z > 0.0 ? 0.5 / std::sqrt(z) : 0.0; }
double op_inv(double z) { return 1.0 / z; }
double d_inv(double z) { return -1.0 / (z * z); }
double op_invsqrt(double z) { return 1.0 / std::sqrt(z); }
double d_invsqrt(double z) { return -0.5 / (z * std::sqrt(z)); }
double op_erf(double z) {
  return std::isfinite(z) ? kanheat::erf(z) : std::numeric_limits<double>::quiet_NaN();
}
double op_erfc(double z) {
  return std::isfinite(z) ? kanheat::erfc(z) : std::numeric_limits<double>::quiet_NaN();
}
double d_erf(double z) { return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-z * z); }
double d_erfc(double z) { return -d_erf(z); }

std::vector<Operator> build_registry() {
  return {
      {"x", op_x, d_x, OperatorDomain::All, 1},
      {"x^2", op_sq, d_sq, OperatorDomain::All, 2},
      {"sin", op_sin, d_sin, OperatorDomain::All, 2},
      {"exp", op_exp, op_exp, OperatorDomain::All, 2},
      {"log", op_log, d_log, OperatorDomain::Positive, 2},
      {"sqrt", op_sqrt, d_sqrt, OperatorDomain::NonNegative, 2},
      {"1/x", op_inv, d_inv, OperatorDomain::NonZero, 2},
      {"1/sqrt(x)", op_invsqrt, d_invsqrt, OperatorDomain::Positive, 3},
      {"erf", op_erf, d_erf, OperatorDomain::All, 3},
      {"erfc", op_erfc, d_erfc, OperatorDomain::All, 3},
      {"0", op_zero, d_zero, OperatorDomain::All, 1},
  };
}

}  // namespace

bool Operator::in_domain(double z) const {
  switch (domain) {
    case OperatorDomain::All: return std::isfinite(z);
    case OperatorDomain::Positive: return z > 0.0;
    case OperatorDomain::NonNegative: return z >= 0.0;
    case OperatorDomain::NonZero: return z != 0.0;
  }
  return false;
}

double Operator::clamp_to_domain(double z) const {
  switch (domain) {
    case OperatorDomain::All: return z;
    case OperatorDomain::Positive: return z > kDomainFloor ? z : kDomainFloor;
    case OperatorDomain::NonNegative: return z > 0.0 ? z : 0.0;
    case OperatorDomain::NonZero:
      if (std::abs(z) >= kDomainFloor) return z;
      return z < 0.0 ? -kDomainFloor : kDomainFloor;
  }
  return z;
}

const std::vector<Operator>& operator_registry() {
  static const std::vector<Operator> registry = build_registry();
  return registry;
}

std::string describe_library(const OperatorLibrary& lib) {
  std::string out;
  for (const Operator* op : lib) {
    if (!out.empty()) out += ", ";
    out += op->name;
  }
  return out;
}

const Operator& find_operator(std::string_view name) {
  for (const Operator& op : operator_registry()) {
    if (op.name == name) return op;
  }
  OperatorLibrary all;
  for (const Operator& op : operator_registry()) all.push_back(&op);
  throw ConfigError("unknown operator '" + std::string(name) + "'; available: " + describe_library(all));
}

OperatorLibrary default_library() {
  return make_library({"x", "x^2", "sin", "exp", "log", "sqrt", "1/x", "1/sqrt(x)", "erf", "erfc"});
}

OperatorLibrary make_library(const std::vector<std::string>& names) {
  OperatorLibrary lib;
  for (const auto& n : names) lib.push_back(&find_operator(n));
  return lib;
}

}  // namespace kanheat
