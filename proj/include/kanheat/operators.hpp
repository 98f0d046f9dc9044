#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kanheat {

enum class OperatorDomain { All, Positive, NonNegative, NonZero };

// A named univariate function used both for symbolic edge locks and formulas.
struct Operator {
  std::string name;
  double (*eval)(double);
  double (*derivative)(double);
  OperatorDomain domain = OperatorDomain::All;
  int complexity_weight = 1;

  bool in_domain(double z) const;
  // Nearest admissible argument; identity inside the domain.
  double clamp_to_domain(double z) const;
};

using OperatorLibrary = std::vector<const Operator*>;

/// Looks up a registered operator. Throws ConfigError listing the registry on
/// an unknown name.
const Operator& find_operator(std::string_view name);
const std::vector<Operator>& operator_registry();

// {x, x^2, sin, exp, log, sqrt, 1/x, 1/sqrt(x), erf, erfc}
OperatorLibrary default_library();
OperatorLibrary make_library(const std::vector<std::string>& names);
std::string describe_library(const OperatorLibrary& lib);

}  // namespace kanheat
