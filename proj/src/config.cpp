#include "kanheat/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <sstream>

#include "kanheat/csv.hpp"
#include "kanheat/errors.hpp"
#include "kanheat/format.hpp"

namespace kanheat {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

double as_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!parse_real(trim(v), out)) throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long as_integer(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  long long out = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

bool as_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("config: '" + key + "' expects true or false, got '" + v + "'");
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(as_real("list", item));
  if (out.empty()) throw ConfigError("config: empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(as_integer("list", item)));
  if (out.empty()) throw ConfigError("config: empty list");
  return out;
}

void RunConfig::validate() const {
  if (seeds < 0) throw ConfigError("config: run.seeds must be >= 0");
  wall.validate();
  if (!kan_widths.empty()) {
    if (kan_widths.size() < 2) throw ConfigError("config: kan.widths needs at least two entries");
    for (int w : kan_widths) {
      if (w < 1) throw ConfigError("config: kan.widths entries must be positive");
    }
  }
  if (gp_population < 2 || gp_generations < 1) throw ConfigError("config: gp.population >= 2 and gp.generations >= 1");
  for (double r : rates) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("config: bench.rates entries must lie in (0, 1]");
  }
  if (surrogate.buildings < 1 || surrogate.days < 1 || surrogate.noise_fraction < 0.0) {
    throw ConfigError("config: bench.buildings, bench.days >= 1 and bench.noise_fraction >= 0");
  }
}

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  RunConfig c = std::move(base);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string name = section + "." + key;
      const std::string v = node.data();
      if (name == "run.seed") c.seed = static_cast<std::uint64_t>(as_integer(name, v));
      else if (name == "run.seeds") c.seeds = static_cast<int>(as_integer(name, v));
      else if (name == "run.out") c.out = trim(v);
      else if (name == "run.data") c.data = trim(v);
      else if (name == "run.weather") c.weather = trim(v);
      else if (name == "run.parallel") c.parallel = as_bool(name, v);
      else if (name == "wall.thickness") c.wall.thickness = as_real(name, v);
      else if (name == "wall.conductivity") c.wall.conductivity = as_real(name, v);
      else if (name == "wall.diffusivity") c.wall.diffusivity = as_real(name, v);
      else if (name == "wall.h_in") c.wall.h_in = as_real(name, v);
      else if (name == "wall.h_out") c.wall.h_out = as_real(name, v);
      else if (name == "wall.transmittance") c.wall.transmittance = as_real(name, v);
      else if (name == "kan.widths") c.kan_widths = parse_int_list(v);
      else if (name == "gp.enabled") c.gp_enabled = as_bool(name, v);
      else if (name == "gp.population") c.gp_population = static_cast<int>(as_integer(name, v));
      else if (name == "gp.generations") c.gp_generations = static_cast<int>(as_integer(name, v));
      else if (name == "bench.rates") c.rates = parse_real_list(v);
      else if (name == "bench.buildings") c.surrogate.buildings = static_cast<int>(as_integer(name, v));
      else if (name == "bench.days") c.surrogate.days = static_cast<int>(as_integer(name, v));
      else if (name == "bench.noise_fraction") c.surrogate.noise_fraction = as_real(name, v);
      else throw ConfigError("config: unknown key '" + name + "'");
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_run_config(buf.str(), std::move(base));
}

std::string describe_config_defaults() {
  const RunConfig d;
  std::ostringstream os;
  os << "[run]   seed = " << d.seed << ", seeds = 0 (5 for cases, 10 for bench), out = $KAN_HEATLAB_OUT or ./out, parallel = true\n"
     << "[wall]  thickness = " << format_real(d.wall.thickness) << ", conductivity = " << format_real(d.wall.conductivity)
     << ", diffusivity = " << format_real(d.wall.diffusivity) << ", h_in = " << format_real(d.wall.h_in)
     << ", h_out = " << format_real(d.wall.h_out) << ", transmittance = 0 (derived from the layers)\n"
     << "[kan]   widths = per case (1: 1,20,10,1  2: 2,30,20,10,1  3: 24,8,1  3star: 25,1  bench: 7,20,1)\n"
     << "[gp]    enabled = false, population = " << d.gp_population << ", generations = " << d.gp_generations << "\n"
     << "[bench] rates = protocol default, buildings = " << d.surrogate.buildings << ", days = " << d.surrogate.days
     << ", noise_fraction = " << format_real(d.surrogate.noise_fraction) << "\n";
  return os.str();
}

}  // namespace kanheat
