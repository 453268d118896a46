#pragma once

// Physical presets, SI -> dimensionless conversion, and the flat key = value
// run configuration used by the command-line tool.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "weakmass/constants.hpp"
#include "weakmass/errors.hpp"
#include "weakmass/format.hpp"

namespace weakmass {

struct PhysicalPreset {
  std::string name;
  double mass_kg = 0.0;
  double omega_transition = 0.0;  // rad/s; the tabulated number is used as an angular frequency
  double lambda_kd_m = 0.0;       // wavelength of the scattering standing wave
  double lifetime_s = 0.0;        // excited-state lifetime, caps the coupling time
  double delta_m = 0.0;           // initial position uncertainty
  double gbar_ms2 = 0.0;
};

// Calcium clock line 1S0-3P1 for the qubit, 1S0-1P1 (~0.4 um) for scattering.
inline PhysicalPreset calcium_preset() {
  return {"calcium", 6.7e-26, 4.6e14, 0.4e-6, 0.4e-3, 1.0e-6, 9.81};
}

inline std::optional<PhysicalPreset> find_preset(std::string_view name) {
  if (name == "calcium") return calcium_preset();
  return std::nullopt;
}

// Simulation units: hbar = m = k = 1, so lengths are in 1/k, times in
// m/(hbar k^2) and omega_k = 4 hbar k^2/m becomes 4.
struct DimensionlessGroups {
  double g0 = 0.0;            // hbar omega / (m c^2)
  double omega_k = 0.0;       // 4 hbar k^2 / m  [1/s]
  double g0_t = 0.0;          // [s]
  double g0_omega_k_t = 0.0;
  double omega_k_t = 0.0;
  double t_sim = 0.0;         // coupling time in m/(hbar k^2)
  double gbar_sim = 0.0;      // gbar in hbar^2 k^3 / m^2
  double delta_sim = 0.0;     // delta * k
  bool exceeds_lifetime = false;
};

inline DimensionlessGroups derive_groups(const PhysicalPreset& preset, double t_coupling) {
  const double k = 2.0 * si::pi / preset.lambda_kd_m;
  const double c2 = si::speed_of_light * si::speed_of_light;
  const double recoil_rate = si::hbar * k * k / preset.mass_kg;  // 1 / time unit
  DimensionlessGroups out;
  out.g0 = si::hbar * preset.omega_transition / (preset.mass_kg * c2);
  out.omega_k = 4.0 * recoil_rate;
  out.g0_t = out.g0 * t_coupling;
  out.omega_k_t = out.omega_k * t_coupling;
  out.g0_omega_k_t = out.g0 * out.omega_k_t;
  out.t_sim = recoil_rate * t_coupling;
  out.gbar_sim = preset.gbar_ms2 * k / (recoil_rate * recoil_rate);
  out.delta_sim = preset.delta_m * k;
  out.exceeds_lifetime = t_coupling > preset.lifetime_s;
  return out;
}

inline constexpr double kSimOmegaK = 4.0;

struct RunConfig {
  // Exactly one of: a named preset, or explicit g0 + omega_k_t.
  std::optional<std::string> preset;
  std::optional<double> t_coupling;  // seconds, preset mode; defaults to the lifetime
  std::optional<double> g0;
  std::optional<double> omega_k_t;

  double eta = 10.0;
  int n_max = -1;          // -1: smallest with Bessel tail < 1e-12
  std::string selected = "g";
  double yz_term = 0.0;    // transverse contribution in units of (hbar k)^2

  // Weak value: via (alpha, beta, theta, omega_t) or directly.
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> theta;
  std::optional<double> omega_t;
  std::optional<double> aw_target;  // Im A_w to reach by tuning omega_t
  std::optional<double> aw_real;
  std::optional<double> aw_imag;

  // Detection.
  int trials = 0;  // 0 disables the counting stage
  std::int64_t n_atoms = 1000000;
  double xi_s = 0.0;
  double xi_d = 0.0;
  double dark_rate = 0.0;
  std::uint64_t seed = 1;
  bool shot_noise = false;
  std::string count_model = "exact";  // exact | first_order
  std::vector<int> classes;

  std::string out_csv;
  std::string out_json;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  bool explicit_groups() const { return g0.has_value() || omega_k_t.has_value(); }

  void validate() const {
    if (preset && explicit_groups()) throw ConfigError("give either a preset or explicit g0/omega_k_t, not both");
    if (!preset && !(g0 && omega_k_t)) throw ConfigError("explicit mode needs both g0 and omega_k_t");
    if (preset && !find_preset(*preset)) throw ConfigError("unknown preset '" + *preset + "'");
    if (t_coupling && !preset) throw ConfigError("t_coupling only applies to preset mode");
    if (g0 && *g0 < 0.0) throw ConfigError("g0 must be non-negative");
    if (eta < 0.0) throw ConfigError("eta must be non-negative");
    if (selected != "g" && selected != "e") throw ConfigError("selected must be g or e");
    if (count_model != "exact" && count_model != "first_order") {
      throw ConfigError("count_model must be exact or first_order");
    }
    if (trials < 0) throw ConfigError("trials must be non-negative");
    if (trials > 0 && classes.size() < 2) throw ConfigError("detection needs at least two classes");
    if (n_atoms < 1) throw ConfigError("n_atoms must be at least 1");
    if (xi_s < 0.0 || xi_d < 0.0 || dark_rate < 0.0) throw ConfigError("noise parameters must be non-negative");
  }
};

namespace detail {

inline std::string format_classes(const std::vector<int>& classes) {
  std::string out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(classes[i]);
  }
  return out;
}

}  // namespace detail

inline std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("bad integer list entry '" + item + "'");
    }
  }
  return out;
}

inline std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    auto v = parse_real(item);
    if (!v) throw ConfigError("bad number '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

// One "key = value" per line, fixed key order, only keys that are set.
inline void serialize(std::ostream& out, const RunConfig& c) {
  auto real = [&](const char* key, const std::optional<double>& v) {
    if (v) out << key << " = " << format_real(*v) << '\n';
  };
  if (c.preset) out << "preset = " << *c.preset << '\n';
  real("t_coupling", c.t_coupling);
  real("g0", c.g0);
  real("omega_k_t", c.omega_k_t);
  out << "eta = " << format_real(c.eta) << '\n';
  out << "n_max = " << c.n_max << '\n';
  out << "selected = " << c.selected << '\n';
  out << "yz_term = " << format_real(c.yz_term) << '\n';
  real("alpha", c.alpha);
  real("beta", c.beta);
  real("theta", c.theta);
  real("omega_t", c.omega_t);
  real("aw_target", c.aw_target);
  real("aw_real", c.aw_real);
  real("aw_imag", c.aw_imag);
  out << "trials = " << c.trials << '\n';
  out << "n_atoms = " << c.n_atoms << '\n';
  out << "xi_s = " << format_real(c.xi_s) << '\n';
  out << "xi_d = " << format_real(c.xi_d) << '\n';
  out << "dark_rate = " << format_real(c.dark_rate) << '\n';
  out << "seed = " << c.seed << '\n';
  out << "shot_noise = " << (c.shot_noise ? "true" : "false") << '\n';
  out << "count_model = " << c.count_model << '\n';
  out << "classes = " << detail::format_classes(c.classes) << '\n';
  if (!c.out_csv.empty()) out << "out_csv = " << c.out_csv << '\n';
  if (!c.out_json.empty()) out << "out_json = " << c.out_json << '\n';
}

inline std::string serialize(const RunConfig& c) {
  std::ostringstream out;
  serialize(out, c);
  return out.str();
}

// Applies a single key. Shared by the file parser and command-line overrides.
inline void set_config_key(RunConfig& c, const std::string& key, const std::string& value) {
  auto real = [&]() {
    auto v = parse_real(value);
    if (!v) throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
    return *v;
  };
  auto integer = [&]() -> long long {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
    }
  };
  if (key == "preset") c.preset = value;
  else if (key == "t_coupling") c.t_coupling = real();
  else if (key == "g0") c.g0 = real();
  else if (key == "omega_k_t") c.omega_k_t = real();
  else if (key == "eta") c.eta = real();
  else if (key == "n_max") c.n_max = static_cast<int>(integer());
  else if (key == "selected") c.selected = value;
  else if (key == "yz_term") c.yz_term = real();
  else if (key == "alpha") c.alpha = real();
  else if (key == "beta") c.beta = real();
  else if (key == "theta") c.theta = real();
  else if (key == "omega_t") c.omega_t = real();
  else if (key == "aw_target") c.aw_target = real();
  else if (key == "aw_real") c.aw_real = real();
  else if (key == "aw_imag") c.aw_imag = real();
  else if (key == "trials") c.trials = static_cast<int>(integer());
  else if (key == "n_atoms") c.n_atoms = integer();
  else if (key == "xi_s") c.xi_s = real();
  else if (key == "xi_d") c.xi_d = real();
  else if (key == "dark_rate") c.dark_rate = real();
  else if (key == "seed") {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || end != value.data() + value.size()) {
      throw ConfigError("key 'seed' expects a non-negative integer, got '" + value + "'");
    }
    c.seed = v;
  }
  else if (key == "shot_noise") {
    if (value != "true" && value != "false") throw ConfigError("shot_noise expects true or false");
    c.shot_noise = value == "true";
  } else if (key == "count_model") c.count_model = value;
  else if (key == "classes") c.classes = parse_int_list(value);
  else if (key == "out_csv") c.out_csv = value;
  else if (key == "out_json") c.out_json = value;
  else throw ConfigError("unknown key '" + key + "'");
}

inline RunConfig parse_config(std::istream& in) {
  RunConfig c;
  std::map<std::string, int> seen;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (seen[key]++) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    set_config_key(c, key, value);
  }
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace weakmass
