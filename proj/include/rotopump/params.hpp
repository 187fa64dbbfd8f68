#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "rotopump/constants.hpp"

namespace rotopump {

enum class CrystalShape { sphere, cylinder, custom };

/// Bulk material plus sample geometry. Defaults are diamond.
struct CrystalSpec {
  double rho = 3515.0;          // kg/m^3
  double c_sound = 1.2e4;       // m/s
  double volume = 1e-12;        // m^3
  double moment_of_inertia = 0; // kg m^2
  double temperature = 293.0;   // K
  double eta = 1.76e23;         // NV-P1 pair density, m^-3
  double r_min = 1e-9;          // m
  double r_max = 0;             // m; 0 means derive from eta
  CrystalShape shape = CrystalShape::sphere;

  static double sphere_inertia(double rho, double volume) {
    double mass = rho * volume;
    double radius = std::cbrt(3.0 * volume / (4.0 * pi));
    return 0.4 * mass * radius * radius;
  }

  /// Solid cylinder spinning about its axis.
  static double cylinder_inertia(double rho, double radius, double thickness) {
    double mass = rho * pi * radius * radius * thickness;
    return 0.5 * mass * radius * radius;
  }

  static CrystalSpec sphere(double volume, double rho = 3515.0) {
    CrystalSpec c;
    c.rho = rho;
    c.volume = volume;
    c.moment_of_inertia = sphere_inertia(rho, volume);
    c.shape = CrystalShape::sphere;
    return c;
  }

  static CrystalSpec cylinder(double radius, double thickness, double rho = 3515.0) {
    CrystalSpec c;
    c.rho = rho;
    c.volume = pi * radius * radius * thickness;
    c.moment_of_inertia = cylinder_inertia(rho, radius, thickness);
    c.shape = CrystalShape::cylinder;
    return c;
  }

  double effective_r_max() const { return r_max > 0 ? r_max : r_max_from_density(eta); }

  void validate() const {
    if (rho <= 0 || c_sound <= 0 || volume <= 0 || temperature <= 0 || eta <= 0 ||
        r_min <= 0)
      throw invalid_parameter("CrystalSpec: all fields must be positive");
    if (r_min >= effective_r_max())
      throw invalid_parameter("CrystalSpec: r_min must be < r_max");
    if (shape == CrystalShape::sphere) {
      double expect = sphere_inertia(rho, volume);
      if (std::abs(moment_of_inertia / expect - 1.0) > 1e-9)
        throw invalid_parameter("CrystalSpec: moment_of_inertia inconsistent with sphere geometry");
    }
  }
};

/// The five phenomenological rates, all plain s^-1.
struct RateSet {
  double gamma_d = 0.5e6;
  double gamma_o = 1.0e6;
  double gamma_l = 0.0;
  double gamma_nv = 1.0e3;
  double gamma_p1 = 0.5e6;

  void validate() const {
    if (gamma_d < 0 || gamma_o < 0 || gamma_l < 0 || gamma_nv < 0 || gamma_p1 < 0)
      throw invalid_parameter("RateSet: rates must be nonnegative");
  }
};

/// Static field along the NV axis and the derived chain-B detuning.
struct FieldSpec {
  double b_field = 0;   // T
  double omega0 = 0;    // rad/s, always gamma_e * b_field
  double detuning = 0;  // rad/s, Delta - 2*omega0

  static FieldSpec from_field(const PhysicalConstants& pc, double b) {
    FieldSpec f;
    f.b_field = b;
    f.omega0 = pc.gamma_e * b;
    f.detuning = pc.Delta - 2.0 * f.omega0;
    return f;
  }

  static FieldSpec matched(const PhysicalConstants& pc) {
    return from_field(pc, pc.matching_field());
  }
};

/// Resonant phonon wavelength. The published "order 60 um" figure matches the
/// Hz reading 2*pi*c/(omega0/2pi); the rad/s reading gives ~8 um. Both are
/// exposed; the Hz reading is the default cutoff convention.
inline double lambda0_hz_convention(double c_sound, double omega0) {
  return 2.0 * pi * c_sound / (omega0 / (2.0 * pi));
}

inline double lambda0_rad_convention(double c_sound, double omega0) {
  return 2.0 * pi * c_sound / omega0;
}

/// Flat key=value parameter file. Lines starting with '#' are comments.
/// Keys carry their unit as a suffix (gamma_d_hz, volume_m3, eta_ppm, ...).
class ParamMap {
 public:
  ParamMap() = default;

  static ParamMap from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_parameter("cannot open parameter file: " + path);
    ParamMap p;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        if (line.find_first_not_of(" \t\r") != std::string::npos)
          throw invalid_parameter(path + ":" + std::to_string(lineno) + ": expected key=value");
        continue;
      }
      p.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return p;
  }

  void set(const std::string& key, const std::string& value) {
    if (key.empty()) throw invalid_parameter("empty parameter key");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_double(key, it->second);
  }

  double require(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw invalid_parameter("missing required parameter: " + key);
    return parse_double(key, it->second);
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Canonical "key=value\n" dump used for config hashing and manifests.
  std::string canonical() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << '=' << v << '\n';
    return out.str();
  }

 private:
  static std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  static double parse_double(const std::string& key, const std::string& value) {
    try {
      size_t pos = 0;
      double v = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw invalid_parameter("parameter " + key + ": cannot parse '" + value + "' as number");
    }
  }

  std::map<std::string, std::string> values_;
};

/// Pair density from a ParamMap honoring both eta_m3 and eta_ppm keys.
inline double eta_from_params(const ParamMap& p, const PhysicalConstants& pc,
                              double fallback_m3) {
  if (p.has("eta_m3")) return p.require("eta_m3");
  if (p.has("eta_ppm")) return pc.ppm_to_density(p.require("eta_ppm"));
  return fallback_m3;
}

}  // namespace rotopump
