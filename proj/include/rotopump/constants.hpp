#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rotopump {

struct invalid_parameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct accuracy_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct resource_limit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double pi = std::numbers::pi;

/// Fundamental constants plus the NV-specific ones shared by every module.
/// Frequencies named omega/Delta are angular (rad/s); plain rates are s^-1.
struct PhysicalConstants {
  double hbar = 1.054571817e-34;                 // J s
  double k_B = 1.380649e-23;                     // J/K
  double mu0 = 4.0e-7 * pi;                      // T m/A
  double gamma_e = 1.76085963023e11;             // rad s^-1 T^-1 (magnitude)
  double Delta = 2.0 * pi * 2.87e9;              // zero-field splitting, rad/s
  double carbon_number_density = 1.76e29;        // m^-3

  void validate() const {
    if (hbar <= 0 || k_B <= 0 || mu0 <= 0 || gamma_e <= 0 || Delta <= 0 ||
        carbon_number_density <= 0)
      throw invalid_parameter("PhysicalConstants: all fields must be positive");
    double ghz = Delta / (2.0 * pi) / 1e9;
    if (std::abs(ghz / 2.87 - 1.0) > 1e-3)
      throw invalid_parameter("PhysicalConstants: Delta/(2pi) must be 2.87 GHz within 0.1%");
  }

  /// B* where the NV |0>-|-1> splitting meets the P1 Zeeman splitting.
  double matching_field() const { return Delta / (2.0 * gamma_e); }

  /// Dipolar prefactor in energy units: alpha_E / r^3 is an energy.
  double alpha_energy() const { return (mu0 / (4.0 * pi)) * gamma_e * gamma_e * hbar * hbar; }

  /// Same prefactor with one hbar removed: alpha_omega / r^3 is rad/s.
  double alpha_omega() const { return alpha_energy() / hbar; }

  /// Dimensionless phonon variable at temperature T for angular frequency w.
  double nu_of_omega(double omega, double temperature) const {
    return hbar * omega / (k_B * temperature);
  }

  /// Dimensionless variable for a plain rate (no 2pi), matching the printed
  /// nu1 = hbar*Gamma_d/k_B T convention.
  double nu_of_rate(double rate, double temperature) const {
    return hbar * rate / (k_B * temperature);
  }

  double ppm_to_density(double ppm) const { return ppm * 1e-6 * carbon_number_density; }
  double density_to_ppm(double n) const { return n / (1e-6 * carbon_number_density); }
};

/// Wigner-Seitz radius: one defect per average volume.
inline double r_max_from_density(double eta) {
  if (eta <= 0) throw invalid_parameter("r_max_from_density: eta must be > 0");
  return std::cbrt(3.0 / (4.0 * pi * eta));
}

}  // namespace rotopump
