#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rotopump/params.hpp"
#include "rotopump/rates.hpp"

namespace rotopump {

struct OscillatorSpec {
  double resonance_freq = 1e3;          // Hz
  double quality_factor = 1e5;
  double osc_moment_of_inertia = 1e-13; // kg m^2
  double torque_noise_floor = 1e-18;    // N m

  void validate() const {
    if (resonance_freq <= 0 || quality_factor < 1 || osc_moment_of_inertia <= 0 ||
        torque_noise_floor <= 0)
      throw invalid_parameter("OscillatorSpec: all fields positive, Q >= 1");
  }
};

/// Matching fields for the three 14N hyperfine lines of the P1:
/// B_m = (Delta - 2 pi m A_eff) / (2 gamma_e), m in {-1, 0, +1}.
inline std::vector<double> hyperfine_matching_fields(double a_eff_hz,
                                                     const PhysicalConstants& pc = {}) {
  if (a_eff_hz < 0) throw invalid_parameter("hyperfine_matching_fields: coupling must be >= 0");
  if (a_eff_hz == 0) return {pc.matching_field()};
  std::vector<double> fields;
  for (int m : {-1, 0, 1})
    fields.push_back((pc.Delta - 2.0 * pi * double(m) * a_eff_hz) / (2.0 * pc.gamma_e));
  std::sort(fields.begin(), fields.end());
  return fields;
}

struct SweepSpectrum {
  std::vector<double> field;       // T
  std::vector<double> torque;      // N m
  std::vector<double> amplitude;   // rad
  std::vector<double> snr;
  std::vector<std::pair<double, std::string>> lines;  // (field, label)
};

/// Steady-state angular amplitude of a resonantly driven torsional oscillator.
inline double oscillator_response(double torque, const OscillatorSpec& osc) {
  osc.validate();
  double w = 2.0 * pi * osc.resonance_freq;
  return osc.quality_factor * torque / (osc.osc_moment_of_inertia * w * w);
}

/// Torque spectrum over a field sweep. Each hyperfine line carries a
/// Lorentzian lineshape in the pair detuning 2*gamma_e*(B - B_line) with
/// half-width 2 pi sqrt(gamma_d^2 + gamma_l^2); the nearest line dominates.
inline SweepSpectrum sweep_spectrum(const std::vector<double>& field_grid,
                                    const RateSet& rates, const CrystalSpec& crystal,
                                    const OscillatorSpec& osc, double a_eff_hz = 114e6,
                                    const PhysicalConstants& pc = {}) {
  if (field_grid.empty()) throw invalid_parameter("sweep_spectrum: empty field grid");
  rates.validate();
  auto lines = hyperfine_matching_fields(a_eff_hz, pc);
  if (field_grid.front() > lines.front() || field_grid.back() < lines.back())
    throw invalid_parameter("sweep_spectrum: field grid does not cover all hyperfine lines");
  TorqueReport peak = torque_on_crystal(crystal, rates, pc);
  double width = 2.0 * pi * std::hypot(rates.gamma_d, rates.gamma_l);
  SweepSpectrum sp;
  sp.field = field_grid;
  static const char* labels[] = {"mN=+1", "mN=0", "mN=-1"};
  for (size_t i = 0; i < lines.size(); ++i)
    sp.lines.emplace_back(lines[i], lines.size() == 3 ? labels[i] : "mN=0");
  for (double b : field_grid) {
    double best = 0.0;
    for (double bl : lines) {
      double det = 2.0 * pc.gamma_e * (b - bl);
      double shape = width > 0 ? width * width / (det * det + width * width)
                               : (det == 0 ? 1.0 : 0.0);
      best = std::max(best, shape);
    }
    double tq = peak.torque * best;
    sp.torque.push_back(tq);
    sp.amplitude.push_back(oscillator_response(tq, osc));
    sp.snr.push_back(tq / osc.torque_noise_floor);
  }
  return sp;
}

/// Linearized laser-power estimate P = pi zeta^2 Y_sat Gamma_o / Gamma_sat.
inline double laser_power_linear(double gamma_o, double spot_radius, double y_sat,
                                 double gamma_o_sat) {
  if (gamma_o < 0 || spot_radius <= 0 || y_sat <= 0 || gamma_o_sat <= 0)
    throw invalid_parameter("laser_power_linear: invalid inputs");
  if (gamma_o > gamma_o_sat)
    throw invalid_parameter("laser_power_linear: gamma_o exceeds the saturation rate");
  return pi * spot_radius * spot_radius * y_sat * gamma_o / gamma_o_sat;
}

/// Inversion of the saturation law Gamma_o = Gamma_sat (1 - exp(-Y/Y_sat)).
inline double laser_power_exact(double gamma_o, double spot_radius, double y_sat,
                                double gamma_o_sat) {
  if (gamma_o < 0 || spot_radius <= 0 || y_sat <= 0 || gamma_o_sat <= 0)
    throw invalid_parameter("laser_power_exact: invalid inputs");
  if (gamma_o >= gamma_o_sat)
    throw invalid_parameter("laser_power_exact: no finite power reaches gamma_o >= gamma_o_sat");
  double y = -y_sat * std::log1p(-gamma_o / gamma_o_sat);
  return pi * spot_radius * spot_radius * y;
}

enum class Polarization { lcp, rcp, linear };

/// Net phonon angular momentum (hbar units) deposited per optical cycle,
/// by decay pathway and pump polarization. Pathways 'a' and 'c' are the
/// radiative cycles (balanced); 'b' and 'd' route through the singlet and
/// deposit +/-2 hbar depending on the photon helicity.
inline int optical_cycle_ledger(char pathway, Polarization pol) {
  if (pathway != 'a' && pathway != 'b' && pathway != 'c' && pathway != 'd')
    throw invalid_parameter(std::string("optical_cycle_ledger: unknown pathway '") + pathway +
                            "'");
  if (pathway == 'a' || pathway == 'c') return 0;
  switch (pol) {
    case Polarization::lcp:
      return +2;
    case Polarization::rcp:
      return -2;
    case Polarization::linear:
      return 0;
  }
  throw invalid_parameter("optical_cycle_ledger: unknown polarization");
}

}  // namespace rotopump
