#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "rotopump/params.hpp"

namespace rotopump {

/// Ensemble average of |d2|^2 over a uniform random pair separation between
/// r_min and the density-set cutoff, rad^2/s^2.
inline double d2sq_average(double eta, double r_min, double r_max,
                           const PhysicalConstants& pc = {}) {
  if (eta <= 0 || r_min <= 0 || r_max <= r_min)
    throw invalid_parameter("d2sq_average: need eta > 0 and 0 < r_min < r_max");
  double a = pc.alpha_omega();
  double inv3 = 1.0 / (r_min * r_min * r_min) - 1.0 / (r_max * r_max * r_max);
  return (2.0 * pi / 5.0) * eta * a * a * inv3;
}

/// Effective flip-flop rate (s^-1, no 2pi) for a pair ensemble of density eta.
inline double gamma_d_from_ensemble(double eta, double r_min, double r_max,
                                    const PhysicalConstants& pc = {}) {
  return std::sqrt(d2sq_average(eta, r_min, r_max, pc)) / (2.0 * pi);
}

struct RateReport {
  double gamma_d = 0;
  double gamma_sr = 0;      // spin-to-rotation transfer rate, s^-1
  double rho_ss = 0;        // lineshape factor, s; -> 1/gamma_d at zero damping
  double saturation = 0;    // gamma_sr / gamma_d
  double d2sq_avg = 0;      // (rad/s)^2, set by the ensemble-facing overload
  bool degenerate = false;  // all rates zero
};

/// Per-pair angular-momentum transfer rate from the three competing rates.
/// Saturates at gamma_d when both gamma_o and gamma_l vanish.
inline RateReport gamma_sr(double gamma_d, double gamma_o, double gamma_l) {
  if (gamma_d < 0 || gamma_o < 0 || gamma_l < 0)
    throw invalid_parameter("gamma_sr: rates must be nonnegative");
  RateReport r;
  r.gamma_d = gamma_d;
  if (gamma_d == 0) {
    r.degenerate = true;
    return r;
  }
  double den = std::sqrt(gamma_d * gamma_d + gamma_l * gamma_l) *
               std::sqrt(gamma_d * gamma_d + gamma_o * gamma_o);
  r.gamma_sr = gamma_d * gamma_d * gamma_d / den;
  r.rho_ss = gamma_d / den;
  r.saturation = r.gamma_sr / gamma_d;
  return r;
}

/// Ensemble-facing overload: gamma_d is derived from the pair density. The
/// transfer rate is the mean-square coupling (in rate units) times the
/// lineshape factor: gamma_sr = (d2sq_avg / (2 pi)^2) * rho_ss.
inline RateReport gamma_sr_ensemble(double gamma_o, double gamma_l, double eta,
                                    double r_min, double r_max,
                                    const PhysicalConstants& pc = {}) {
  double d2sq = d2sq_average(eta, r_min, r_max, pc);
  RateReport r = gamma_sr(std::sqrt(d2sq) / (2.0 * pi), gamma_o, gamma_l);
  r.d2sq_avg = d2sq;
  return r;
}

// ---------------------------------------------------------------------------
// Six-level pair populations. Levels, in order:
//   0: |+1, +1/2>   1: |0, +1/2>   2: |-1, -1/2>
//   3: |-1, +1/2>   4: |0, -1/2>   5: |+1, -1/2>
// Optical pumping drives the NV toward mS = 0 (0->1, 3->1, 2->4, 5->4);
// the flip-flop connects 1<->2; gamma_nv and gamma_p1 are bidirectional
// single-spin flips.

struct SteadyStateReport {
  std::array<double, 6> populations{};
  double residual = 0;        // || G n || on the max-normalized generator
  double delta_n23 = 0;       // population imbalance of the flip-flop doublet
  bool converged = false;     // residual below 1e-10
  Eigen::Matrix<double, 6, 6> generator;  // raw, s^-1
};

inline Eigen::Matrix<double, 6, 6> six_level_generator(const RateSet& rs) {
  rs.validate();
  Eigen::Matrix<double, 6, 6> g = Eigen::Matrix<double, 6, 6>::Zero();
  auto add = [&g](int from, int to, double rate) {
    g(to, from) += rate;
    g(from, from) -= rate;
  };
  auto add_bi = [&](int a, int b, double rate) {
    add(a, b, rate);
    add(b, a, rate);
  };
  add(0, 1, rs.gamma_o);
  add(3, 1, rs.gamma_o);
  add(2, 4, rs.gamma_o);
  add(5, 4, rs.gamma_o);
  add_bi(1, 2, rs.gamma_d);
  add_bi(0, 1, rs.gamma_nv);
  add_bi(1, 3, rs.gamma_nv);
  add_bi(5, 4, rs.gamma_nv);
  add_bi(4, 2, rs.gamma_nv);
  add_bi(1, 4, rs.gamma_p1);
  add_bi(0, 5, rs.gamma_p1);
  add_bi(3, 2, rs.gamma_p1);
  return g;
}

/// Steady-state populations of the six-level pair model. The linear solve is
/// done on the max-normalized generator so the residual criterion is
/// scale-free; populations are invariant under uniform rate rescaling.
inline SteadyStateReport six_level_steady_state(const RateSet& rs) {
  if (rs.gamma_o <= 0 && rs.gamma_nv <= 0 && rs.gamma_p1 <= 0)
    throw invalid_parameter(
        "six_level_steady_state: need at least one of gamma_o, gamma_nv, gamma_p1 > 0");
  SteadyStateReport out;
  out.generator = six_level_generator(rs);
  double scale = out.generator.cwiseAbs().maxCoeff();
  Eigen::Matrix<double, 6, 6> gn = out.generator / scale;
  Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 6, 6>> qr(gn);
  qr.setThreshold(1e-10);
  if (qr.rank() < 5)
    throw accuracy_error("six_level_steady_state: degenerate rate network (nullity > 1)");
  // replace one balance equation with the normalization constraint
  Eigen::Matrix<double, 7, 6> a;
  a.topRows<6>() = gn;
  a.row(6).setOnes();
  Eigen::Matrix<double, 7, 1> b = Eigen::Matrix<double, 7, 1>::Zero();
  b(6) = 1.0;
  Eigen::Matrix<double, 6, 1> n = a.colPivHouseholderQr().solve(b);
  for (int i = 0; i < 6; ++i) out.populations[size_t(i)] = n(i);
  out.residual = (gn * n).norm();
  out.converged = out.residual < 1e-10;
  out.delta_n23 = n(1) - n(2);
  return out;
}

struct TorqueReport {
  double torque = 0;          // N m
  double torque_density = 0;  // N m / m^3
  double gamma_sr = 0;
  double polarization = 0;    // n1 - n2 feeding the transfer
  SteadyStateReport steady;
};

/// tau = 2 hbar eta V gamma_sr (n2 - n3): each transfer event deposits 2 hbar
/// of angular momentum, at pair density eta, weighted by the population
/// imbalance of the flip-flop doublet.
inline double torque_value(double eta, double volume, double gamma_sr_rate,
                           double delta_n23, const PhysicalConstants& pc = {}) {
  if (eta < 0 || volume < 0 || gamma_sr_rate < 0)
    throw invalid_parameter("torque_value: eta, volume and gamma_sr must be nonnegative");
  return 2.0 * pc.hbar * eta * volume * gamma_sr_rate * delta_n23;
}

/// Composed torque prediction from the rate set and the six-level populations.
inline TorqueReport torque_on_crystal(const CrystalSpec& crystal, const RateSet& rates,
                                      const PhysicalConstants& pc = {}) {
  crystal.validate();
  TorqueReport t;
  t.steady = six_level_steady_state(rates);
  RateReport rr = gamma_sr(rates.gamma_d, rates.gamma_o, rates.gamma_l);
  t.gamma_sr = rr.gamma_sr;
  t.polarization = t.steady.delta_n23;
  t.torque = torque_value(crystal.eta, crystal.volume, rr.gamma_sr, t.polarization, pc);
  t.torque_density = t.torque / crystal.volume;
  return t;
}

/// Serial composition of the coherent transfer and the optical reset used as
/// the analytic reference for the rotor Monte Carlo pumping slope.
inline double pumping_rate_serial(double gamma_d, double gamma_o, double gamma_l) {
  RateReport rr = gamma_sr(gamma_d, gamma_o, gamma_l);
  if (rr.gamma_sr <= 0 || gamma_o <= 0) return 0;
  return 1.0 / (1.0 / rr.gamma_sr + 1.0 / gamma_o);
}

}  // namespace rotopump
