#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>

#include "rotopump/operators.hpp"
#include "rotopump/params.hpp"
#include "rotopump/quadrature.hpp"
#include "rotopump/rates.hpp"

namespace rotopump {

// ---------------------------------------------------------------------------
// Regularized thermal phonon integral in the unit-less variable v = hbar*w/kT.

inline double bose_integrand(double v, double nu0, double nu1) {
  if (v <= 0) return 0.0;
  double n = 1.0 / std::expm1(v);
  double det = (nu0 * nu0 - v * v);
  return v * v * v * v * n * (n + 1.0) / (det * det + nu1 * nu1 * nu1 * nu1);
}

namespace detail {
inline std::vector<double> bose_breakpoints(double nu0, double nu1, double v_upper) {
  // The resonance at v = nu0 has half-width nu1^2/(2 nu0) in v; cluster
  // breakpoints geometrically around it so the quadrature resolves the peak.
  double w = nu1 * nu1 / (2.0 * nu0);
  std::vector<double> pts{0.0};
  auto push = [&pts, v_upper](double v) {
    if (v > pts.back() && v < v_upper) pts.push_back(v);
  };
  push(0.5 * nu0);
  for (double s : {1e8, 1e6, 1e4, 1e2, 1e1, 1.0}) push(nu0 - s * w);
  push(nu0);
  for (double s : {1.0, 1e1, 1e2, 1e4, 1e6, 1e8}) push(nu0 + s * w);
  push(2.0 * nu0);
  push(1.0);
  pts.push_back(v_upper);
  return pts;
}
}  // namespace detail

/// Fully resolved quadrature of the regularized integral. The resonance peak
/// dominates; its analytic weight is pi*nu0^3*n(n+1)/(2*nu1^2).
inline double bose_integral(double nu0, double nu1, double rel_tol = 1e-8,
                            double v_upper = 40.0) {
  if (nu0 <= 0 || nu1 <= 0) throw invalid_parameter("bose_integral: need nu0, nu1 > 0");
  auto f = [=](double v) { return bose_integrand(v, nu0, nu1); };
  return integrate_with_breakpoints(f, detail::bose_breakpoints(nu0, nu1, v_upper), rel_tol);
}

/// Closed-form value of the integrand peak times half the resonance position:
/// nu0^5 n(n+1)/(2 nu1^4) with n evaluated at nu0. This is the coarse
/// regularization estimate the published 1.4e19 figure corresponds to; the
/// resolved quadrature above is smaller by roughly nu1^2*nu0/(pi w) ~ 3e7.
inline double bose_integral_peak_estimate(double nu0, double nu1) {
  if (nu0 <= 0 || nu1 <= 0)
    throw invalid_parameter("bose_integral_peak_estimate: need nu0, nu1 > 0");
  double n = 1.0 / std::expm1(nu0);
  double nu1_4 = nu1 * nu1 * nu1 * nu1;
  return nu0 * nu0 * nu0 * nu0 * nu0 * n * (n + 1.0) / (2.0 * nu1_4);
}

/// Physical-units entry point: nu0 = hbar*omega0/kT (omega0 in rad/s),
/// nu1 = hbar*gamma_d/kT (gamma_d a plain rate, no 2 pi).
inline double bose_integral_physical(double temperature, double omega0, double gamma_d,
                                     const PhysicalConstants& pc = {}) {
  if (temperature <= 0) throw invalid_parameter("bose_integral_physical: T must be > 0");
  return bose_integral(pc.nu_of_omega(omega0, temperature),
                       pc.nu_of_rate(gamma_d, temperature));
}

/// Partial integral I(v') = int_0^{v'} I(v) dv, the saturation diagnostic
/// showing near-resonant phonons dominate.
inline double bose_partial_integral(double v_prime, double nu0, double nu1,
                                    double rel_tol = 1e-8) {
  if (v_prime <= 0) return 0.0;
  auto f = [=](double v) { return bose_integrand(v, nu0, nu1); };
  return integrate_with_breakpoints(f, detail::bose_breakpoints(nu0, nu1, v_prime), rel_tol);
}

// ---------------------------------------------------------------------------
// Angular averages entering the ensemble rates.

/// Closed form of int dOmega_k (k_hat . r)^4 for |r| = r at polar angle
/// theta_r: pi r^4 (24/15 cos^2 sin^2 + 4/5 cos^4 + 4/5 sin^4). The bracket
/// collapses to 4/5 for every theta_r (isotropy of the k average).
inline double angular_integral_k4(double theta_r, double r) {
  double c = std::cos(theta_r), s = std::sin(theta_r);
  double r4 = r * r * r * r;
  return pi * r4 *
         ((24.0 / 15.0) * c * c * s * s + 0.8 * c * c * c * c + 0.8 * s * s * s * s);
}

/// Monte Carlo check of the same solid-angle integral over random k_hat.
inline double angular_integral_k4_mc(double theta_r, double r, std::size_t samples,
                                     std::uint64_t seed) {
  if (samples == 0) throw invalid_parameter("angular_integral_k4_mc: samples must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector3d rhat(std::sin(theta_r), 0.0, std::cos(theta_r));
  double acc = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    Eigen::Vector3d k(gauss(rng), gauss(rng), gauss(rng));
    double c = k.normalized().dot(rhat);
    acc += c * c * c * c;
  }
  double r4 = r * r * r * r;
  return 4.0 * pi * r4 * acc / double(samples);
}

/// Solid-angle integrals of the displacement-coupling angular factors:
///   weighted: 2pi int cos^2 sin^2 (3cos t + 4cos 3t)^4 sin t dt   (~30 pi)
///   full:     2pi int (cos^4 + sin^4)(3cos t + 4cos 3t)^4 sin t dt (~376 pi)
struct ThetaIntegrals {
  double weighted;
  double full;
};

inline ThetaIntegrals theta_integrals(double rel_tol = 1e-10) {
  auto poly = [](double t) {
    double p = 3.0 * std::cos(t) + 4.0 * std::cos(3.0 * t);
    return p * p * p * p;
  };
  auto f1 = [&](double t) {
    double c = std::cos(t), s = std::sin(t);
    return c * c * s * s * poly(t) * s;
  };
  auto f2 = [&](double t) {
    double c = std::cos(t), s = std::sin(t);
    return (c * c * c * c + s * s * s * s) * poly(t) * s;
  };
  ThetaIntegrals out;
  out.weighted = 2.0 * pi * adaptive_simpson(f1, 0.0, pi, rel_tol);
  out.full = 2.0 * pi * adaptive_simpson(f2, 0.0, pi, rel_tol);
  return out;
}

// ---------------------------------------------------------------------------
// Non-resonant two-quantum channel.

/// Ensemble coupling factor Lambda (J^4): eta (r_min^-9 - r_max^-9) alpha^4 /
/// (2^5 pi * 21), with alpha the energy-unit dipolar prefactor.
inline double lambda_factor(double eta, double r_min, double r_max,
                            const PhysicalConstants& pc = {}) {
  if (eta <= 0 || r_min <= 0 || r_max <= r_min)
    throw invalid_parameter("lambda_factor: need eta > 0 and 0 < r_min < r_max");
  double a = pc.alpha_energy();
  double a4 = a * a * a * a;
  auto inv9 = [](double r) { return 1.0 / std::pow(r, 9); };
  return eta * (inv9(r_min) - inv9(r_max)) * a4 / (32.0 * pi * 21.0);
}

/// Simplified form dropping the r_max term: (eta/r_min^9)(alpha^4/5)/(2^7 pi).
/// Agrees with the precise factor to ~5%.
inline double lambda_factor_simplified(double eta, double r_min,
                                       const PhysicalConstants& pc = {}) {
  if (eta <= 0 || r_min <= 0)
    throw invalid_parameter("lambda_factor_simplified: need eta, r_min > 0");
  double a = pc.alpha_energy();
  double a4 = a * a * a * a;
  return (eta / std::pow(r_min, 9)) * (a4 / 5.0) / (128.0 * pi);
}

struct NonResonantReport {
  double rate = 0;            // s^-1
  double lambda = 0;          // J^4
  double bose = 0;            // dimensionless integral actually used
  double bose_resolved = 0;   // fully resolved quadrature
  double nu0 = 0, nu1 = 0;
  bool used_peak_estimate = true;
};

/// Second-order spin to phonon-spin conversion rate at the matched field.
/// rho_ss ~ 1/gamma_d; the coarse peak-estimate integral is the published
/// convention, the resolved one is reported alongside.
inline NonResonantReport gamma_nonresonant(const CrystalSpec& crystal, double gamma_d,
                                           const PhysicalConstants& pc = {},
                                           bool use_peak_estimate = true) {
  crystal.validate();
  if (gamma_d <= 0) throw invalid_parameter("gamma_nonresonant: gamma_d must be > 0");
  NonResonantReport out;
  double omega0 = pc.gamma_e * pc.matching_field();
  out.nu0 = pc.nu_of_omega(omega0, crystal.temperature);
  out.nu1 = pc.nu_of_rate(gamma_d, crystal.temperature);
  out.lambda = lambda_factor(crystal.eta, crystal.r_min, crystal.effective_r_max(), pc);
  out.bose_resolved = bose_integral(out.nu0, out.nu1);
  out.used_peak_estimate = use_peak_estimate;
  out.bose = use_peak_estimate ? bose_integral_peak_estimate(out.nu0, out.nu1)
                               : out.bose_resolved;
  double kT_over_hbar = pc.k_B * crystal.temperature / pc.hbar;
  double c7 = std::pow(crystal.c_sound, 7);
  double rho_ss = 1.0 / gamma_d;
  out.rate = (2.0 * pi / (pc.hbar * pc.hbar)) * out.lambda * omega0 * omega0 /
             (crystal.rho * crystal.rho * crystal.volume * c7) * kT_over_hbar * out.bose *
             rho_ss;
  return out;
}

// ---------------------------------------------------------------------------
// Resonant channel: a single phonon mode at omega_k = omega_0 couples the
// three degenerate states |i>, |g>, |f>.

/// Resonant coupling energy (J) for a pair at distance r, polar angle theta,
/// with cos_kr = k_hat . r_hat.
inline std::complex<double> resonant_coupling(double r, double theta, double cos_kr,
                                              const CrystalSpec& crystal,
                                              const PhysicalConstants& pc = {}) {
  if (r <= 0) throw invalid_parameter("resonant_coupling: r must be > 0");
  double b1 = spin_phonon_coefficients_alpha(pc.alpha_energy(), r, theta).b1;
  double mag = cos_kr * r * (b1 / (2.0 * crystal.c_sound)) *
               std::sqrt(pc.k_B * crystal.temperature / (2.0 * crystal.rho * crystal.volume));
  return std::complex<double>(0.0, -mag);
}

/// Tridiagonal Hamiltonian of the degenerate triple, in Joules.
inline Eigen::Matrix3cd three_level_hamiltonian(std::complex<double> g, double e = 0.0) {
  Eigen::Matrix3cd h = Eigen::Matrix3cd::Zero();
  h(0, 0) = h(1, 1) = h(2, 2) = e;
  h(0, 1) = g;
  h(1, 0) = std::conj(g);
  h(1, 2) = 2.0 * g;
  h(2, 1) = 2.0 * std::conj(g);
  return h;
}

/// Closed-form transfer probability |<f|exp(-iHt/hbar)|i>|^2
/// = (4/25)[1 - cos(sqrt(5)|G|t/hbar)]^2, maximum 16/25.
inline double three_level_transfer(std::complex<double> g, double t,
                                   const PhysicalConstants& pc = {}) {
  double x = 1.0 - std::cos(std::sqrt(5.0) * std::abs(g) * t / pc.hbar);
  return (4.0 / 25.0) * x * x;
}

struct ResonantReport {
  double rate = 0;       // s^-1
  double lambda0 = 0;    // resonant phonon wavelength used for the cutoff, m
  bool quenched = false; // crystal smaller than the resonant wavelength
  double prefactor = 0;  // the (4.8/13120.3)^(1/4) numerical factor
};

/// Ensemble-averaged resonant transfer rate; scales as V^{-1/2} and is
/// quenched when the crystal cannot host the resonant mode (V < lambda0^3).
inline ResonantReport gamma_resonant(const CrystalSpec& crystal,
                                     const PhysicalConstants& pc = {}) {
  crystal.validate();
  ResonantReport out;
  double omega0 = pc.gamma_e * pc.matching_field();
  out.lambda0 = lambda0_hz_convention(crystal.c_sound, omega0);
  out.prefactor = std::pow(4.8 / 13120.3, 0.25);
  double l3 = out.lambda0 * out.lambda0 * out.lambda0;
  if (crystal.volume < l3) {
    out.quenched = true;
    return out;
  }
  double alpha = pc.alpha_energy();
  out.rate = out.prefactor * (alpha / (crystal.c_sound * pc.hbar)) *
             std::sqrt(pc.k_B * crystal.temperature / (crystal.rho * crystal.volume)) *
             std::pow(2.0 * pi * crystal.eta / std::pow(crystal.r_min, 9), 0.25);
  return out;
}

/// Combined summary of both conversion channels for one crystal.
struct PhononChannelReport {
  double gamma_nonres = 0;
  double gamma_res = 0;
  double lambda = 0;       // J^4
  double bose = 0;         // dimensionless, x (k_B T / hbar)
  bool quenched = false;
};

inline PhononChannelReport phonon_channel_report(const CrystalSpec& crystal, double gamma_d,
                                                 const PhysicalConstants& pc = {}) {
  PhononChannelReport out;
  NonResonantReport nr = gamma_nonresonant(crystal, gamma_d, pc);
  ResonantReport rr = gamma_resonant(crystal, pc);
  out.gamma_nonres = nr.rate;
  out.gamma_res = rr.rate;
  out.lambda = nr.lambda;
  out.bose = nr.bose;
  out.quenched = rr.quenched;
  return out;
}

}  // namespace rotopump
