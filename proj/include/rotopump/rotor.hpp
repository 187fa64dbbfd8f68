#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "rotopump/params.hpp"

namespace rotopump {

using cplx = std::complex<double>;

/// Two-chain tight-binding wavefunction over rotor sites m in [m_min, m_max].
/// Chain A is the |0,+1/2> spin state, chain B is |-1,-1/2>; the inter-chain
/// coupling only connects (A, m) <-> (B, m+2).
struct RotorLatticeState {
  long m_min = 0;
  long m_max = 0;
  std::vector<cplx> a;  // chain A amplitudes, index m - m_min
  std::vector<cplx> b;  // chain B amplitudes
  double moment_of_inertia = 0;  // kg m^2
  double detuning = 0;           // rad/s, chain-B offset Delta - 2*omega0'

  size_t size() const { return a.size(); }

  double norm2() const {
    double s = 0;
    for (const auto& z : a) s += std::norm(z);
    for (const auto& z : b) s += std::norm(z);
    return s;
  }

  double chain_b_population() const {
    double s = 0;
    for (const auto& z : b) s += std::norm(z);
    return s;
  }

  void normalize() {
    double n = std::sqrt(norm2());
    if (n <= 0) throw accuracy_error("RotorLatticeState: zero norm");
    for (auto& z : a) z /= n;
    for (auto& z : b) z /= n;
  }

  /// Population on the two outermost sites of each edge, chains summed.
  double edge_leakage() const {
    double s = 0;
    size_t n = size();
    for (size_t i : {size_t(0), size_t(1), n - 2, n - 1})
      s += std::norm(a[i]) + std::norm(b[i]);
    return s;
  }

  double mean_m() const {
    double s = 0;
    for (size_t i = 0; i < size(); ++i)
      s += double(m_min + long(i)) * (std::norm(a[i]) + std::norm(b[i]));
    return s;
  }

  double mean_m2() const {
    double s = 0;
    for (size_t i = 0; i < size(); ++i) {
      double m = double(m_min + long(i));
      s += m * m * (std::norm(a[i]) + std::norm(b[i]));
    }
    return s;
  }

  std::vector<double> m_distribution() const {
    std::vector<double> p(size());
    for (size_t i = 0; i < size(); ++i) p[i] = std::norm(a[i]) + std::norm(b[i]);
    return p;
  }

  /// Pad both edges with zero amplitude.
  void grow(long pad_lo, long pad_hi) {
    std::vector<cplx> na(size() + pad_lo + pad_hi, cplx(0)), nb(na.size(), cplx(0));
    std::copy(a.begin(), a.end(), na.begin() + pad_lo);
    std::copy(b.begin(), b.end(), nb.begin() + pad_lo);
    a = std::move(na);
    b = std::move(nb);
    m_min -= pad_lo;
    m_max += pad_hi;
  }
};

/// Gaussian thermal rotor state on chain A: <L_z> = 0 and
/// <L_z^2> = J * k_B * t_init (equipartition for one rotational axis).
inline RotorLatticeState thermal_initial_state(double t_init, double inertia, long m_min,
                                               long m_max, double detuning = 0.0,
                                               const PhysicalConstants& pc = {}) {
  if (t_init < 0) throw invalid_parameter("thermal_initial_state: t_init must be >= 0");
  if (inertia <= 0) throw invalid_parameter("thermal_initial_state: inertia must be > 0");
  if (m_min > 0 || m_max < 0 || m_min >= m_max)
    throw invalid_parameter("thermal_initial_state: window must straddle m = 0");
  double sigma2 = inertia * pc.k_B * t_init / (pc.hbar * pc.hbar);  // <m^2>
  double sigma = std::sqrt(sigma2);
  if (double(-m_min) < 6.0 * sigma || double(m_max) < 6.0 * sigma)
    throw invalid_parameter("thermal_initial_state: window narrower than 6 sigma");
  RotorLatticeState st;
  st.m_min = m_min;
  st.m_max = m_max;
  st.moment_of_inertia = inertia;
  st.detuning = detuning;
  st.a.assign(size_t(m_max - m_min + 1), cplx(0));
  st.b.assign(st.a.size(), cplx(0));
  if (sigma2 == 0) {
    st.a[size_t(-m_min)] = 1.0;
    return st;
  }
  for (size_t i = 0; i < st.a.size(); ++i) {
    double m = double(m_min + long(i));
    st.a[i] = std::exp(-m * m / (4.0 * sigma2));  // probability variance sigma2
  }
  st.normalize();
  return st;
}

struct TrajectoryConfig {
  double dt = 0;            // s; 0 means pick automatically
  double t_total = 0;       // s
  std::uint64_t seed = 1;
  RateSet rates;
  long snapshot_stride = 50;
  long distribution_stride = 0;  // snapshots of the full m-distribution; 0 = first/last only
  double leak_threshold = 1e-6;
  double growth_fraction = 0.25;
  size_t window_hard_cap = 200000;
  double dt_safety = 0.04;  // dt * fastest-rate bound
};

/// Distribution snapshot (chains summed).
struct DistributionSnapshot {
  double t = 0;
  long m_min = 0;
  std::vector<double> prob;
};

struct ObservableSeries {
  std::vector<double> times;              // s
  std::vector<double> mean_lz;            // hbar units
  std::vector<double> lz_second_moment;   // hbar^2 units
  std::vector<double> rotational_energy;  // J
  std::vector<DistributionSnapshot> snapshots;
};

/// One Trotter-Suzuki step bound to a fixed window: half-step diagonal phase,
/// the 2x2 block rotation on every (A,m)/(B,m+2) pair, half-step diagonal
/// phase. The hop matrix element is hbar*Gamma_d, so an isolated resonant
/// block Rabi-oscillates at angular frequency 2*Gamma_d and full transfer
/// first occurs at t = pi/(2*Gamma_d).
class TrotterPropagator {
 public:
  TrotterPropagator(const RotorLatticeState& st, double gamma_d, double dt,
                    double rot_b /* hbar/(2J) in rad/s */, double dt_safety = 0.04) {
    rebuild(st, gamma_d, dt, rot_b, dt_safety);
  }

  void rebuild(const RotorLatticeState& st, double gamma_d, double dt, double rot_b,
               double dt_safety = 0.04) {
    size_t n = st.size();
    double omega_r = 2.0 * gamma_d;
    // Diagonal phases are exact, so the step-size constraint involves the
    // block-relative energies, not the absolute site energies.
    double block_detune = 0;
    for (long m = st.m_min; m + 2 <= st.m_max; ++m)
      block_detune = std::max(block_detune,
                              std::abs(double(4 * m + 4) * rot_b + st.detuning));
    double fastest = std::max({omega_r, block_detune});
    if (fastest > 0 && dt * fastest >= dt_safety)
      throw invalid_parameter("TrotterPropagator: dt too large for the fastest scale");
    ph_a_.resize(n);
    ph_b_.resize(n);
    for (size_t i = 0; i < n; ++i) {
      double m = double(st.m_min + long(i));
      double e = m * m * rot_b;  // site energy / hbar
      ph_a_[i] = std::polar(1.0, -e * dt / 2.0);
      ph_b_[i] = std::polar(1.0, -(e + st.detuning) * dt / 2.0);
    }
    c_ = std::cos(omega_r * dt / 2.0);
    s_ = std::sin(omega_r * dt / 2.0);
  }

  void apply(RotorLatticeState& st) const {
    size_t n = st.size();
    for (size_t i = 0; i < n; ++i) {
      st.a[i] *= ph_a_[i];
      st.b[i] *= ph_b_[i];
    }
    const cplx mis(0.0, -s_);
    for (size_t i = 0; i + 2 < n; ++i) {
      cplx av = st.a[i], bv = st.b[i + 2];
      st.a[i] = c_ * av + mis * bv;
      st.b[i + 2] = mis * av + c_ * bv;
    }
    for (size_t i = 0; i < n; ++i) {
      st.a[i] *= ph_a_[i];
      st.b[i] *= ph_b_[i];
    }
  }

 private:
  std::vector<cplx> ph_a_, ph_b_;
  double c_ = 1, s_ = 0;
};

/// Stochastic optical-pumping projection: with probability gamma_o*dt*P_B the
/// whole chain-B amplitude is transferred to chain A at the same m (spin reset
/// preserving m_L); otherwise the no-jump weak decay plus renormalization.
template <class Rng>
void quantum_jump(RotorLatticeState& st, double gamma_o, double dt, Rng& rng) {
  if (gamma_o <= 0) return;
  if (dt * gamma_o >= 0.05) throw invalid_parameter("quantum_jump: dt * gamma_o too large");
  double pb = st.chain_b_population();
  if (pb <= 0) return;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  if (uni(rng) < gamma_o * dt * pb) {
    double inv = 1.0 / std::sqrt(pb);
    for (size_t i = 0; i < st.size(); ++i) {
      st.a[i] = st.b[i] * inv;
      st.b[i] = 0.0;
    }
  } else {
    double decay = std::sqrt(std::max(0.0, 1.0 - gamma_o * dt));
    for (auto& z : st.b) z *= decay;
    st.normalize();
  }
}

/// Stochastic rotor dephasing: an independent Gaussian phase per m column
/// (variance 2*gamma_l*dt), identical on both chains at that column, so only
/// m-distinct coherences decay (at rate 2*gamma_l in the ensemble).
template <class Rng>
void quantum_drift(RotorLatticeState& st, double gamma_l, double dt, Rng& rng) {
  if (gamma_l <= 0) return;
  if (dt * gamma_l >= 0.05) throw invalid_parameter("quantum_drift: dt * gamma_l too large");
  std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 * gamma_l * dt));
  for (size_t i = 0; i < st.size(); ++i) {
    cplx ph = std::polar(1.0, gauss(rng));
    st.a[i] *= ph;
    st.b[i] *= ph;
  }
}

inline double auto_dt(const TrajectoryConfig& cfg, const RotorLatticeState& st,
                      double rot_b) {
  double block_detune = 0;
  for (long m = st.m_min; m + 2 <= st.m_max; ++m)
    block_detune =
        std::max(block_detune, std::abs(double(4 * m + 4) * rot_b + st.detuning));
  double fastest = std::max({2.0 * cfg.rates.gamma_d, cfg.rates.gamma_o,
                             cfg.rates.gamma_l, block_detune, 1.0});
  return 0.8 * cfg.dt_safety / fastest;
}

/// Evolve one trajectory. Deterministic given the seed; the window grows when
/// edge leakage exceeds the configured threshold.
inline ObservableSeries run_trajectory(const TrajectoryConfig& cfg, RotorLatticeState st) {
  cfg.rates.validate();
  if (cfg.t_total <= 0) throw invalid_parameter("run_trajectory: t_total must be > 0");
  double rot_b = PhysicalConstants{}.hbar / (2.0 * st.moment_of_inertia);
  double dt = cfg.dt > 0 ? cfg.dt : auto_dt(cfg, st, rot_b);
  std::mt19937_64 rng(cfg.seed);
  TrotterPropagator step(st, cfg.rates.gamma_d, dt, rot_b, cfg.dt_safety);

  long nsteps = std::lround(cfg.t_total / dt);
  ObservableSeries out;
  PhysicalConstants pc;
  auto record = [&](double t) {
    out.times.push_back(t);
    out.mean_lz.push_back(st.mean_m());
    out.lz_second_moment.push_back(st.mean_m2());
    out.rotational_energy.push_back(pc.hbar * rot_b * st.mean_m2());
  };
  auto snapshot = [&](double t) {
    out.snapshots.push_back({t, st.m_min, st.m_distribution()});
  };
  snapshot(0.0);
  for (long it = 0; it < nsteps; ++it) {
    step.apply(st);
    quantum_jump(st, cfg.rates.gamma_o, dt, rng);
    quantum_drift(st, cfg.rates.gamma_l, dt, rng);
    bool at_stride = (it % cfg.snapshot_stride) == 0;
    if (at_stride) {
      double t = double(it + 1) * dt;
      record(t);
      if (cfg.distribution_stride > 0 && (it % (cfg.snapshot_stride * cfg.distribution_stride)) == 0)
        snapshot(t);
      if (st.edge_leakage() > cfg.leak_threshold) {
        long pad = std::max<long>(8, long(cfg.growth_fraction * double(st.size()) / 2.0));
        st.grow(pad, pad);
        if (st.size() > cfg.window_hard_cap)
          throw resource_limit_error("run_trajectory: window grew beyond hard cap");
        step.rebuild(st, cfg.rates.gamma_d, dt, rot_b, cfg.dt_safety);
      }
    }
  }
  snapshot(double(nsteps) * dt);
  return out;
}

/// Pointwise mean over series sharing one time grid. Distribution snapshots
/// are aligned on the union m-range per snapshot index.
inline ObservableSeries average_series(const std::vector<ObservableSeries>& runs) {
  if (runs.size() < 2) throw invalid_parameter("average_series: need >= 2 trajectories");
  const auto& t0 = runs.front().times;
  for (const auto& r : runs)
    if (r.times != t0) throw invalid_parameter("average_series: mismatched time grids");
  ObservableSeries avg;
  avg.times = t0;
  size_t n = t0.size();
  avg.mean_lz.assign(n, 0.0);
  avg.lz_second_moment.assign(n, 0.0);
  avg.rotational_energy.assign(n, 0.0);
  for (const auto& r : runs)
    for (size_t i = 0; i < n; ++i) {
      avg.mean_lz[i] += r.mean_lz[i];
      avg.lz_second_moment[i] += r.lz_second_moment[i];
      avg.rotational_energy[i] += r.rotational_energy[i];
    }
  double inv = 1.0 / double(runs.size());
  for (size_t i = 0; i < n; ++i) {
    avg.mean_lz[i] *= inv;
    avg.lz_second_moment[i] *= inv;
    avg.rotational_energy[i] *= inv;
  }
  size_t nsnap = runs.front().snapshots.size();
  for (const auto& r : runs) nsnap = std::min(nsnap, r.snapshots.size());
  for (size_t k = 0; k < nsnap; ++k) {
    long lo = runs.front().snapshots[k].m_min;
    long hi = lo + long(runs.front().snapshots[k].prob.size()) - 1;
    for (const auto& r : runs) {
      lo = std::min(lo, r.snapshots[k].m_min);
      hi = std::max(hi, r.snapshots[k].m_min + long(r.snapshots[k].prob.size()) - 1);
    }
    DistributionSnapshot s;
    s.t = runs.front().snapshots[k].t;
    s.m_min = lo;
    s.prob.assign(size_t(hi - lo + 1), 0.0);
    for (const auto& r : runs)
      for (size_t i = 0; i < r.snapshots[k].prob.size(); ++i)
        s.prob[size_t(r.snapshots[k].m_min - lo) + i] += inv * r.snapshots[k].prob[i];
    avg.snapshots.push_back(std::move(s));
  }
  return avg;
}

/// Run ntraj trajectories with seeds seed0, seed0+1, ... and average them.
/// The seed-to-trajectory mapping is index based, so the result does not
/// depend on the thread count or scheduling.
inline ObservableSeries run_ensemble(const TrajectoryConfig& base,
                                     const RotorLatticeState& initial, int ntraj,
                                     int nthreads = 0) {
  if (ntraj < 2) throw invalid_parameter("run_ensemble: need >= 2 trajectories");
  if (nthreads <= 0) nthreads = int(std::thread::hardware_concurrency());
  nthreads = std::clamp(nthreads, 1, ntraj);
  std::vector<ObservableSeries> runs(static_cast<size_t>(ntraj));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(nthreads));
  std::vector<std::thread> pool;
  for (int w = 0; w < nthreads; ++w)
    pool.emplace_back([&, w]() {
      try {
        for (int k = w; k < ntraj; k += nthreads) {
          TrajectoryConfig cfg = base;
          cfg.seed = base.seed + std::uint64_t(k);
          runs[size_t(k)] = run_trajectory(cfg, initial);
        }
      } catch (...) {
        errors[size_t(w)] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return average_series(runs);
}

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                          size_t begin, size_t end) {
  if (end > x.size() || begin + 2 > end) throw invalid_parameter("fit_line: bad range");
  double n = double(end - begin);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = begin; i < end; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LinearFit f;
  double denom = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, ss_tot = 0, ym = sy / n;
  for (size_t i = begin; i < end; ++i) {
    double pred = f.slope * x[i] + f.intercept;
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - ym) * (y[i] - ym);
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

struct PlateauEstimate {
  double plateau_lz = 0;   // fitted plateau, hbar units
  double onset_time = 0;   // s, first time within 5% of the plateau
  double m_star_pred = 0;  // analytic pi*Gamma_d*J/hbar - 1
  double ratio = 0;        // fitted / predicted
  bool converged = false;
};

/// Plateau detection for the long-horizon stalling of the momentum pumping:
/// the energy-step resonance condition dE_m = 2*pi*hbar*Gamma_d predicts the
/// stall at m* = pi*Gamma_d*J/hbar - 1.
inline PlateauEstimate pseudo_terminal_analysis(const ObservableSeries& s, double gamma_d,
                                                double inertia,
                                                const PhysicalConstants& pc = {}) {
  if (s.times.size() < 20) throw invalid_parameter("pseudo_terminal_analysis: series too short");
  PlateauEstimate est;
  est.m_star_pred = pi * gamma_d * inertia / pc.hbar - 1.0;
  size_t n = s.times.size();
  auto late = fit_line(s.times, s.mean_lz, n - n / 4, n);
  auto early = fit_line(s.times, s.mean_lz, 0, n / 10 + 2);
  est.plateau_lz = late.slope * s.times[n - 1] + late.intercept;
  est.converged = std::abs(late.slope) < 0.1 * std::abs(early.slope);
  if (!est.converged) return est;  // not-converged signal, caller checks flag
  for (size_t i = 0; i < n; ++i)
    if (s.mean_lz[i] >= 0.95 * est.plateau_lz) {
      est.onset_time = s.times[i];
      break;
    }
  est.ratio = est.plateau_lz / est.m_star_pred;
  return est;
}

}  // namespace rotopump
