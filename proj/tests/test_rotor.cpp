#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <complex>
#include <numeric>

#include "rotopump/rotor.hpp"

using namespace rotopump;
using Catch::Approx;

namespace {

const PhysicalConstants pc{};

/// Bit generators with fixed output, to force or suppress stochastic branches.
struct ZeroRng {
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }
  result_type operator()() { return 0; }
};
struct MaxRng {
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }
  result_type operator()() { return max(); }
};

RotorLatticeState empty_state(long m_min, long m_max, double inertia,
                              double detuning = 0.0) {
  RotorLatticeState st;
  st.m_min = m_min;
  st.m_max = m_max;
  st.moment_of_inertia = inertia;
  st.detuning = detuning;
  st.a.assign(size_t(m_max - m_min + 1), cplx(0));
  st.b.assign(st.a.size(), cplx(0));
  return st;
}

}  // namespace

TEST_CASE("thermal initial state reproduces equipartition moments") {
  double rot_b = 50.0;                      // rad/s
  double inertia = pc.hbar / (2.0 * rot_b);
  double t_init = 1e-3;                     // K, keeps sigma modest
  double sigma2 = inertia * pc.k_B * t_init / (pc.hbar * pc.hbar);
  long w = long(8.0 * std::sqrt(sigma2)) + 2;
  auto st = thermal_initial_state(t_init, inertia, -w, w);
  REQUIRE(st.norm2() == Approx(1.0).epsilon(1e-12));
  REQUIRE(st.chain_b_population() == 0.0);
  REQUIRE(st.mean_m() == Approx(0.0).margin(1e-10));
  REQUIRE(st.mean_m2() == Approx(sigma2).epsilon(1e-3));

  auto cold = thermal_initial_state(0.0, inertia, -4, 4);
  REQUIRE(cold.mean_m2() == 0.0);
  REQUIRE(std::norm(cold.a[4]) == Approx(1.0));

  REQUIRE_THROWS_AS(thermal_initial_state(-1.0, inertia, -4, 4), invalid_parameter);
  REQUIRE_THROWS_AS(thermal_initial_state(0.0, -inertia, -4, 4), invalid_parameter);
  REQUIRE_THROWS_AS(thermal_initial_state(0.0, inertia, 1, 4), invalid_parameter);
  // window narrower than 6 sigma
  REQUIRE_THROWS_AS(thermal_initial_state(t_init, inertia, -3, 3), invalid_parameter);
}

TEST_CASE("window growth pads with zeros and preserves the stored amplitudes") {
  auto st = empty_state(-2, 2, 1e-30);
  st.a[2] = cplx(0.6, 0.0);
  st.b[4] = cplx(0.0, 0.8);
  double m1 = st.mean_m(), n1 = st.norm2();
  st.grow(3, 5);
  REQUIRE(st.m_min == -5);
  REQUIRE(st.m_max == 7);
  REQUIRE(st.size() == 13);
  REQUIRE(st.norm2() == Approx(n1));
  REQUIRE(st.mean_m() == Approx(m1));
  REQUIRE(st.a[5] == cplx(0.6, 0.0));
  REQUIRE(st.b[7] == cplx(0.0, 0.8));
}

TEST_CASE("resonant block Rabi-oscillates at twice the pair coupling rate") {
  // With flat site energies an isolated (A, m) / (B, m+2) block is exact:
  // P_B(t) = sin^2(Gamma_d t), so full transfer first occurs at pi/(2 Gamma_d).
  double gamma_d = 1000.0;
  auto st = empty_state(-4, 4, 1e-3);  // huge inertia -> rot_b ~ 0
  st.a[4] = 1.0;                       // m = 0 on chain A
  double t_full = pi / (2.0 * gamma_d);
  long nsteps = 20000;
  double dt = t_full / double(nsteps);
  TrotterPropagator step(st, gamma_d, dt, pc.hbar / (2.0 * st.moment_of_inertia));
  for (long i = 0; i < nsteps / 2; ++i) step.apply(st);
  REQUIRE(st.chain_b_population() == Approx(0.5).epsilon(1e-9));
  for (long i = nsteps / 2; i < nsteps; ++i) step.apply(st);
  REQUIRE(st.chain_b_population() == Approx(1.0).epsilon(1e-9));
  REQUIRE(st.mean_m() == Approx(2.0).epsilon(1e-9));  // spin flip recoils the rotor
  REQUIRE(st.norm2() == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("propagator rejects steps that undersample the fastest scale") {
  auto st = empty_state(-4, 4, 1e-30);
  st.a[4] = 1.0;
  double rot_b = pc.hbar / (2.0 * st.moment_of_inertia);
  double fastest = std::max(2.0 * 1e5, std::abs(20.0 * rot_b + st.detuning));
  REQUIRE_THROWS_AS(TrotterPropagator(st, 1e5, 1.0 / fastest, rot_b), invalid_parameter);
  REQUIRE_NOTHROW(TrotterPropagator(st, 1e5, 0.01 / fastest, rot_b));
}

TEST_CASE("split-step propagation matches a dense matrix exponential") {
  long m_min = -3, m_max = 3;
  long nm = m_max - m_min + 1;
  double gamma_d = 300.0, rot_b = 40.0, detuning = 70.0;
  double inertia = pc.hbar / (2.0 * rot_b);

  // dense H / hbar: chain A block then chain B block
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2 * nm, 2 * nm);
  for (long i = 0; i < nm; ++i) {
    double m = double(m_min + i);
    h(i, i) = m * m * rot_b;
    h(nm + i, nm + i) = m * m * rot_b + detuning;
  }
  for (long i = 0; i + 2 < nm; ++i) {
    h(nm + i + 2, i) = gamma_d;  // hop element -> Rabi frequency 2 Gamma_d
    h(i, nm + i + 2) = gamma_d;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);

  auto st = empty_state(m_min, m_max, inertia, detuning);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd psi0(2 * nm);
  for (long i = 0; i < nm; ++i) {
    st.a[size_t(i)] = cplx(g(rng), g(rng));
    st.b[size_t(i)] = cplx(g(rng), g(rng));
  }
  st.normalize();
  for (long i = 0; i < nm; ++i) {
    psi0(i) = st.a[size_t(i)];
    psi0(nm + i) = st.b[size_t(i)];
  }

  double t = 3e-3, dt = 5e-8;
  long nsteps = std::lround(t / dt);
  TrotterPropagator step(st, gamma_d, dt, rot_b);
  for (long i = 0; i < nsteps; ++i) step.apply(st);

  Eigen::VectorXcd phases(2 * nm);
  for (long i = 0; i < 2 * nm; ++i)
    phases(i) = std::polar(1.0, -es.eigenvalues()(i) * t);
  Eigen::VectorXcd exact =
      es.eigenvectors() * phases.asDiagonal() * (es.eigenvectors().adjoint() * psi0);

  double err = 0;
  for (long i = 0; i < nm; ++i) {
    err = std::max(err, std::abs(st.a[size_t(i)] - exact(i)));
    err = std::max(err, std::abs(st.b[size_t(i)] - exact(nm + i)));
  }
  REQUIRE(err < 1e-8);
  REQUIRE(st.norm2() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("forced optical jump projects chain B onto chain A at the same site") {
  auto st = empty_state(-3, 3, 1e-30);
  st.a[1] = std::sqrt(0.3);
  st.b[4] = std::sqrt(0.5);
  st.b[5] = std::sqrt(0.2);
  auto before = st.m_distribution();
  ZeroRng force;
  quantum_jump(st, 1e6, 1e-8, force);
  REQUIRE(st.chain_b_population() == 0.0);
  REQUIRE(st.norm2() == Approx(1.0).epsilon(1e-12));
  // the reset preserves m: the full amplitude moves across chains in place
  REQUIRE(std::norm(st.a[4]) == Approx(0.5 / 0.7).epsilon(1e-12));
  REQUIRE(std::norm(st.a[5]) == Approx(0.2 / 0.7).epsilon(1e-12));
  REQUIRE(std::norm(st.a[1]) == 0.0);  // chain A content is replaced by the reset
  (void)before;
}

TEST_CASE("no-jump branch weakly decays chain B and renormalizes") {
  auto st = empty_state(-3, 3, 1e-30);
  st.a[1] = std::sqrt(0.4);
  st.b[4] = std::sqrt(0.6);
  double gamma_o = 1e6, dt = 1e-8;
  MaxRng suppress;
  quantum_jump(st, gamma_o, dt, suppress);
  REQUIRE(st.norm2() == Approx(1.0).epsilon(1e-12));
  double expected_b = 0.6 * (1.0 - gamma_o * dt) / (1.0 - 0.6 * gamma_o * dt);
  REQUIRE(st.chain_b_population() == Approx(expected_b).epsilon(1e-10));
  REQUIRE_THROWS_AS(quantum_jump(st, 1e6, 1e-6, suppress), invalid_parameter);
}

TEST_CASE("rotor dephasing leaves every site population untouched") {
  auto st = empty_state(-5, 5, 1e-30);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  for (size_t i = 0; i < st.size(); ++i) {
    st.a[i] = cplx(g(rng), g(rng));
    st.b[i] = cplx(g(rng), g(rng));
  }
  st.normalize();
  auto before_a = st.a;
  auto before_b = st.b;
  quantum_drift(st, 1e4, 1e-6, rng);
  for (size_t i = 0; i < st.size(); ++i) {
    REQUIRE(std::norm(st.a[i]) == Approx(std::norm(before_a[i])).margin(1e-15));
    REQUIRE(std::norm(st.b[i]) == Approx(std::norm(before_b[i])).margin(1e-15));
    // both chains pick up the same phase at a given site
    if (std::abs(before_a[i]) > 1e-8 && std::abs(before_b[i]) > 1e-8)
      REQUIRE(std::abs(st.a[i] / before_a[i] - st.b[i] / before_b[i]) < 1e-12);
  }
  REQUIRE_THROWS_AS(quantum_drift(st, 1e6, 1e-6, rng), invalid_parameter);
}

TEST_CASE("ensemble-averaged dephasing decays site coherences at 2 gamma_l") {
  double gamma_l = 1e4, dt = 1e-6, t = 5e-5;  // 2*gamma_l*t = 1
  long nsteps = std::lround(t / dt);
  const int ntraj = 4000;
  cplx acc(0.0, 0.0);
  for (int k = 0; k < ntraj; ++k) {
    auto st = empty_state(0, 1, 1e-30);
    st.a[0] = st.a[1] = 1.0 / std::sqrt(2.0);
    std::mt19937_64 rng(1000 + std::uint64_t(k));
    for (long i = 0; i < nsteps; ++i) quantum_drift(st, gamma_l, dt, rng);
    acc += st.a[0] * std::conj(st.a[1]);
  }
  double coherence = std::abs(acc) / double(ntraj);
  REQUIRE(coherence == Approx(0.5 * std::exp(-2.0 * gamma_l * t)).epsilon(0.10));
}

TEST_CASE("large chain detuning blocks the angular momentum transfer") {
  TrajectoryConfig cfg;
  cfg.rates = RateSet{};  // gamma_d = 0.5 MHz, gamma_o = 1 MHz defaults
  cfg.rates.gamma_l = 0;
  cfg.t_total = 2e-5;
  cfg.seed = 42;
  double rot_b = 2.0 * pi * 10.0;
  double inertia = pc.hbar / (2.0 * rot_b);
  auto st = thermal_initial_state(0.0, inertia, -10, 12, /*detuning=*/1e9);
  auto blocked = run_trajectory(cfg, st);
  REQUIRE(std::abs(blocked.mean_lz.back()) < 0.05);

  auto resonant_state = thermal_initial_state(0.0, inertia, -20, 60, 0.0);
  auto pumped = run_trajectory(cfg, resonant_state);
  REQUIRE(pumped.mean_lz.back() > 3.0);
  REQUIRE(pumped.mean_lz.back() > 50.0 * std::abs(blocked.mean_lz.back()));
}

TEST_CASE("trajectories are reproducible for a fixed seed") {
  TrajectoryConfig cfg;
  cfg.rates.gamma_l = 2.5e5;
  cfg.t_total = 5e-6;
  cfg.seed = 7;
  double inertia = pc.hbar / (2.0 * 2.0 * pi * 10.0);
  auto st = thermal_initial_state(0.0, inertia, -15, 30, 0.0);
  auto r1 = run_trajectory(cfg, st);
  auto r2 = run_trajectory(cfg, st);
  REQUIRE(r1.times == r2.times);
  REQUIRE(r1.mean_lz == r2.mean_lz);
  REQUIRE(r1.lz_second_moment == r2.lz_second_moment);
  cfg.seed = 8;
  auto r3 = run_trajectory(cfg, st);
  REQUIRE(r1.mean_lz != r3.mean_lz);

  // boundary snapshots are recorded and normalized
  REQUIRE(r1.snapshots.front().t == 0.0);
  REQUIRE(r1.snapshots.back().t == Approx(r1.times.back()).epsilon(0.2));
  double psum = std::accumulate(r1.snapshots.back().prob.begin(),
                                r1.snapshots.back().prob.end(), 0.0);
  REQUIRE(psum == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ensemble average does not depend on the thread count") {
  TrajectoryConfig cfg;
  cfg.rates.gamma_l = 1e5;
  cfg.t_total = 4e-6;
  cfg.seed = 11;
  double inertia = pc.hbar / (2.0 * 2.0 * pi * 10.0);
  auto st = thermal_initial_state(0.0, inertia, -15, 30, 0.0);
  auto serial = run_ensemble(cfg, st, 6, 1);
  auto parallel = run_ensemble(cfg, st, 6, 3);
  REQUIRE(serial.times == parallel.times);
  REQUIRE(serial.mean_lz == parallel.mean_lz);
  REQUIRE(serial.lz_second_moment == parallel.lz_second_moment);
  REQUIRE(serial.rotational_energy == parallel.rotational_energy);
}

TEST_CASE("series averaging is a pointwise mean and rejects mismatched grids") {
  ObservableSeries s1, s2;
  s1.times = s2.times = {0.0, 1.0, 2.0};
  s1.mean_lz = {0.0, 2.0, 4.0};
  s2.mean_lz = {1.0, 3.0, 7.0};
  s1.lz_second_moment = {0.0, 4.0, 16.0};
  s2.lz_second_moment = {1.0, 9.0, 49.0};
  s1.rotational_energy = {0.0, 1.0, 2.0};
  s2.rotational_energy = {0.0, 3.0, 4.0};
  s1.snapshots.push_back({0.0, -1, {0.25, 0.5, 0.25}});
  s2.snapshots.push_back({0.0, 0, {0.5, 0.5}});
  auto avg = average_series({s1, s2});
  REQUIRE(avg.mean_lz == std::vector<double>{0.5, 2.5, 5.5});
  REQUIRE(avg.lz_second_moment == std::vector<double>{0.5, 6.5, 32.5});
  auto swapped = average_series({s2, s1});
  REQUIRE(avg.mean_lz == swapped.mean_lz);
  // union-aligned distribution average
  REQUIRE(avg.snapshots[0].m_min == -1);
  REQUIRE(avg.snapshots[0].prob ==
          std::vector<double>{0.125, 0.5, 0.375});

  ObservableSeries s3 = s2;
  s3.times = {0.0, 1.0, 3.0};
  REQUIRE_THROWS_AS(average_series({s1, s3}), invalid_parameter);
  REQUIRE_THROWS_AS(average_series({s1}), invalid_parameter);
}

TEST_CASE("line fit recovers exact linear data") {
  std::vector<double> x{0, 1, 2, 3, 4, 5}, y;
  for (double v : x) y.push_back(3.0 * v + 2.0);
  auto f = fit_line(x, y, 0, x.size());
  REQUIRE(f.slope == Approx(3.0).epsilon(1e-12));
  REQUIRE(f.intercept == Approx(2.0).epsilon(1e-12));
  REQUIRE(f.r2 == Approx(1.0).epsilon(1e-12));
  REQUIRE_THROWS_AS(fit_line(x, y, 4, 5), invalid_parameter);
  REQUIRE_THROWS_AS(fit_line(x, y, 0, 100), invalid_parameter);
}

TEST_CASE("plateau detection flags saturated and unsaturated pumping curves") {
  double gamma_d = 2e5;
  double rot_b = 2.0 * pi * 2000.0;
  double inertia = pc.hbar / (2.0 * rot_b);
  double m_star = pi * gamma_d / (2.0 * rot_b) - 1.0;

  ObservableSeries saturated, ramp;
  for (int i = 0; i <= 200; ++i) {
    double t = 1e-5 * double(i);
    saturated.times.push_back(t);
    saturated.mean_lz.push_back(m_star * (1.0 - std::exp(-t / 2e-4)));
    ramp.times.push_back(t);
    ramp.mean_lz.push_back(1e4 * t);
  }
  auto est = pseudo_terminal_analysis(saturated, gamma_d, inertia);
  REQUIRE(est.m_star_pred == Approx(m_star).epsilon(1e-12));
  REQUIRE(est.converged);
  REQUIRE(est.ratio == Approx(1.0).epsilon(0.02));
  REQUIRE(est.onset_time > 0.0);
  REQUIRE(est.onset_time < saturated.times.back());

  auto est2 = pseudo_terminal_analysis(ramp, gamma_d, inertia);
  REQUIRE_FALSE(est2.converged);
}
