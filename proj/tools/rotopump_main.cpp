// rotopump: simulation and rate engine for optically pumped spin-to-rotation
// angular-momentum transfer in NV-P1 doped crystals.
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "rotopump/experiment.hpp"
#include "rotopump/io.hpp"
#include "rotopump/operators.hpp"
#include "rotopump/phonon.hpp"
#include "rotopump/rates.hpp"
#include "rotopump/rotor.hpp"

namespace fs = std::filesystem;
using namespace rotopump;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failed_check = 1;
constexpr int exit_bad_input = 2;
constexpr int exit_accuracy = 3;
constexpr int exit_resource = 4;

struct Cli {
  std::string command;
  std::string params_path;
  std::string out_dir;
  std::uint64_t seed = 12345;
  int threads = 0;
  std::vector<std::string> overrides;
};

int resolve_threads(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("ROTOPUMP_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  int hw = int(std::thread::hardware_concurrency());
  return hw > 0 ? hw : 1;
}

ParamMap load_params(const Cli& cli) {
  ParamMap p = cli.params_path.empty() ? ParamMap{} : ParamMap::from_file(cli.params_path);
  for (const auto& ov : cli.overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw invalid_parameter("--set expects key=value, got: " + ov);
    p.set(ov.substr(0, eq), ov.substr(eq + 1));
  }
  return p;
}

RateSet rates_from(const ParamMap& p) {
  RateSet r;
  r.gamma_d = p.get("gamma_d_hz", r.gamma_d);
  r.gamma_o = p.get("gamma_o_hz", r.gamma_o);
  r.gamma_l = p.get("gamma_l_hz", r.gamma_l);
  r.gamma_nv = p.get("gamma_nv_hz", r.gamma_nv);
  r.gamma_p1 = p.get("gamma_p1_hz", p.has("gamma_d_hz") ? r.gamma_d : r.gamma_p1);
  r.validate();
  return r;
}

CrystalSpec crystal_from(const ParamMap& p, const PhysicalConstants& pc) {
  std::string shape = p.get_string("crystal_shape", "sphere");
  CrystalSpec c;
  double rho = p.get("rho_kg_m3", 3515.0);
  if (shape == "cylinder") {
    c = CrystalSpec::cylinder(p.require("radius_m"), p.require("thickness_m"), rho);
  } else if (shape == "sphere") {
    c = CrystalSpec::sphere(p.get("volume_m3", 1e-12), rho);
  } else if (shape == "custom") {
    c.rho = rho;
    c.volume = p.require("volume_m3");
    c.moment_of_inertia = p.require("moment_of_inertia_kg_m2");
    c.shape = CrystalShape::custom;
  } else {
    throw invalid_parameter("crystal_shape must be sphere, cylinder or custom");
  }
  c.c_sound = p.get("c_sound_m_s", c.c_sound);
  c.temperature = p.get("temperature_k", c.temperature);
  c.eta = eta_from_params(p, pc, c.eta);
  c.r_min = p.get("r_min_m", c.r_min);
  c.r_max = p.get("r_max_m", 0.0);
  c.validate();
  return c;
}

CsvTable series_to_csv(const ObservableSeries& s) {
  CsvTable t({"t_s", "mean_lz_hbar", "var_lz_hbar2", "e_rot_j"});
  for (size_t i = 0; i < s.times.size(); ++i)
    t.add_row({s.times[i], s.mean_lz[i],
               s.lz_second_moment[i] - s.mean_lz[i] * s.mean_lz[i],
               s.rotational_energy[i]});
  return t;
}

nlohmann::json snapshots_to_json(const ObservableSeries& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& snap : s.snapshots) {
    nlohmann::json j;
    j["t_s"] = snap.t;
    j["m_min"] = snap.m_min;
    j["prob"] = snap.prob;
    arr.push_back(std::move(j));
  }
  return arr;
}

int cmd_simulate(const Cli& cli, const ParamMap& p, Manifest& man, const fs::path& out) {
  PhysicalConstants pc;
  TrajectoryConfig cfg;
  cfg.rates = rates_from(p);
  cfg.dt = p.get("dt_s", 0.0);
  cfg.t_total = p.require("t_total_s");
  cfg.seed = cli.seed;
  cfg.snapshot_stride = long(p.get("snapshot_stride", 50));
  cfg.distribution_stride = long(p.get("distribution_stride", 0));
  double rot_b_hz = p.require("rot_b_hz");  // hbar/(2J) expressed in Hz
  double rot_b = 2.0 * pi * rot_b_hz;
  double inertia = pc.hbar / (2.0 * rot_b);
  double t_init = p.get("t_init_k", 0.0);
  long m_min = long(p.get("m_min", -40));
  long m_max = long(p.get("m_max", 200));
  double detuning = p.get("detuning_rad_s", 0.0);
  int ntraj = int(p.get("ntraj", 50));

  RotorLatticeState init = thermal_initial_state(t_init, inertia, m_min, m_max, detuning, pc);
  ObservableSeries avg = run_ensemble(cfg, init, ntraj, man.threads);

  series_to_csv(avg).write(out / "series.csv");
  write_json(out / "distributions.json", snapshots_to_json(avg));
  man.artifacts = {"series.csv", "distributions.json"};

  size_t n = avg.times.size();
  auto fit = fit_line(avg.times, avg.mean_lz, n / 10, n);
  nlohmann::json summary;
  summary["slope_hbar_per_s"] = fit.slope;
  summary["r2"] = fit.r2;
  summary["final_mean_lz_hbar"] = avg.mean_lz.back();
  write_json(out / "summary.json", summary);
  man.artifacts.push_back("summary.json");
  return exit_ok;
}

int cmd_rates(const Cli&, const ParamMap& p, Manifest& man, const fs::path& out) {
  PhysicalConstants pc;
  RateSet rs = rates_from(p);
  CrystalSpec crystal = crystal_from(p, pc);

  RateReport ens = gamma_sr_ensemble(rs.gamma_o, rs.gamma_l, crystal.eta, crystal.r_min,
                                     crystal.effective_r_max(), pc);
  RateReport point = gamma_sr(rs.gamma_d, rs.gamma_o, rs.gamma_l);
  TorqueReport tq = torque_on_crystal(crystal, rs, pc);

  nlohmann::json j;
  j["gamma_d_ensemble_hz"] = ens.gamma_d;
  j["d2sq_avg_rad2_s2"] = ens.d2sq_avg;
  j["gamma_sr_ensemble_hz"] = ens.gamma_sr;
  j["gamma_sr_hz"] = point.gamma_sr;
  j["lineshape_factor_s"] = point.rho_ss;
  j["delta_n23"] = tq.steady.delta_n23;
  j["steady_residual"] = tq.steady.residual;
  j["populations"] = tq.steady.populations;
  j["torque_nm"] = tq.torque;
  j["torque_density_nm_per_m3"] = tq.torque_density;
  write_json(out / "rates.json", j);

  // pumping-rate sweep over the optical rate at fixed dephasing
  CsvTable t({"gamma_o_hz", "gamma_l_hz", "gamma_sr_hz", "delta_n23", "torque_nm"});
  int npts = int(p.get("sweep_points", 41));
  double lo = p.get("gamma_o_min_hz", 1e4), hi = p.get("gamma_o_max_hz", 3e7);
  for (int i = 0; i < npts; ++i) {
    double g = lo * std::pow(hi / lo, double(i) / double(npts - 1));
    RateSet r2 = rs;
    r2.gamma_o = g;
    TorqueReport tr = torque_on_crystal(crystal, r2, pc);
    t.add_row({g, rs.gamma_l, tr.gamma_sr, tr.steady.delta_n23, tr.torque});
  }
  t.write(out / "rates_sweep.csv");
  man.artifacts = {"rates.json", "rates_sweep.csv"};
  return exit_ok;
}

int cmd_phonon(const Cli&, const ParamMap& p, Manifest& man, const fs::path& out) {
  PhysicalConstants pc;
  CrystalSpec crystal = crystal_from(p, pc);
  double gamma_d = p.get("gamma_d_hz", 1e6);

  NonResonantReport nr = gamma_nonresonant(crystal, gamma_d, pc);
  nlohmann::json j;
  j["nu0"] = nr.nu0;
  j["nu1"] = nr.nu1;
  j["bose_peak_estimate"] = nr.bose;
  j["bose_resolved"] = nr.bose_resolved;
  j["lambda_j4"] = nr.lambda;
  auto th = theta_integrals();
  j["theta_integral_weighted_over_pi"] = th.weighted / pi;
  j["theta_integral_full_over_pi"] = th.full / pi;
  write_json(out / "phonon.json", j);

  CsvTable t({"volume_m3", "gamma_res_hz", "gamma_nonres_hz", "quenched"});
  int npts = int(p.get("sweep_points", 41));
  double lo = p.get("volume_min_m3", 1e-16), hi = p.get("volume_max_m3", 1e-6);
  for (int i = 0; i < npts; ++i) {
    double v = lo * std::pow(hi / lo, double(i) / double(npts - 1));
    CrystalSpec c2 = CrystalSpec::sphere(v, crystal.rho);
    c2.c_sound = crystal.c_sound;
    c2.temperature = crystal.temperature;
    c2.eta = crystal.eta;
    c2.r_min = crystal.r_min;
    c2.r_max = crystal.r_max;
    PhononChannelReport rep = phonon_channel_report(c2, gamma_d, pc);
    t.add_row({v, rep.gamma_res, rep.gamma_nonres, rep.quenched ? 1.0 : 0.0});
  }
  t.write(out / "phonon_sweep.csv");
  man.artifacts = {"phonon.json", "phonon_sweep.csv"};
  return exit_ok;
}

OscillatorSpec oscillator_from(const ParamMap& p) {
  OscillatorSpec o;
  o.resonance_freq = p.get("osc_freq_hz", o.resonance_freq);
  o.quality_factor = p.get("osc_q", o.quality_factor);
  o.osc_moment_of_inertia = p.get("osc_moment_of_inertia_kg_m2", o.osc_moment_of_inertia);
  o.torque_noise_floor = p.get("osc_noise_floor_nm", o.torque_noise_floor);
  o.validate();
  return o;
}

int cmd_sweep(const Cli&, const ParamMap& p, Manifest& man, const fs::path& out) {
  PhysicalConstants pc;
  RateSet rs = rates_from(p);
  CrystalSpec crystal = crystal_from(p, pc);
  OscillatorSpec osc = oscillator_from(p);
  double a_eff = p.get("hyperfine_a_eff_hz", 114e6);

  auto lines = hyperfine_matching_fields(a_eff, pc);
  double b_lo = p.get("b_min_t", lines.front() - 5e-3);
  double b_hi = p.get("b_max_t", lines.back() + 5e-3);
  int npts = int(p.get("sweep_points", 2001));
  std::vector<double> grid(static_cast<size_t>(npts));
  for (int i = 0; i < npts; ++i)
    grid[size_t(i)] = b_lo + (b_hi - b_lo) * double(i) / double(npts - 1);

  SweepSpectrum sp = sweep_spectrum(grid, rs, crystal, osc, a_eff, pc);
  CsvTable t({"b_tesla", "torque_nm", "amplitude_rad", "snr"});
  for (size_t i = 0; i < sp.field.size(); ++i)
    t.add_row({sp.field[i], sp.torque[i], sp.amplitude[i], sp.snr[i]});
  t.write(out / "spectrum.csv");

  nlohmann::json j;
  for (const auto& [b, label] : sp.lines)
    j["lines"].push_back({{"b_tesla", b}, {"label", label}});
  write_json(out / "sweep_lines.json", j);
  man.artifacts = {"spectrum.csv", "sweep_lines.json"};
  return exit_ok;
}

int cmd_design(const Cli&, const ParamMap& p, Manifest& man, const fs::path& out) {
  PhysicalConstants pc;
  RateSet rs = rates_from(p);
  CrystalSpec crystal = crystal_from(p, pc);
  OscillatorSpec osc = oscillator_from(p);

  TorqueReport tq = torque_on_crystal(crystal, rs, pc);
  double spot = p.get("spot_radius_m", 50e-6);
  double y_sat = p.get("y_sat_w_m2", 1e9);  // 1 mW / um^2
  double g_sat = p.get("gamma_o_sat_hz", 1e6);
  double p_lin = laser_power_linear(rs.gamma_o, spot, y_sat, g_sat);
  double p_exact = rs.gamma_o < g_sat ? laser_power_exact(rs.gamma_o, spot, y_sat, g_sat)
                                      : std::numeric_limits<double>::infinity();
  double theta = oscillator_response(tq.torque, osc);
  double snr = tq.torque / osc.torque_noise_floor;
  PhononChannelReport ph = phonon_channel_report(crystal, rs.gamma_d, pc);

  nlohmann::json j;
  j["inputs"] = nlohmann::json::object();
  for (const auto& [k, v] : p.entries()) j["inputs"][k] = v;
  j["torque_nm"] = tq.torque;
  j["torque_density_nm_per_m3"] = tq.torque_density;
  j["gamma_sr_hz"] = tq.gamma_sr;
  j["delta_n23"] = tq.steady.delta_n23;
  j["laser_power_w_linear"] = p_lin;
  j["laser_power_w_exact"] = p_exact;
  j["oscillator_amplitude_rad"] = theta;
  j["snr"] = snr;
  j["gamma_phonon_res_hz"] = ph.gamma_res;
  j["gamma_phonon_nonres_hz"] = ph.gamma_nonres;
  j["phonon_channel_negligible"] =
      ph.gamma_res < 0.01 * tq.gamma_sr && ph.gamma_nonres < 0.01 * tq.gamma_sr;
  j["feasible"] = snr >= 1.0;
  write_json(out / "design.json", j);
  man.artifacts = {"design.json"};
  return exit_ok;
}

struct Check {
  std::string name;
  bool ok;
};

int cmd_verify(const Cli&, const ParamMap&, Manifest& man, const fs::path& out) {
  PhysicalConstants pc;
  std::vector<Check> checks;
  auto add = [&checks](const std::string& name, bool ok) { checks.push_back({name, ok}); };

  {  // ladder commutator [L_z, lambda+-] = +-hbar lambda+-
    CompositeHilbertSpace sp(-5, 5, pc);
    DenseOp lz = DenseOp(sp.Lz()), lp = DenseOp(sp.lambda(+1)), lm = DenseOp(sp.lambda(-1));
    double e1 = (lz * lp - lp * lz - pc.hbar * lp).cwiseAbs().maxCoeff();
    double e2 = (lz * lm - lm * lz + pc.hbar * lm).cwiseAbs().maxCoeff();
    add("ladder_commutators", e1 / pc.hbar < 1e-12 && e2 / pc.hbar < 1e-12);
  }
  {  // total angular momentum conserved by the full Hamiltonian
    CompositeHilbertSpace sp(-5, 5, pc);
    PairGeometry g{2e-9, 0.7, 0.4, 0.0};
    FieldSpec f = FieldSpec::matched(pc);
    DenseOp h = DenseOp(build_full_hamiltonian(g, f, 1e-30, sp));
    DenseOp jz = DenseOp(sp.Jz());
    double scale = h.cwiseAbs().maxCoeff() * jz.cwiseAbs().maxCoeff();
    double err = (h * jz - jz * h).cwiseAbs().maxCoeff() / scale;
    add("jz_conservation", err < 1e-12);
    add("hermiticity", (h - h.adjoint()).cwiseAbs().maxCoeff() / h.cwiseAbs().maxCoeff() <
                           1e-14);
  }
  {  // quadrature anchors
    auto th = theta_integrals();
    add("theta_integral_weighted", std::abs(th.weighted / (30.0 * pi) - 1.0) < 0.02);
    add("theta_integral_full", std::abs(th.full / (376.0 * pi) - 1.0) < 0.02);
    double mc = angular_integral_k4_mc(0.6, 1.0, 2000000, 7);
    add("solid_angle_k4", std::abs(mc / angular_integral_k4(0.6, 1.0) - 1.0) < 0.005);
    double bose = bose_integral_peak_estimate(2.36e-4, 2.6e-8);
    add("bose_anchor", std::abs(bose / 1.4e19 - 1.0) < 0.10);
  }
  {  // steady-state solver sanity
    RateSet rs;
    auto ss = six_level_steady_state(rs);
    double sum = 0;
    for (double n : ss.populations) sum += n;
    add("steady_state", ss.converged && std::abs(sum - 1.0) < 1e-10);
  }

  bool all_ok = true;
  nlohmann::json j = nlohmann::json::array();
  std::printf("%-28s %s\n", "check", "status");
  for (const auto& c : checks) {
    std::printf("%-28s %s\n", c.name.c_str(), c.ok ? "pass" : "FAIL");
    j.push_back({{"name", c.name}, {"pass", c.ok}});
    all_ok = all_ok && c.ok;
  }
  write_json(out / "verify.json", j);
  man.artifacts = {"verify.json"};
  return all_ok ? exit_ok : exit_failed_check;
}

}  // namespace

int main(int argc, char** argv) {
  Cli cli;
  CLI::App app{"rotopump: spin-to-rotation pumping simulator and rate engine"};
  app.require_subcommand(1);
  for (const char* name : {"simulate", "rates", "phonon", "sweep", "design", "verify"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--params", cli.params_path, "parameter file (key=value lines)");
    sub->add_option("--out", cli.out_dir, "output directory")->required();
    sub->add_option("--seed", cli.seed, "random seed");
    sub->add_option("--threads", cli.threads, "worker thread count");
    sub->add_option("--set", cli.overrides, "override key=value")->take_all();
  }
  CLI11_PARSE(app, argc, argv);
  cli.command = app.get_subcommands().front()->get_name();

  WallClock clock;
  try {
    ParamMap params = load_params(cli);
    fs::path out(cli.out_dir);
    fs::create_directories(out);
    Manifest man;
    man.command = cli.command;
    man.seed = cli.seed;
    man.threads = resolve_threads(cli.threads);
    man.config_hash = config_hash(params);

    int rc;
    if (cli.command == "simulate")
      rc = cmd_simulate(cli, params, man, out);
    else if (cli.command == "rates")
      rc = cmd_rates(cli, params, man, out);
    else if (cli.command == "phonon")
      rc = cmd_phonon(cli, params, man, out);
    else if (cli.command == "sweep")
      rc = cmd_sweep(cli, params, man, out);
    else if (cli.command == "design")
      rc = cmd_design(cli, params, man, out);
    else
      rc = cmd_verify(cli, params, man, out);

    man.wall_time_s = clock.seconds();
    man.write(out, params);
    return rc;
  } catch (const invalid_parameter& e) {
    std::cerr << "error (invalid input): " << e.what() << '\n';
    return exit_bad_input;
  } catch (const accuracy_error& e) {
    std::cerr << "error (accuracy): " << e.what() << '\n';
    return exit_accuracy;
  } catch (const resource_limit_error& e) {
    std::cerr << "error (resource limit): " << e.what() << '\n';
    return exit_resource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_failed_check;
  }
}
