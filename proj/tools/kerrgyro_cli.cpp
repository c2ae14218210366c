// kerrgyro: command-line front end for the nonlinear Sagnac gyroscope models.
//
//   kerrgyro probe     --family squeezed --n-bar 16 --fraction 0.25
//   kerrgyro simulate  --family coherent --n-bar 4 --phi 0.01 --phi0 -1.5707963
//   kerrgyro estimate  --family number --n-bar 4 --fraction 0.25 --phi 0.1 --phi0 0.3
//   kerrgyro sweep     --config configs/coherent_scaling.json --csv out.csv --json out.json
//   kerrgyro optimize  --n-bar 64 --objective simple-m
//   kerrgyro noise     --alpha 2.828 --r 1 --eta 0.9 --thermal 0.1 --phase-var 0.01
//   kerrgyro fit       --csv out.csv --x N_bar --y qfi
//
// Exit status: 0 when everything requested was computed, 1 when some values
// came back null with a reason code, 2 on usage or configuration errors.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "kerrgyro/kerrgyro.hpp"

namespace {

using namespace kerrgyro;
using json = nlohmann::ordered_json;

struct point_options {
  std::string family = "coherent";
  double n_bar = 4.0;
  double fraction = 0.0;
  double phi = 0.0;
  double phi0 = 0.0;
  std::string ordering = "square";
  double tail_tol = default_tail_tol;
  int moment_order = 6;
};

void add_point_options(CLI::App* cmd, point_options& o, bool with_phase) {
  cmd->add_option("--family", o.family, "coherent | squeezed | number")->capture_default_str();
  cmd->add_option("--n-bar", o.n_bar, "mean total photon number")->capture_default_str();
  cmd->add_option("--fraction", o.fraction, "photon fraction in input port 2")->capture_default_str();
  cmd->add_option("--tail-tol", o.tail_tol, "discarded probability per probe")->capture_default_str();
  cmd->add_option("--moment-order", o.moment_order, "highest moment kept accurate by the cutoff")
      ->capture_default_str();
  if (with_phase) {
    cmd->add_option("--phi", o.phi, "nonlinear signal phase")->capture_default_str();
    cmd->add_option("--phi0", o.phi0, "linear bias phase")->capture_default_str();
    cmd->add_option("--ordering", o.ordering, "square | normal")->capture_default_str();
  }
}

two_mode_state point_probe(const point_options& o, cutoff_plan* plan_out = nullptr) {
  const probe_spec spec = family_probe(parse_family(o.family), o.n_bar, o.fraction);
  const cutoff_plan plan = plan_cutoffs(spec, o.tail_tol, o.moment_order);
  if (plan_out) *plan_out = plan;
  return build_probe(spec, plan, o.tail_tol);
}

void emit(const json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(path, j);
  }
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

int run_probe(const point_options& o, const std::string& json_path) {
  cutoff_plan plan;
  const two_mode_state psi = point_probe(o, &plan);
  const generator_moments g = g_moments(psi, o.tail_tol);
  json j = report_header("probe");
  j["family"] = o.family;
  j["n_bar"] = o.n_bar;
  j["fraction"] = o.fraction;
  j["cutoff1"] = plan.cutoff1;
  j["cutoff2"] = plan.cutoff2;
  j["tail_mass"] = psi.tail_mass();
  j["edge_mass"] = psi.edge_mass();
  j["norm2"] = psi.norm2();
  j["real_coefficients"] = psi.has_real_coefficients(1e-14);
  j["mean_G"] = g.mean_g;
  j["var_G"] = g.var_g;
  emit(j, json_path);
  return 0;
}

int run_simulate(const point_options& o, const std::string& json_path, const std::string& table_path) {
  const two_mode_state psi = point_probe(o);
  const channel_params params{o.phi, o.phi0, parse_ordering(o.ordering)};
  const photon_statistics s = gyro_pass(psi, params, o.tail_tol);
  const m_moments m = m_statistics(s);
  json j = report_header("simulate");
  j["family"] = o.family;
  j["n_bar"] = o.n_bar;
  j["fraction"] = o.fraction;
  j["phi"] = o.phi;
  j["phi0"] = o.phi0;
  j["ordering"] = o.ordering;
  j["total_probability"] = s.total();
  j["mean_M"] = m.mean_m;
  j["mean_M2"] = m.mean_m2;
  j["var_M"] = m.var_m;
  if (!table_path.empty()) {
    std::ofstream out(table_path, std::ios::binary);
    if (!out) throw error(errc::io_error, "cannot write '" + table_path + "'");
    out << "n1,n2,p\n";
    for (std::size_t a = 0; a <= s.cutoff1; ++a) {
      for (std::size_t b = 0; b <= s.cutoff2; ++b) {
        const double p = s(a, b);
        if (p > 0.0) out << a << ',' << b << ',' << format_number(p) << '\n';
      }
    }
  }
  emit(j, json_path);
  return 0;
}

int run_estimate(const point_options& o, double fd_step, const std::string& json_path) {
  sweep_config cfg;
  cfg.family = parse_family(o.family);
  cfg.phi0 = o.phi0;
  cfg.ordering = parse_ordering(o.ordering);
  cfg.tail_tol = o.tail_tol;
  cfg.fd_step = fd_step;
  cfg.moment_order = o.moment_order;
  const sweep_row row = compute_row(cfg, o.n_bar, o.fraction, o.phi);
  json j = report_header("estimate");
  j["row"] = row_json(row);
  emit(j, json_path);
  return row.clean() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum resolution of a Kerr-nonlinear Sagnac gyroscope"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kerrgyro::version));

  point_options point;
  std::string json_path;
  std::string table_path;
  double fd_step = 1e-5;

  auto* probe_cmd = app.add_subcommand("probe", "inspect a probe state");
  add_point_options(probe_cmd, point, false);
  probe_cmd->add_option("--json", json_path, "write the report here instead of stdout");

  auto* sim_cmd = app.add_subcommand("simulate", "one gyroscope pass, output statistics");
  add_point_options(sim_cmd, point, true);
  sim_cmd->add_option("--json", json_path, "write the report here instead of stdout");
  sim_cmd->add_option("--table", table_path, "write p(n1, n2) as CSV");

  auto* est_cmd = app.add_subcommand("estimate", "resolution estimates at one working point");
  add_point_options(est_cmd, point, true);
  est_cmd->add_option("--fd-step", fd_step, "finite-difference step in phi")->capture_default_str();
  est_cmd->add_option("--json", json_path, "write the report here instead of stdout");

  sweep_config sweep;
  std::string config_path;
  std::vector<double> sweep_n, sweep_f, sweep_phi;
  std::string sweep_family, sweep_ordering;
  std::optional<double> sweep_phi0;
  std::optional<unsigned> sweep_threads;
  std::string sweep_csv, sweep_json;
  auto* sweep_cmd = app.add_subcommand("sweep", "grid sweep to CSV and JSON");
  sweep_cmd->add_option("--config", config_path, "JSON config file");
  sweep_cmd->add_option("--family", sweep_family, "overrides the config");
  sweep_cmd->add_option("--n-bar", sweep_n, "overrides the config")->delimiter(',');
  sweep_cmd->add_option("--fraction", sweep_f, "overrides the config")->delimiter(',');
  sweep_cmd->add_option("--phi", sweep_phi, "overrides the config")->delimiter(',');
  sweep_cmd->add_option("--phi0", sweep_phi0, "overrides the config");
  sweep_cmd->add_option("--ordering", sweep_ordering, "overrides the config");
  sweep_cmd->add_option("--threads", sweep_threads, "worker threads");
  sweep_cmd->add_option("--csv", sweep_csv, "row table output");
  sweep_cmd->add_option("--json", sweep_json, "report output");

  double opt_n = 16.0;
  std::string objective = "qfi-exact";
  optimize_options opt;
  auto* opt_cmd = app.add_subcommand("optimize", "best photon split between coherent and squeezed ports");
  opt_cmd->add_option("--n-bar", opt_n, "mean total photon number")->capture_default_str();
  opt_cmd->add_option("--objective", objective,
                      "qfi-exact | qfi-surrogate | simple-m | simple-m-exact | multiparam-l | multiparam-nl | "
                      "multiparam-l-surrogate | multiparam-nl-surrogate")
      ->capture_default_str();
  opt_cmd->add_option("--grid", opt.grid, "coarse grid points")->capture_default_str();
  opt_cmd->add_option("--f-lo", opt.f_lo, "lowest fraction")->capture_default_str();
  opt_cmd->add_option("--f-hi", opt.f_hi, "highest fraction")->capture_default_str();
  opt_cmd->add_option("--f-tol", opt.f_tol, "refinement tolerance")->capture_default_str();
  opt_cmd->add_option("--json", json_path, "write the report here instead of stdout");

  double alpha = 2.0, r = 0.5, noise_n = 64.0;
  noise_params noise;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  auto* noise_cmd = app.add_subcommand("noise", "detection-noise variance and degraded resolution");
  noise_cmd->add_option("--alpha", alpha, "coherent amplitude (real)")->capture_default_str();
  noise_cmd->add_option("--r", r, "squeezing parameter")->capture_default_str();
  noise_cmd->add_option("--eta", noise.eta, "detector efficiency")->capture_default_str();
  noise_cmd->add_option("--thermal", noise.thermal, "thermal photons N_t")->capture_default_str();
  noise_cmd->add_option("--phase-var", noise.phase_var, "random phase variance")->capture_default_str();
  noise_cmd->add_option("--n-bar", noise_n, "photon number for the resolution formulas")->capture_default_str();
  noise_cmd->add_option("--samples", samples, "Monte Carlo samples")->capture_default_str();
  noise_cmd->add_option("--seed", seed, "Monte Carlo seed")->capture_default_str();
  noise_cmd->add_option("--json", json_path, "write the report here instead of stdout");

  std::string fit_csv, fit_x = "N_bar", fit_y = "qfi";
  auto* fit_cmd = app.add_subcommand("fit", "log-log fit of two CSV columns");
  fit_cmd->add_option("--csv", fit_csv, "sweep CSV")->required();
  fit_cmd->add_option("--x", fit_x, "x column")->capture_default_str();
  fit_cmd->add_option("--y", fit_y, "y column")->capture_default_str();
  fit_cmd->add_option("--json", json_path, "write the report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*probe_cmd) return run_probe(point, json_path);
    if (*sim_cmd) return run_simulate(point, json_path, table_path);
    if (*est_cmd) return run_estimate(point, fd_step, json_path);

    if (*sweep_cmd) {
      if (!config_path.empty()) sweep = load_config(config_path);
      if (!sweep_family.empty()) sweep.family = parse_family(sweep_family);
      if (!sweep_n.empty()) sweep.n_bar = sweep_n;
      if (!sweep_f.empty()) sweep.fraction = sweep_f;
      if (!sweep_phi.empty()) sweep.phi = sweep_phi;
      if (sweep_phi0) sweep.phi0 = *sweep_phi0;
      if (!sweep_ordering.empty()) sweep.ordering = parse_ordering(sweep_ordering);
      if (sweep_threads) sweep.threads = *sweep_threads;
      if (!sweep_csv.empty()) sweep.csv_path = sweep_csv;
      if (!sweep_json.empty()) sweep.json_path = sweep_json;
      const auto start = std::chrono::steady_clock::now();
      const std::vector<sweep_row> rows = run_sweep(sweep);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (sweep.csv_path.empty()) {
        write_csv(std::cout, rows);
      } else {
        write_csv_file(sweep.csv_path, rows);
      }
      json report = sweep_report(sweep, rows);
      report["generated_at"] = utc_timestamp();
      report["elapsed_seconds"] = seconds;
      if (!sweep.json_path.empty()) write_json_file(sweep.json_path, report);
      std::size_t bad = 0;
      for (const auto& row : rows) bad += row.clean() ? 0 : 1;
      std::fprintf(stderr, "%zu rows, %zu with reason codes, %.2f s\n", rows.size(), bad, seconds);
      return bad == 0 ? 0 : 1;
    }

    if (*opt_cmd) {
      const split_objective o = parse_objective(objective);
      const split_optimum best = optimize_split(opt_n, o, opt);
      json j = report_header("optimize");
      j["n_bar"] = opt_n;
      j["objective"] = objective;
      j["fraction"] = best.fraction;
      j["n2"] = best.fraction * opt_n;
      j["value"] = best.value;
      j["value_over_n4"] = best.value / std::pow(opt_n, 4);
      j["evaluations"] = best.evaluations;
      json grid = json::array();
      for (std::size_t i = 0; i < best.grid_f.size(); ++i) {
        grid.push_back({{"fraction", best.grid_f[i]},
                        {"value", std::isnan(best.grid_value[i]) ? json(nullptr) : json(best.grid_value[i])}});
      }
      j["grid"] = std::move(grid);
      emit(j, json_path);
      return 0;
    }

    if (*noise_cmd) {
      const mc_estimate mc = mc_noise_oracle(alpha, r, noise, samples, seed);
      json j = report_header("noise");
      j["alpha"] = alpha;
      j["r"] = r;
      j["noise"] = {{"eta", noise.eta}, {"thermal", noise.thermal}, {"phase_var", noise.phase_var},
                    {"epsilon", noise.epsilon()}};
      j["var_M"] = noisy_m_variance(alpha, r, noise);
      j["var_M_uncorrected"] = noisy_m_variance_uncorrected(alpha, r, noise);
      j["monte_carlo"] = {{"mean", mc.mean}, {"std_error", mc.std_error}, {"samples", mc.samples}, {"seed", seed}};
      j["n_bar"] = noise_n;
      j["d2phi_coherent"] = noisy_delta2phi(noise_n, noisy_probe::coherent, noise);
      j["d2phi_squeezed"] = noisy_delta2phi(noise_n, noisy_probe::coherent_squeezed_optimum, noise);
      j["thermal_small"] = noise.thermal_small(noise_n);
      emit(j, json_path);
      return 0;
    }

    if (*fit_cmd) {
      std::ifstream in(fit_csv);
      if (!in) throw error(errc::io_error, "cannot open '" + fit_csv + "'");
      const std::vector<sweep_row> rows = read_csv(in);
      const power_fit f = fit_scaling(rows, fit_x, fit_y);
      json j = report_header("fit");
      j["x"] = fit_x;
      j["y"] = fit_y;
      j["slope"] = f.slope;
      j["intercept"] = f.intercept;
      j["residual"] = f.residual;
      j["points"] = f.points;
      emit(j, json_path);
      return 0;
    }
  } catch (const kerrgyro::error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
