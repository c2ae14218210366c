#pragma once

// Parameter sweeps, split optimisation, log-log fits and CSV/JSON reports.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kerrgyro/analytic_models.hpp"
#include "kerrgyro/error.hpp"
#include "kerrgyro/estimators.hpp"
#include "kerrgyro/noise_models.hpp"
#include "kerrgyro/parallel.hpp"
#include "kerrgyro/probes.hpp"
#include "kerrgyro/version.hpp"

namespace kerrgyro {

enum class probe_family { coherent, squeezed, number };

inline std::string_view to_string(probe_family f) {
  switch (f) {
    case probe_family::coherent: return "coherent";
    case probe_family::squeezed: return "squeezed";
    case probe_family::number: return "number";
  }
  return "?";
}

inline probe_family parse_family(std::string_view s) {
  if (s == "coherent") return probe_family::coherent;
  if (s == "squeezed") return probe_family::squeezed;
  if (s == "number") return probe_family::number;
  throw error(errc::config_error, "unknown probe family '" + std::string(s) + "'");
}

inline kerr_ordering parse_ordering(std::string_view s) {
  if (s == "square") return kerr_ordering::square;
  if (s == "normal") return kerr_ordering::normal;
  throw error(errc::config_error, "unknown ordering '" + std::string(s) + "'");
}

/// The probe at (N, f) for a family. f is the photon fraction in input port 2:
/// the squeezed mode, the second coherent amplitude, or n2 / N for number pairs.
inline probe_spec family_probe(probe_family family, double n_bar, double fraction) {
  if (!(n_bar >= 0.0) || !(fraction >= 0.0 && fraction <= 1.0)) {
    throw error(errc::invalid_argument, "need N >= 0 and fraction in [0, 1]");
  }
  switch (family) {
    case probe_family::coherent:
      return coherent_pair{std::sqrt((1.0 - fraction) * n_bar), std::sqrt(fraction * n_bar)};
    case probe_family::squeezed:
      return probe_spec::squeezed_split(n_bar, fraction);
    case probe_family::number: {
      const double total = std::round(n_bar);
      if (std::abs(total - n_bar) > 1e-9) throw error(errc::invalid_argument, "number probes need integer N");
      const auto n2 = static_cast<std::size_t>(std::llround(fraction * total));
      return number_pair{static_cast<std::size_t>(total) - n2, n2};
    }
  }
  throw error(errc::invalid_argument, "unknown family");
}

struct sweep_config {
  probe_family family = probe_family::coherent;
  std::vector<double> n_bar{4.0};
  std::vector<double> fraction{0.0};
  std::vector<double> phi{0.0};
  double phi0 = 0.0;
  kerr_ordering ordering = kerr_ordering::square;
  std::set<std::string> estimators{"M", "M2", "fisher", "qfi", "multiparam"};
  noise_params noise;
  double tail_tol = default_tail_tol;
  double fd_step = 1e-5;
  int moment_order = 6;
  std::size_t max_sector = 1500;  // highest total photon number a pass may touch
  unsigned threads = default_thread_count();
  std::uint64_t seed = 1;
  std::string csv_path;
  std::string json_path;

  void validate() const {
    if (n_bar.empty() || fraction.empty() || phi.empty()) {
      throw error(errc::config_error, "grids n_bar, fraction and phi must be non-empty");
    }
    for (double n : n_bar) {
      if (!(n > 0.0) || !std::isfinite(n)) throw error(errc::config_error, "n_bar entries must be positive");
    }
    for (double f : fraction) {
      if (!(f >= 0.0 && f <= 1.0)) throw error(errc::config_error, "fraction entries must lie in [0, 1]");
    }
    for (double p : phi) {
      if (!std::isfinite(p)) throw error(errc::config_error, "phi entries must be finite");
    }
    static const std::set<std::string> known{"M", "M2", "fisher", "qfi", "multiparam"};
    for (const auto& e : estimators) {
      if (!known.count(e)) throw error(errc::config_error, "unknown estimator '" + e + "'");
    }
    if (!(tail_tol > 0.0) || !(fd_step > 0.0)) throw error(errc::config_error, "tail_tol and fd_step must be > 0");
    if (moment_order < 0) throw error(errc::config_error, "moment_order must be >= 0");
    noise.validate();
  }
};

inline nlohmann::ordered_json to_json(const sweep_config& c) {
  nlohmann::ordered_json j;
  j["family"] = std::string(to_string(c.family));
  j["n_bar"] = c.n_bar;
  j["fraction"] = c.fraction;
  j["phi"] = c.phi;
  j["phi0"] = c.phi0;
  j["ordering"] = std::string(to_string(c.ordering));
  j["estimators"] = std::vector<std::string>(c.estimators.begin(), c.estimators.end());
  j["noise"] = {{"eta", c.noise.eta}, {"thermal", c.noise.thermal}, {"phase_var", c.noise.phase_var}};
  j["tail_tol"] = c.tail_tol;
  j["fd_step"] = c.fd_step;
  j["moment_order"] = c.moment_order;
  j["max_sector"] = c.max_sector;
  j["threads"] = c.threads;
  j["seed"] = c.seed;
  j["csv"] = c.csv_path;
  j["json"] = c.json_path;
  return j;
}

/// Reads a config tree; keys that are absent keep their current values.
inline void merge_config(sweep_config& c, const nlohmann::ordered_json& j) {
  try {
    if (j.contains("family")) c.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("n_bar")) c.n_bar = j.at("n_bar").get<std::vector<double>>();
    if (j.contains("fraction")) c.fraction = j.at("fraction").get<std::vector<double>>();
    if (j.contains("phi")) c.phi = j.at("phi").get<std::vector<double>>();
    if (j.contains("phi0")) c.phi0 = j.at("phi0").get<double>();
    if (j.contains("ordering")) c.ordering = parse_ordering(j.at("ordering").get<std::string>());
    if (j.contains("estimators")) {
      const auto v = j.at("estimators").get<std::vector<std::string>>();
      c.estimators = std::set<std::string>(v.begin(), v.end());
    }
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      c.noise.eta = n.value("eta", c.noise.eta);
      c.noise.thermal = n.value("thermal", c.noise.thermal);
      c.noise.phase_var = n.value("phase_var", c.noise.phase_var);
    }
    c.tail_tol = j.value("tail_tol", c.tail_tol);
    c.fd_step = j.value("fd_step", c.fd_step);
    c.moment_order = j.value("moment_order", c.moment_order);
    c.max_sector = j.value("max_sector", c.max_sector);
    c.threads = j.value("threads", c.threads);
    c.seed = j.value("seed", c.seed);
    c.csv_path = j.value("csv", c.csv_path);
    c.json_path = j.value("json", c.json_path);
  } catch (const nlohmann::ordered_json::exception& e) {
    throw error(errc::config_error, std::string("config: ") + e.what());
  }
}

inline sweep_config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_error, "cannot open config '" + path + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in, nullptr, true, true);
  } catch (const nlohmann::ordered_json::exception& e) {
    throw error(errc::config_error, "config '" + path + "': " + e.what());
  }
  sweep_config c;
  merge_config(c, j);
  return c;
}

// ------------------------------------------------------------------- rows

struct sweep_row {
  double n_bar = 0.0;
  double fraction = 0.0;
  double phi = 0.0;
  double phi0 = 0.0;
  std::size_t cutoff1 = 0;
  std::size_t cutoff2 = 0;
  std::optional<double> tail_mass;
  std::optional<double> d2phi_m;
  std::optional<double> d2phi_m2;
  std::optional<double> fisher;
  std::optional<double> qfi;
  std::optional<double> mp_bound_l;
  std::optional<double> mp_bound_nl;
  std::optional<double> analytic_d2phi;
  std::vector<std::string> flags;    // regime flags
  std::vector<std::string> reasons;  // field=code for every null field

  bool clean() const { return reasons.empty(); }
};

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"N_bar",   "fraction", "phi",         "phi0",       "cutoff1",
                                             "cutoff2", "tail_mass", "d2phi_M",    "d2phi_M2",   "fisher",
                                             "qfi",     "mp_bound_L", "mp_bound_NL", "analytic_d2phi", "flags"};
  return cols;
}

/// Numeric field lookup by CSV column name.
inline std::optional<double> row_field(const sweep_row& r, std::string_view name) {
  if (name == "N_bar") return r.n_bar;
  if (name == "fraction") return r.fraction;
  if (name == "phi") return r.phi;
  if (name == "phi0") return r.phi0;
  if (name == "cutoff1") return static_cast<double>(r.cutoff1);
  if (name == "cutoff2") return static_cast<double>(r.cutoff2);
  if (name == "tail_mass") return r.tail_mass;
  if (name == "d2phi_M") return r.d2phi_m;
  if (name == "d2phi_M2") return r.d2phi_m2;
  if (name == "fisher") return r.fisher;
  if (name == "qfi") return r.qfi;
  if (name == "mp_bound_L") return r.mp_bound_l;
  if (name == "mp_bound_NL") return r.mp_bound_nl;
  if (name == "analytic_d2phi") return r.analytic_d2phi;
  throw error(errc::invalid_argument, "unknown row field '" + std::string(name) + "'");
}

namespace detail {

inline std::string reason(std::string_view field, errc code) {
  return std::string(field) + "=" + std::string(to_string(code));
}

template <class F>
void guarded(sweep_row& row, std::string_view field, std::optional<double>& slot, F&& f) {
  try {
    const double v = f();
    if (!std::isfinite(v)) {
      row.reasons.push_back(reason(field, errc::non_finite));
      return;
    }
    slot = v;
  } catch (const error& e) {
    row.reasons.push_back(reason(field, e.code()));
  }
}

inline void analytic_counterpart(sweep_row& row, const sweep_config& cfg) {
  const double n = row.n_bar;
  const double f = row.fraction;
  if (n < 8.0) row.flags.emplace_back("small_N");
  if (std::sqrt(n) * std::abs(row.phi) >= 0.1) row.flags.emplace_back("visibility");
  const bool small_signal_point = std::abs(row.phi0 + std::numbers::pi / 2) < 1e-12;
  try {
    switch (cfg.family) {
      case probe_family::coherent: {
        if (f != 0.0) row.flags.emplace_back("unbalanced");
        if (!small_signal_point) row.flags.emplace_back("phi0");
        const asymptote_report a = coherent_delta2phi(n, row.phi);
        if (!a.fringe_ok) row.flags.emplace_back("fringe");
        row.analytic_d2phi = a.predicted_delta2_phi;
        break;
      }
      case probe_family::squeezed: {
        if (!small_signal_point) row.flags.emplace_back("phi0");
        if (n * std::abs(row.phi) >= 0.1) row.flags.emplace_back("large_phi");
        row.analytic_d2phi = squeezed_simple_model_split(n, f * n).delta2_phi;
        break;
      }
      case probe_family::number: {
        const probe_spec spec = family_probe(cfg.family, n, f);
        const auto& np = std::get<number_pair>(spec.variant());
        const number_state_report m =
            number_state_model(static_cast<unsigned>(np.n1), static_cast<unsigned>(np.n2), row.phi, row.phi0,
                               cfg.ordering);
        if (!m.delta2_phi) {
          row.reasons.push_back(reason("analytic_d2phi", errc::undefined_formula));
        } else {
          row.analytic_d2phi = *m.delta2_phi;
        }
        break;
      }
    }
  } catch (const error& e) {
    row.reasons.push_back(reason("analytic_d2phi", e.code()));
  }
}

}  // namespace detail

/// One grid point. Failures are recorded on the row, never thrown.
inline sweep_row compute_row(const sweep_config& cfg, double n_bar, double fraction, double phi) {
  sweep_row row;
  row.n_bar = n_bar;
  row.fraction = fraction;
  row.phi = phi;
  row.phi0 = cfg.phi0;
  const channel_params params{phi, cfg.phi0, cfg.ordering};
  estimator_config est;
  est.fd_step = cfg.fd_step;
  est.tail_tol = cfg.tail_tol;

  std::optional<two_mode_state> probe;
  try {
    const probe_spec spec = family_probe(cfg.family, n_bar, fraction);
    const cutoff_plan plan = plan_cutoffs(spec, cfg.tail_tol, cfg.moment_order);
    row.cutoff1 = plan.cutoff1;
    row.cutoff2 = plan.cutoff2;
    probe = build_probe(spec, plan, cfg.tail_tol);
    row.tail_mass = probe->tail_mass();
  } catch (const error& e) {
    row.reasons.push_back(detail::reason("probe", e.code()));
    for (const char* f : {"tail_mass", "d2phi_M", "d2phi_M2", "fisher", "qfi", "mp_bound_L", "mp_bound_NL"}) {
      row.reasons.push_back(detail::reason(f, e.code()));
    }
    detail::analytic_counterpart(row, cfg);
    return row;
  }
  auto wants = [&](const char* e) { return cfg.estimators.count(e) > 0; };
  if (wants("M")) {
    detail::guarded(row, "d2phi_M", row.d2phi_m, [&] { return error_propagation_delta_phi(*probe, params, est).delta2_phi; });
  }
  if (wants("M2")) {
    detail::guarded(row, "d2phi_M2", row.d2phi_m2, [&] { return m2_error_propagation(*probe, params, est).delta2_phi; });
  }
  if (wants("fisher")) {
    detail::guarded(row, "fisher", row.fisher, [&] { return fisher_information(*probe, params, est).fisher; });
  }
  if (wants("qfi")) {
    detail::guarded(row, "qfi", row.qfi, [&] { return 4.0 * g_moments(*probe, cfg.tail_tol, cfg.ordering).var_g; });
  }
  if (wants("multiparam")) {
    std::optional<multiparam_report> mp;
    try {
      mp = multiparam_fisher(*probe, cfg.tail_tol, cfg.ordering);
    } catch (const error& e) {
      row.reasons.push_back(detail::reason("mp_bound_L", e.code()));
      row.reasons.push_back(detail::reason("mp_bound_NL", e.code()));
    }
    if (mp) {
      row.mp_bound_l = mp->bound_l;
      row.mp_bound_nl = mp->bound_nl;
    }
  }
  detail::analytic_counterpart(row, cfg);
  return row;
}

struct budget_estimate {
  std::size_t worst_sector = 0;
  double peak_bytes = 0.0;
};

/// Plans every (N, f) point and checks the largest photon sector against
/// cfg.max_sector before any channel pass is run.
inline budget_estimate check_budget(const sweep_config& cfg) {
  budget_estimate b;
  for (double n : cfg.n_bar) {
    for (double f : cfg.fraction) {
      std::size_t top = 0;
      try {
        const cutoff_plan plan = plan_cutoffs(family_probe(cfg.family, n, f), cfg.tail_tol, cfg.moment_order);
        top = plan.cutoff1 + plan.cutoff2;
      } catch (const error&) {
        continue;  // reported on the row
      }
      b.worst_sector = std::max(b.worst_sector, top);
    }
  }
  const double side = static_cast<double>(b.worst_sector + 1);
  // a handful of live (top+1)^2 amplitude grids plus one sector matrix
  b.peak_bytes = 8.0 * side * side * sizeof(complex);
  if (b.worst_sector > cfg.max_sector) {
    throw error(errc::infeasible_budget, "grid needs photon sectors up to " + std::to_string(b.worst_sector) +
                                             ", above max_sector = " + std::to_string(cfg.max_sector));
  }
  return b;
}

/// Rows in grid order (N outer, then fraction, then phi).
inline std::vector<sweep_row> run_sweep(const sweep_config& cfg) {
  cfg.validate();
  check_budget(cfg);
  struct point {
    double n, f, phi;
  };
  std::vector<point> points;
  for (double n : cfg.n_bar) {
    for (double f : cfg.fraction) {
      for (double p : cfg.phi) points.push_back({n, f, p});
    }
  }
  std::vector<sweep_row> rows(points.size());
  parallel_for(
      points.size(), [&](std::size_t i) { rows[i] = compute_row(cfg, points[i].n, points[i].f, points[i].phi); },
      cfg.threads);
  return rows;
}

// ---------------------------------------------------------------- output

/// Shortest round-trip decimal form.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string join(const std::vector<std::string>& parts, char sep) {
  std::string s;
  for (const auto& p : parts) {
    if (!s.empty()) s += sep;
    s += p;
  }
  return s;
}

inline void write_csv(std::ostream& out, const std::vector<sweep_row>& rows) {
  out << join(csv_columns(), ',') << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& r : rows) {
    std::vector<std::string> tags = r.flags;
    tags.insert(tags.end(), r.reasons.begin(), r.reasons.end());
    out << format_number(r.n_bar) << ',' << format_number(r.fraction) << ',' << format_number(r.phi) << ','
        << format_number(r.phi0) << ',' << r.cutoff1 << ',' << r.cutoff2 << ',' << opt(r.tail_mass) << ','
        << opt(r.d2phi_m) << ',' << opt(r.d2phi_m2) << ',' << opt(r.fisher) << ',' << opt(r.qfi) << ','
        << opt(r.mp_bound_l) << ',' << opt(r.mp_bound_nl) << ',' << opt(r.analytic_d2phi) << ',' << join(tags, '|')
        << '\n';
  }
}

inline void write_csv_file(const std::string& path, const std::vector<sweep_row>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error(errc::io_error, "cannot write '" + path + "'");
  write_csv(out, rows);
  if (!out) throw error(errc::io_error, "write failed for '" + path + "'");
}

inline std::vector<sweep_row> read_csv(std::istream& in) {
  std::vector<sweep_row> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != join(csv_columns(), ',')) throw error(errc::io_error, "unexpected CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != csv_columns().size()) throw error(errc::io_error, "bad CSV row: " + line);
    auto num = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc{}) throw error(errc::io_error, "bad number '" + s + "'");
      return v;
    };
    sweep_row r;
    r.n_bar = *num(cells[0]);
    r.fraction = *num(cells[1]);
    r.phi = *num(cells[2]);
    r.phi0 = *num(cells[3]);
    r.cutoff1 = static_cast<std::size_t>(*num(cells[4]));
    r.cutoff2 = static_cast<std::size_t>(*num(cells[5]));
    r.tail_mass = num(cells[6]);
    r.d2phi_m = num(cells[7]);
    r.d2phi_m2 = num(cells[8]);
    r.fisher = num(cells[9]);
    r.qfi = num(cells[10]);
    r.mp_bound_l = num(cells[11]);
    r.mp_bound_nl = num(cells[12]);
    r.analytic_d2phi = num(cells[13]);
    std::stringstream tags(cells[14]);
    std::string t;
    while (std::getline(tags, t, '|')) {
      if (t.find('=') != std::string::npos) {
        r.reasons.push_back(t);
      } else if (!t.empty()) {
        r.flags.push_back(t);
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::ordered_json row_json(const sweep_row& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
  return {{"N_bar", r.n_bar},          {"fraction", r.fraction},       {"phi", r.phi},
          {"phi0", r.phi0},            {"cutoff1", r.cutoff1},         {"cutoff2", r.cutoff2},
          {"tail_mass", opt(r.tail_mass)}, {"d2phi_M", opt(r.d2phi_m)},   {"d2phi_M2", opt(r.d2phi_m2)},
          {"fisher", opt(r.fisher)},   {"qfi", opt(r.qfi)},            {"mp_bound_L", opt(r.mp_bound_l)},
          {"mp_bound_NL", opt(r.mp_bound_nl)}, {"analytic_d2phi", opt(r.analytic_d2phi)},
          {"flags", r.flags},          {"reasons", r.reasons}};
}

inline constexpr int report_schema_version = 1;

/// Report skeleton shared by every command that writes JSON.
inline nlohmann::ordered_json report_header(std::string_view command) {
  return {{"schema_version", report_schema_version},
          {"library", "kerrgyro"},
          {"library_version", std::string(version)},
          {"command", std::string(command)}};
}

inline nlohmann::ordered_json sweep_report(const sweep_config& cfg, const std::vector<sweep_row>& rows) {
  nlohmann::ordered_json j = report_header("sweep");
  j["config"] = to_json(cfg);
  j["seed"] = cfg.seed;
  j["tolerances"] = {{"tail_tol", cfg.tail_tol}, {"fd_step", cfg.fd_step}, {"moment_order", cfg.moment_order}};
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  std::size_t failed = 0;
  for (const auto& r : rows) {
    arr.push_back(row_json(r));
    if (!r.clean()) ++failed;
  }
  j["rows"] = std::move(arr);
  j["rows_with_reasons"] = failed;
  return j;
}

inline void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error(errc::io_error, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw error(errc::io_error, "write failed for '" + path + "'");
}

// ------------------------------------------------------------------ fits

struct power_fit {
  double slope = 0.0;
  double intercept = 0.0;  // of log y at log x = 0
  double residual = 0.0;   // rms of log-space residuals
  std::size_t points = 0;
};

inline power_fit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw error(errc::dimension_mismatch, "x and y differ in length");
  if (x.size() < 3) throw error(errc::invalid_argument, "a scaling fit needs at least 3 points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw error(errc::invalid_argument, "log-log fit needs positive values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw error(errc::invalid_argument, "x values must not all coincide");
  power_fit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(n));
  fit.points = n;
  return fit;
}

/// Log-log fit of one row field against another. Rows with a null in either
/// field are skipped.
inline power_fit fit_scaling(const std::vector<sweep_row>& rows, std::string_view x_field, std::string_view y_field) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    const auto xv = row_field(r, x_field);
    const auto yv = row_field(r, y_field);
    if (!xv || !yv) continue;
    x.push_back(*xv);
    y.push_back(*yv);
  }
  return fit_power_law(x, y);
}

// ------------------------------------------------------------ optimisation

enum class split_objective {
  qfi_exact,              // maximise 4 Var G of the Fock state
  qfi_surrogate,          // maximise the Gaussian surrogate
  simple_m,               // minimise the closed-form M error propagation
  simple_m_exact,         // minimise the Fock-space M error propagation
  multiparam_l,           // minimise (F^-1)_11 of the Fock state
  multiparam_nl,          // minimise (F^-1)_22 of the Fock state
  multiparam_l_surrogate,
  multiparam_nl_surrogate,
};

inline std::string_view to_string(split_objective o) {
  switch (o) {
    case split_objective::qfi_exact: return "qfi-exact";
    case split_objective::qfi_surrogate: return "qfi-surrogate";
    case split_objective::simple_m: return "simple-m";
    case split_objective::simple_m_exact: return "simple-m-exact";
    case split_objective::multiparam_l: return "multiparam-l";
    case split_objective::multiparam_nl: return "multiparam-nl";
    case split_objective::multiparam_l_surrogate: return "multiparam-l-surrogate";
    case split_objective::multiparam_nl_surrogate: return "multiparam-nl-surrogate";
  }
  return "?";
}

inline split_objective parse_objective(std::string_view s) {
  for (auto o : {split_objective::qfi_exact, split_objective::qfi_surrogate, split_objective::simple_m,
                 split_objective::simple_m_exact, split_objective::multiparam_l, split_objective::multiparam_nl,
                 split_objective::multiparam_l_surrogate, split_objective::multiparam_nl_surrogate}) {
    if (s == to_string(o)) return o;
  }
  throw error(errc::config_error, "unknown objective '" + std::string(s) + "'");
}

inline bool maximises(split_objective o) {
  return o == split_objective::qfi_exact || o == split_objective::qfi_surrogate;
}

struct optimize_options {
  double f_lo = 0.01;
  double f_hi = 0.99;
  std::size_t grid = 49;    // coarse points, inclusive of both ends
  double f_tol = 1e-4;      // golden-section bracket width
  double tail_tol = default_tail_tol;
  int moment_order = 6;
  double phi = -1.0;        // working point for simple-m-exact; negative means 1e-3 / N
  unsigned threads = default_thread_count();
};

/// The objective at one split, in its natural sign.
inline double split_objective_value(split_objective o, double n_bar, double f, const optimize_options& opt) {
  switch (o) {
    case split_objective::qfi_surrogate: return squeezed_qfi_surrogate(f, n_bar).qfi;
    case split_objective::multiparam_l_surrogate: return multiparam_surrogate(f, n_bar).bound_l;
    case split_objective::multiparam_nl_surrogate: return multiparam_surrogate(f, n_bar).bound_nl;
    case split_objective::simple_m: return squeezed_simple_model_split(n_bar, f * n_bar).delta2_phi;
    default: break;
  }
  const probe_spec spec = probe_spec::squeezed_split(n_bar, f);
  const two_mode_state probe = build_probe(spec, opt.tail_tol, opt.moment_order);
  switch (o) {
    case split_objective::qfi_exact: return 4.0 * g_moments(probe, opt.tail_tol).var_g;
    case split_objective::multiparam_l: return multiparam_fisher(probe, opt.tail_tol).bound_l;
    case split_objective::multiparam_nl: return multiparam_fisher(probe, opt.tail_tol).bound_nl;
    case split_objective::simple_m_exact: {
      const double phi = opt.phi < 0.0 ? 1e-3 / n_bar : opt.phi;
      estimator_config est;
      est.tail_tol = opt.tail_tol;
      return error_propagation_delta_phi(probe, {phi, -std::numbers::pi / 2}, est).delta2_phi;
    }
    default: break;
  }
  throw error(errc::invalid_argument, "unhandled objective");
}

struct split_optimum {
  double fraction = 0.0;
  double value = 0.0;
  std::vector<double> grid_f;
  std::vector<double> grid_value;  // NaN where the objective failed
  std::size_t evaluations = 0;
};

/// Minimises `score` over [f_lo, f_hi]: coarse scan, then golden-section
/// refinement around the best grid point. NaN scores are skipped. Equal scores
/// resolve to the smaller fraction. The returned values carry `sign` undone.
inline split_optimum minimize_fraction(const std::function<double(double)>& score, const optimize_options& opt,
                                       double sign = 1.0) {
  if (!(opt.f_lo > 0.0 && opt.f_hi < 1.0 && opt.f_lo < opt.f_hi) || opt.grid < 3) {
    throw error(errc::invalid_argument, "need 0 < f_lo < f_hi < 1 and at least 3 grid points");
  }
  split_optimum out;
  out.grid_f.resize(opt.grid);
  out.grid_value.resize(opt.grid);
  for (std::size_t i = 0; i < opt.grid; ++i) {
    out.grid_f[i] = opt.f_lo + (opt.f_hi - opt.f_lo) * static_cast<double>(i) / static_cast<double>(opt.grid - 1);
  }
  std::vector<double> scores(opt.grid);
  parallel_for(opt.grid, [&](std::size_t i) { scores[i] = score(out.grid_f[i]); }, opt.threads);
  out.evaluations = opt.grid;
  std::size_t best = opt.grid;
  for (std::size_t i = 0; i < opt.grid; ++i) {
    out.grid_value[i] = sign * scores[i];
    if (std::isnan(scores[i])) continue;
    if (best == opt.grid || scores[i] < scores[best]) best = i;
  }
  if (best == opt.grid) throw error(errc::non_finite, "objective is non-finite across the whole grid");

  double a = out.grid_f[best == 0 ? 0 : best - 1];
  double b = out.grid_f[best + 1 == opt.grid ? best : best + 1];
  double best_f = out.grid_f[best];
  double best_s = scores[best];
  auto consider = [&](double f, double s) {
    if (std::isnan(s)) return;
    if (s < best_s || (s == best_s && f < best_f)) {
      best_s = s;
      best_f = f;
    }
  };
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double sc = score(c);
  double sd = score(d);
  out.evaluations += 2;
  consider(c, sc);
  consider(d, sd);
  while (b - a > opt.f_tol) {
    // on ties (and when d failed) keep the lower half
    if (sc <= sd || std::isnan(sd)) {
      b = d;
      d = c;
      sd = sc;
      c = b - invphi * (b - a);
      sc = score(c);
      consider(c, sc);
    } else {
      a = c;
      c = d;
      sc = sd;
      d = a + invphi * (b - a);
      sd = score(d);
      consider(d, sd);
    }
    ++out.evaluations;
  }
  out.fraction = best_f;
  out.value = sign * best_s;
  return out;
}

/// Best squeezed-port fraction f = N2 / N for a coherent (x) squeezed probe.
inline split_optimum optimize_split(double n_bar, split_objective objective, const optimize_options& opt = {}) {
  if (!(n_bar >= 1.0)) throw error(errc::invalid_argument, "N must be >= 1");
  const double sign = maximises(objective) ? -1.0 : 1.0;
  auto score = [&](double f) {
    try {
      const double v = split_objective_value(objective, n_bar, f, opt);
      return std::isfinite(v) ? sign * v : std::numeric_limits<double>::quiet_NaN();
    } catch (const error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  return minimize_fraction(score, opt, sign);
}

}  // namespace kerrgyro
