// Acceptance run: ten checks at fixed tolerances, one PASS/FAIL line each,
// and a JSON report with the measured numbers behind every verdict.
//
//   acceptance [--json report.json] [--only 1,4,7]
//
// Exit status is 0 only when every selected check passes.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kerrgyro/kerrgyro.hpp"
#include "test_support.hpp"

namespace {

using namespace kerrgyro;
using json = nlohmann::ordered_json;
using testing_support::rel_err;

constexpr double half_pi = std::numbers::pi / 2;

struct verdict {
  bool pass = true;
  std::vector<std::string> failures;
  json details = json::object();
  json discrepancies = json::array();

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures.push_back(what);
    }
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

bool is_real_probe(const probe_spec& spec) {
  if (const auto* c = std::get_if<coherent_pair>(&spec.variant())) {
    return c->alpha1.imag() == 0.0 && c->alpha2.imag() == 0.0;
  }
  return true;
}

std::string describe(const probe_spec& spec) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, coherent_pair>) {
          return "coherent(" + fmt(p.alpha1.real()) + "," + fmt(p.alpha2.real()) + ")";
        } else if constexpr (std::is_same_v<T, coherent_squeezed>) {
          return "coherent-squeezed(" + fmt(p.alpha) + "," + fmt(p.r) + ")";
        } else {
          return "number(" + std::to_string(p.n1) + "," + std::to_string(p.n2) + ")";
        }
      },
      spec.variant());
}

// 1 -------------------------------------------------------------------------
verdict unitarity() {
  verdict v;
  double worst_norm = 0.0;
  double worst_marginal = 0.0;
  std::size_t passes = 0;
  for (const auto& spec : testing_support::probe_matrix()) {
    const auto psi = build_probe(spec, 1e-12);
    for (auto ord : {kerr_ordering::square, kerr_ordering::normal}) {
      for (double phi : {0.0, 0.01, 0.1}) {
        for (double phi0 : {0.0, -half_pi, 0.4}) {
          const auto st = gyro_pass(psi, {phi, phi0, ord});
          worst_norm = std::max(worst_norm, std::abs(st.total() - 1.0));
          const auto before = psi.total_number_marginal();
          const auto after = st.total_number_marginal();
          for (std::size_t n = 0; n < std::max(before.size(), after.size()); ++n) {
            const double b = n < before.size() ? before[n] : 0.0;
            const double a = n < after.size() ? after[n] : 0.0;
            worst_marginal = std::max(worst_marginal, std::abs(a - b));
          }
          ++passes;
        }
      }
    }
  }
  v.details = {{"passes", passes}, {"max_abs_sum_p_minus_1", worst_norm}, {"max_marginal_change", worst_marginal}};
  v.require(worst_norm <= 1e-10, "sum p off by " + fmt(worst_norm));
  v.require(worst_marginal <= 1e-12, "photon-number marginal changed by " + fmt(worst_marginal));
  return v;
}

// 2 -------------------------------------------------------------------------
verdict fisher_equals_qfi() {
  verdict v;
  double worst = 0.0;
  std::string worst_probe;
  json rows = json::array();
  estimator_config cfg;
  cfg.tail_tol = 1e-10;
  for (const auto& spec : testing_support::probe_matrix()) {
    if (!is_real_probe(spec)) continue;
    const auto psi = build_probe(spec, 1e-11);
    for (double phi : {0.0, 0.01}) {
      try {
        const auto f = fisher_information(psi, {phi, -half_pi, kerr_ordering::square}, cfg);
        const double dev = f.qfi > 0.0 ? std::abs(f.fisher / f.qfi - 1.0) : std::abs(f.fisher);
        rows.push_back({{"probe", describe(spec)}, {"phi", phi}, {"F", f.fisher}, {"F_Q", f.qfi}});
        if (dev > worst) {
          worst = dev;
          worst_probe = describe(spec) + " phi=" + fmt(phi);
        }
      } catch (const error& e) {
        v.require(false, describe(spec) + ": " + e.what());
      }
    }
  }
  v.details = {{"phi0", -half_pi}, {"max_rel_dev", worst}, {"worst_case", worst_probe}, {"points", rows}};
  v.require(worst <= 1e-3, "F/F_Q deviates by " + fmt(worst) + " at " + worst_probe);
  return v;
}

// 3 -------------------------------------------------------------------------
verdict coherent_moments_check() {
  verdict v;
  double worst = 0.0;
  for (double n : {4.0, 8.0, 16.0}) {
    const double a = std::sqrt(n);
    const auto psi = build_probe(coherent_pair{a, 0.0}, 1e-14);
    for (double phi : {0.0, 0.005, 0.02}) {
      for (double phi0 : {0.0, -half_pi}) {
        const auto m = m_statistics(gyro_pass(psi, {phi, phi0, kerr_ordering::square}, 1e-13));
        const auto cf = coherent_moments_input(a, 0.0, phi, phi0);
        // relative error, measured against 1 where the closed form vanishes
        worst = std::max(worst, std::abs(m.mean_m - cf.mean_m) / std::max(std::abs(cf.mean_m), 1.0));
        worst = std::max(worst, std::abs(m.mean_m2 - cf.mean_m2) / std::max(std::abs(cf.mean_m2), 1.0));
      }
    }
  }
  v.details = {{"max_rel_err", worst}};
  v.require(worst <= 1e-6, "moments off by " + fmt(worst));
  return v;
}

// 4 -------------------------------------------------------------------------
double coherent_delta2(double n, kerr_ordering ord) {
  const auto psi = build_probe(coherent_pair{std::sqrt(n), 0.0}, 1e-12);
  estimator_config cfg;
  cfg.tail_tol = 1e-11;
  return error_propagation_delta_phi(psi, {1e-3 / n, -half_pi, ord}, cfg).delta2_phi;
}

verdict coherent_cubic_law() {
  verdict v;
  const double n16 = 16.0;
  const double d16 = coherent_delta2(n16, kerr_ordering::square);
  const double ratio = d16 * 4.0 * n16 * n16 * n16;
  v.require(std::abs(ratio - 1.0) <= 0.05,
            "Delta^2 phi * 4N^3 = " + fmt(ratio) + " at N = 16 (outside 5%)");

  json qfi_rows = json::array();
  double qfi_worst = 0.0;
  for (double n : {1.0, 2.0, 4.0, 6.0, 9.0}) {
    const double a = std::sqrt(n);
    const auto psi = build_probe(coherent_pair{a, 0.0}, 1e-15);
    const double lib = 4.0 * g_moments(psi, 1e-14).var_g;
    const int k = 60;
    const oracle::space s(k);
    const oracle::vec vec = s.product(oracle::coherent(a, k), oracle::number(0));
    const double brute = 4.0 * oracle::variance(oracle::generator_nonlinear(s, true), vec);
    const double closed = 4.0 * (n * n * n + 3.0 * n * n + n);
    qfi_worst = std::max({qfi_worst, rel_err(lib, brute), rel_err(closed, brute)});
    qfi_rows.push_back({{"N_bar", n}, {"library", lib}, {"oracle", brute}, {"closed_form", closed}});
  }
  v.require(qfi_worst <= 1e-8, "F_Q disagrees with the oracle by " + fmt(qfi_worst));

  std::vector<double> ns{4.0, 8.0, 16.0, 32.0}, d2, d2_normal;
  for (double n : ns) {
    d2.push_back(coherent_delta2(n, kerr_ordering::square));
    d2_normal.push_back(coherent_delta2(n, kerr_ordering::normal));
  }
  const power_fit fit = fit_power_law(ns, d2);
  const power_fit fit_normal = fit_power_law(ns, d2_normal);
  v.require(std::abs(fit.slope + 3.0) <= 0.05, "log-log slope " + fmt(fit.slope) + " (want -3 +- 0.05)");

  std::vector<double> exact_limit;
  for (double n : ns) exact_limit.push_back(coherent_delta2phi_exact_limit(n));
  v.details = {{"phi", "1e-3/N_bar"},
               {"phi0", -half_pi},
               {"delta2_phi_N16", d16},
               {"ratio_to_1_over_4N3_N16", ratio},
               {"exact_limit_N16", coherent_delta2phi_exact_limit(n16)},
               {"qfi", qfi_rows},
               {"qfi_max_rel_err", qfi_worst},
               {"N_bar", ns},
               {"delta2_phi", d2},
               {"slope", fit.slope},
               {"exact_limit_1_over_4N_Nplus1_sq", exact_limit},
               {"normal_ordering", {{"delta2_phi", d2_normal},
                                    {"slope", fit_normal.slope},
                                    {"ratio_to_1_over_4N3_N16", d2_normal[2] * 4.0 * n16 * n16 * n16}}}};
  if (!v.pass) {
    v.discrepancies.push_back(
        {{"check", 4},
         {"measured", {{"ratio_N16", ratio}, {"slope", fit.slope}}},
         {"note",
          "with G = N+^2 - N-^2 the phi -> 0 limit is 1/(4N(N+1)^2); the 1/(4N^3) law holds for the "
          "normally ordered Kerr term, see normal_ordering"}});
  }
  return v;
}

// 5 -------------------------------------------------------------------------
verdict number_state_formula() {
  verdict v;
  double worst = 0.0;
  std::size_t count = 0;
  const std::vector<std::pair<double, double>> points{{0.01, -half_pi}, {0.05, 0.3}, {0.002, -1.0}};
  for (unsigned n = 1; n <= 8; ++n) {
    for (unsigned b = 0; b <= n; ++b) {
      const unsigned a = n - b;
      if (a == b) continue;
      const auto psi = build_probe(number_pair{a, b});
      for (auto ord : {kerr_ordering::square, kerr_ordering::normal}) {
        // a lone photon picks up no self-phase under the normal ordering
        if (ord == kerr_ordering::normal && n == 1) continue;
        for (const auto& [phi, phi0] : points) {
          try {
            const double num = error_propagation_delta_phi(psi, {phi, phi0, ord}).delta2_phi;
            const double formula = *number_state_model(a, b, phi, phi0, ord).delta2_phi;
            worst = std::max(worst, rel_err(num, formula));
            ++count;
          } catch (const error& e) {
            v.require(false, "(" + std::to_string(a) + "," + std::to_string(b) + "): " + e.what());
          }
        }
      }
    }
  }
  v.details = {{"evaluations", count},
               {"max_rel_err", worst},
               {"formula", "(2 n1 n2 + n1 + n2) / (4 (N - 1 + d)^2 (n1 - n2)^2), d = 1 square, 0 normal"}};
  v.require(worst <= 1e-9, "number-state Delta^2 phi off by " + fmt(worst));
  return v;
}

// 6 -------------------------------------------------------------------------
verdict twin_fock() {
  verdict v;
  std::vector<double> ratios;
  for (unsigned half : {2u, 4u, 8u}) {
    const double n = 2.0 * half;
    const auto psi = build_probe(number_pair{half, half});
    const double d2 = m2_error_propagation(psi, {1e-3 / n, 0.0, kerr_ordering::square}).delta2_phi;
    ratios.push_back(d2 * 2.0 * std::pow(n, 4));
  }
  const double at16 = ratios.back();
  v.require(at16 >= 0.8 && at16 <= 1.2, "Delta^2 phi * 2N^4 = " + fmt(at16) + " at N = 16");
  bool monotone = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    monotone = monotone && std::abs(ratios[i] - 1.0) < std::abs(ratios[i - 1] - 1.0);
  }
  v.require(monotone, "approach to 1/(2N^4) is not monotone");

  double qfi_worst = 0.0;
  std::vector<std::pair<unsigned, unsigned>> pairs{{2, 2}, {4, 4}, {8, 8}};
  for (unsigned n = 1; n <= 8; ++n) {
    for (unsigned b = 0; b <= n; ++b) pairs.emplace_back(n - b, b);
  }
  for (const auto& [a, b] : pairs) {
    const double qfi = 4.0 * g_moments(build_probe(number_pair{a, b})).var_g;
    const double s = a + b;
    const double formula = 4.0 * s * s * (2.0 * a * b + a + b);
    qfi_worst = std::max(qfi_worst, std::abs(qfi - formula) / std::max(formula, 1.0));
  }
  v.require(qfi_worst <= 1e-12, "twin/number F_Q formula off by " + fmt(qfi_worst));
  v.details = {{"phi", "1e-3/N_bar"}, {"phi0", 0.0}, {"N_bar", {4, 8, 16}},
               {"delta2_phi_times_2N4", ratios}, {"qfi_pairs", pairs.size()}, {"qfi_max_rel_err", qfi_worst}};
  return v;
}

// 7 -------------------------------------------------------------------------
verdict squeezed_simple() {
  verdict v;
  const double n = 64.0;
  const double n2 = squeezed_simple_optimum_n2(n);
  estimator_config cfg;
  const auto psi = build_probe(probe_spec::squeezed_split(n, n2 / n));
  const double fock = error_propagation_delta_phi(psi, {1e-3 / n, -half_pi, kerr_ordering::square}, cfg).delta2_phi;
  const double model = squeezed_simple_model_split(n, n2).delta2_phi;
  const double dev = std::abs(fock / model - 1.0);
  v.require(dev <= 0.10, "model vs Fock differ by " + fmt(100 * dev) + "%");

  optimize_options opt;
  opt.f_lo = 0.5 / n;
  opt.f_hi = 16.0 / n;
  opt.grid = 9;
  opt.f_tol = 2e-4;
  const split_optimum best = optimize_split(n, split_objective::simple_m_exact, opt);
  const double n2_star = best.fraction * n;
  v.require(std::abs(n2_star / n2 - 1.0) <= 0.30,
            "optimised N2 = " + fmt(n2_star) + " vs sqrt(N)/2 = " + fmt(n2) + " (outside 30%)");
  const split_optimum model_best = optimize_split(n, split_objective::simple_m, opt);
  v.details = {{"N_bar", n},
               {"N2", n2},
               {"cutoffs", {psi.cutoff1(), psi.cutoff2()}},
               {"fock_delta2_phi", fock},
               {"model_delta2_phi", model},
               {"rel_dev", dev},
               {"optimised_N2_fock", n2_star},
               {"optimised_delta2_phi_fock", best.value},
               {"optimised_N2_model", model_best.fraction * n},
               {"grid_f", best.grid_f},
               {"grid_delta2_phi", best.grid_value},
               {"evaluations", best.evaluations}};
  if (n2_star > 0.0 && std::abs(n2_star / n2 - 1.0) > 0.30) {
    v.discrepancies.push_back(
        {{"check", 7},
         {"measured", {{"optimised_N2", n2_star}, {"sqrt_N_over_2", n2}}},
         {"note", "exact finite-N optimum of the M estimator sits below the large-N value sqrt(N)/2; the "
                  "resolution curve is shallow around it"}});
  }
  return v;
}

// 8 -------------------------------------------------------------------------
verdict qfi_optimum_split() {
  verdict v;
  json exact = json::object();
  std::vector<double> peak_over_n4;
  for (double n : {8.0, 16.0}) {
    std::vector<double> fs, qs;
    for (int i = 1; i <= 49; ++i) {
      const double f = 0.02 * i;
      fs.push_back(f);
      qs.push_back(4.0 * g_moments(build_probe(probe_spec::squeezed_split(n, f))).var_g);
    }
    int turns = 0;
    for (std::size_t i = 1; i + 1 < qs.size(); ++i) {
      if ((qs[i] - qs[i - 1]) * (qs[i + 1] - qs[i]) < 0.0) ++turns;
    }
    optimize_options opt;
    opt.f_lo = 0.02;
    opt.f_hi = 0.98;
    const split_optimum best = optimize_split(n, split_objective::qfi_exact, opt);
    const double c = best.value / std::pow(n, 4);
    peak_over_n4.push_back(c);
    v.require(turns == 1, "F_Q(f) at N = " + fmt(n) + " has " + std::to_string(turns) + " turning points");
    v.require(best.fraction >= 0.55 && best.fraction <= 0.85,
              "argmax f* = " + fmt(best.fraction) + " at N = " + fmt(n));
    exact[fmt(n)] = {{"f", fs}, {"qfi", qs}, {"f_star", best.fraction}, {"qfi_star_over_N4", c}, {"turning_points", turns}};
  }
  const bool increasing = peak_over_n4[1] > peak_over_n4[0];
  v.require(increasing, "F_Q(f*)/N^4 falls from " + fmt(peak_over_n4[0]) + " to " + fmt(peak_over_n4[1]));

  optimize_options sopt;
  sopt.f_tol = 1e-6;
  const double big = 1e3;
  const split_optimum sur = optimize_split(big, split_objective::qfi_surrogate, sopt);
  const double sur_c = sur.value / std::pow(big, 4);
  const bool sur_ok = std::abs(sur.fraction / 0.71 - 1.0) <= 0.10 && std::abs(sur_c / 30.0 - 1.0) <= 0.10;
  v.require(sur_ok, "surrogate f* = " + fmt(sur.fraction) + ", constant = " + fmt(sur_c));

  // informational: the same scan under the normally ordered Kerr term
  json normal = json::object();
  for (double n : {8.0, 16.0}) {
    double best = 0.0, best_f = 0.0;
    for (int i = 1; i <= 49; ++i) {
      const double f = 0.02 * i;
      const double q = 4.0 * g_moments(build_probe(probe_spec::squeezed_split(n, f)), default_tail_tol,
                                       kerr_ordering::normal).var_g;
      if (q > best) {
        best = q;
        best_f = f;
      }
    }
    normal[fmt(n)] = {{"f_star_grid", best_f}, {"qfi_star_over_N4", best / std::pow(n, 4)}};
  }
  v.details = {{"exact", exact},
               {"surrogate", {{"f_star", sur.fraction}, {"qfi_star_over_N4", sur_c}}},
               {"normal_ordering", normal}};
  if (!increasing) {
    v.discrepancies.push_back(
        {{"check", 8},
         {"measured", {{"N8", peak_over_n4[0]}, {"N16", peak_over_n4[1]}, {"surrogate_limit", sur_c}}},
         {"note", "exact F_Q(f*)/N^4 approaches the surrogate constant from above, so it decreases with N"}});
  }
  return v;
}

// 9 -------------------------------------------------------------------------
verdict noise_models() {
  verdict v;
  double reduction = 0.0;
  for (double a : {1.0, 2.0, std::sqrt(8.0), 5.0}) {
    for (double r : {0.0, 0.3, 1.0, 1.7}) {
      const double want = a * a * std::exp(-2.0 * r) + std::sinh(r) * std::sinh(r);
      reduction = std::max(reduction, rel_err(noisy_m_variance(a, r, {}), want));
    }
  }
  for (double n : {10.0, 1e3, 1e6}) {
    reduction = std::max(reduction, rel_err(noisy_delta2phi(n, noisy_probe::coherent, {}), 1.0 / (4.0 * n * n * n)));
    reduction = std::max(reduction, rel_err(noisy_delta2phi(n, noisy_probe::coherent_squeezed_optimum, {}),
                                            squeezed_simple_asymptote(n)));
  }
  v.require(reduction <= 8 * std::numeric_limits<double>::epsilon(), "noiseless reduction off by " + fmt(reduction));

  const noise_params p{0.9, 0.1, 0.01};
  const double alpha = std::sqrt(8.0), r = 1.0;
  const double analytic = noisy_m_variance(alpha, r, p);
  const mc_estimate mc = mc_noise_oracle(alpha, r, p, 100000, 1);
  const double z = (mc.mean - analytic) / mc.std_error;
  v.require(std::abs(z) <= 3.0, "Monte Carlo differs by " + fmt(z) + " standard errors");

  std::size_t violations = 0, comparisons = 0;
  const std::vector<double> etas{0.6, 0.7, 0.8, 0.9, 1.0};
  const std::vector<double> thermals{0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> phases{0.0, 0.025, 0.05, 0.075, 0.1};
  for (auto kind : {noisy_probe::coherent, noisy_probe::coherent_squeezed_optimum}) {
    for (double n : {100.0, 1e4}) {
      auto d = [&](std::size_t i, std::size_t j, std::size_t k) {
        return noisy_delta2phi(n, kind, {etas[i], thermals[j], phases[k]});
      };
      for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
          for (std::size_t k = 0; k < 5; ++k) {
            const double here = d(i, j, k);
            auto compare = [&](bool ok) {
              ++comparisons;
              if (!ok) ++violations;
            };
            if (i + 1 < 5) compare(d(i + 1, j, k) <= here);  // better detection never hurts
            if (j + 1 < 5) compare(d(i, j + 1, k) >= here);
            if (k + 1 < 5) compare(d(i, j, k + 1) >= here);
          }
        }
      }
    }
  }
  v.require(violations == 0, std::to_string(violations) + " monotonicity violations");
  v.details = {{"max_reduction_rel_err", reduction},
               {"monte_carlo", {{"alpha2", 8.0}, {"r", r}, {"eta", p.eta}, {"N_t", p.thermal},
                                {"sigma2", p.phase_var}, {"samples", mc.samples}, {"seed", 1},
                                {"mean", mc.mean}, {"std_error", mc.std_error}, {"analytic", analytic},
                                {"z", z}, {"uncorrected_form", noisy_m_variance_uncorrected(alpha, r, p)}}},
               {"monotonicity", {{"comparisons", comparisons}, {"violations", violations}}}};
  return v;
}

// 10 ------------------------------------------------------------------------
verdict multiparam() {
  verdict v;
  const double n = 16.0;
  const auto mp = multiparam_fisher(build_probe(coherent_pair{4.0, 0.0}, 1e-12), 1e-11);
  const double l_ratio = mp.bound_l / 0.25;
  const double nl_ratio = mp.bound_nl / (0.25 / (n * n));
  v.require(std::abs(l_ratio - 1.0) <= 0.25, "(F^-1)_11 = " + fmt(mp.bound_l) + " (want 1/4 +- 25%)");
  v.require(std::abs(nl_ratio - 1.0) <= 0.25, "(F^-1)_22 * N^2 = " + fmt(mp.bound_nl * n * n) + " (want 0.25 +- 25%)");
  v.require(mp.bound_l > mp.single_l && mp.bound_nl > mp.single_nl, "joint bounds do not exceed single-parameter bounds");

  double sym = 0.0, psd = 0.0, oracle_dev = 0.0;
  std::size_t probes = 0;
  for (const auto& spec : testing_support::probe_matrix()) {
    const auto psi = build_probe(spec, 1e-8);
    const auto g = generator_covariances(psi);
    const double f11 = 4 * g.var_l(), f22 = 4 * g.var_nl(), f12 = 4 * g.cov();
    const int k = static_cast<int>(testing_support::top_sector(psi));
    const oracle::space s(k);
    const auto vec = testing_support::to_oracle(s, psi);
    const auto gl = oracle::generator_linear(s);
    const auto gn = oracle::generator_nonlinear(s, true);
    const double c12 = 4 * oracle::covariance(gl, gn, vec);
    const double c21 = 4 * oracle::covariance(gn, gl, vec);
    sym = std::max(sym, std::abs(c12 - c21) / std::max(1.0, std::abs(c12)));
    oracle_dev = std::max(oracle_dev, std::abs(f12 - c12) / std::max(1.0, std::abs(c12)));
    const double tr = f11 + f22;
    const double det = f11 * f22 - f12 * f12;
    const double lmin = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
    psd = std::min(psd, lmin / std::max(1.0, tr));
    ++probes;
  }
  v.require(sym <= 1e-10, "Fisher matrix asymmetric by " + fmt(sym));
  v.require(oracle_dev <= 1e-9, "off-diagonal differs from the oracle by " + fmt(oracle_dev));
  v.require(psd >= -1e-12, "Fisher matrix has a negative eigenvalue " + fmt(psd));

  // informational: surrogate optima for the coherent (x) squeezed probe
  optimize_options opt;
  opt.f_tol = 1e-6;
  const double big = 1e3;
  const auto l = optimize_split(big, split_objective::multiparam_l_surrogate, opt);
  const auto nl = optimize_split(big, split_objective::multiparam_nl_surrogate, opt);
  v.details = {{"coherent_N16", {{"matrix", mp.matrix}, {"bound_L", mp.bound_l}, {"bound_NL", mp.bound_nl},
                                 {"bound_NL_times_N2", mp.bound_nl * n * n}, {"single_L", mp.single_l},
                                 {"single_NL", mp.single_nl}}},
               {"probe_matrix", {{"probes", probes}, {"max_asymmetry", sym}, {"max_oracle_dev", oracle_dev},
                                 {"min_scaled_eigenvalue", psd}}},
               {"squeezed_surrogate", {{"f_star_L", l.fraction}, {"bound_L_times_N2", l.value * big * big},
                                       {"f_star_NL", nl.fraction}, {"bound_NL_times_N4", nl.value * std::pow(big, 4)}}}};
  v.discrepancies.push_back(
      {{"check", 10},
       {"measured", v.details["squeezed_surrogate"]},
       {"expected", {{"f_star_L", 0.6}, {"bound_L_times_N2", 0.3}, {"f_star_NL", 0.8}, {"bound_NL_times_N4", 0.04}}},
       {"note", "informational; the Gaussian surrogate does not reproduce the quoted coherent-squeezed optima"}});
  return v;
}

struct check {
  int id;
  const char* name;
  double time_limit;  // seconds, 0 when none
  std::function<verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  CLI::App app{"kerrgyro acceptance checks"};
  std::string json_path;
  std::vector<int> only;
  app.add_option("--json", json_path, "write the JSON report here");
  app.add_option("--only", only, "run only these check numbers")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<check> checks{
      {1, "unitarity and photon-number conservation", 30.0, unitarity},
      {2, "F = F_Q for real probes", 120.0, fisher_equals_qfi},
      {3, "coherent closed-form moments", 0.0, coherent_moments_check},
      {4, "coherent cubic law", 0.0, coherent_cubic_law},
      {5, "number-state error propagation", 0.0, number_state_formula},
      {6, "twin-Fock M^2 estimator", 0.0, twin_fock},
      {7, "squeezed simple estimator", 300.0, squeezed_simple},
      {8, "QFI optimum split", 0.0, qfi_optimum_split},
      {9, "noise model", 0.0, noise_models},
      {10, "multi-parameter bounds", 0.0, multiparam},
  };

  json report = report_header("acceptance");
  report["seed"] = 1;
  report["tolerances"] = {{"tail_tol", default_tail_tol}, {"fd_step", estimator_config{}.fd_step},
                          {"halving_tol", estimator_config{}.halving_tol}};
  report["ordering"] = "square";
  json results = json::array();
  json discrepancies = json::array();
  int failed = 0;
  for (const auto& c : checks) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0.0) v.require(secs < c.time_limit, "runtime " + fmt(secs) + " s over " + fmt(c.time_limit) + " s");
    if (!v.pass) ++failed;
    std::printf("[%s] %2d %-42s %8.2f s%s%s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                v.failures.empty() ? "" : "  ", v.failures.empty() ? "" : v.failures.front().c_str());
    for (std::size_t i = 1; i < v.failures.size(); ++i) std::printf("%58s%s\n", "", v.failures[i].c_str());
    results.push_back({{"id", c.id}, {"name", c.name}, {"verdict", v.pass ? "pass" : "fail"},
                       {"seconds", secs}, {"failures", v.failures}, {"details", v.details}});
    for (auto& d : v.discrepancies) discrepancies.push_back(d);
  }
  report["checks"] = results;
  report["discrepancies"] = discrepancies;
  report["passed"] = static_cast<int>(results.size()) - failed;
  report["failed"] = failed;
  std::printf("%d of %zu checks passed\n", static_cast<int>(results.size()) - failed, results.size());
  if (!json_path.empty()) {
    try {
      write_json_file(json_path, report);
    } catch (const error& e) {
      std::fprintf(stderr, "%s\n", e.what());
      return 2;
    }
  }
  return failed == 0 ? 0 : 1;
}
