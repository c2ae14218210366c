#pragma once

// Resolution estimates from the channel output: moment error propagation for
// M and M^2, classical and quantum Fisher information, and the 2x2 quantum
// Fisher matrix for simultaneous linear and nonlinear phases.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "kerrgyro/compensated_sum.hpp"
#include "kerrgyro/error.hpp"
#include "kerrgyro/fock_state.hpp"
#include "kerrgyro/gyro_channel.hpp"

namespace kerrgyro {

struct estimator_config {
  double fd_step = 1e-5;        // base step for d/dphi, radians
  double prob_floor = 1e-14;    // below this an outcome is treated as a zero crossing
  double tail_tol = default_tail_tol;
  double halving_tol = 1e-3;    // allowed relative change of F when the step is halved
  double flat_tol = 1e-8;       // relative slope below which the response counts as flat
};

struct propagation_result {
  double delta2_phi = 0.0;
  double variance = 0.0;  // Var(O) at the working point
  double slope = 0.0;     // d<O>/dphi
  double step = 0.0;
};

struct fisher_report {
  double fisher = 0.0;
  double qfi = 0.0;
  double bound_fisher = std::numeric_limits<double>::infinity();  // 1/F
  double bound_qfi = std::numeric_limits<double>::infinity();     // 1/F_Q
  double step = 0.0;
  double halving_change = 0.0;  // |F(h) - F(h/2)| / F(h/2)
};

struct multiparam_report {
  std::array<double, 4> matrix{};  // row-major, (linear, nonlinear)
  double bound_l = 0.0;            // (F^-1)_11
  double bound_nl = 0.0;           // (F^-1)_22
  double single_l = 0.0;           // 1/(4 Var G_L)
  double single_nl = 0.0;          // 1/(4 Var G_NL)
};

namespace detail {

// Photon-number scale of the occupied part of a loop state; sets how fast
// the phases wind with phi.
inline double photon_scale(const two_mode_state& state) {
  const double mean = expectation(state, [](std::size_t a, std::size_t b) { return static_cast<double>(a + b); });
  const double second =
      expectation(state, [](std::size_t a, std::size_t b) { return std::pow(static_cast<double>(a + b), 2); });
  const double sd = std::sqrt(std::max(0.0, second - mean * mean));
  return mean + 6.0 * sd + 1.0;
}

// fd_step, reduced so that phi * N^2 moves by at most ~0.1 rad over one step.
inline double effective_step(const estimator_config& cfg, const two_mode_state& loop) {
  if (!(cfg.fd_step > 0.0)) throw error(errc::invalid_argument, "fdStep must be positive");
  const double n = photon_scale(loop);
  return std::min(cfg.fd_step, 0.1 / (n * n));
}

struct derivative {
  double value = 0.0;  // Richardson combination of the two central differences
  double coarse = 0.0;
  double fine = 0.0;
};

inline propagation_result propagate_moment(const two_mode_state& probe, const channel_params& params,
                                           const estimator_config& cfg, int power) {
  const two_mode_state loop = apply_beam_splitter(probe, splitter_sense::forward, cfg.tail_tol);
  const double h = effective_step(cfg, loop);
  // phi, phi +- h, phi +- h/2 in one pass so the splitter sectors are built once
  std::array<channel_params, 5> settings;
  settings.fill(params);
  settings[1].phi += h;
  settings[2].phi -= h;
  settings[3].phi += 0.5 * h;
  settings[4].phi -= 0.5 * h;
  const std::vector<two_mode_state> outs =
      propagate_from_loop(loop, std::span<const channel_params>(settings), cfg.tail_tol);
  // O = M^power
  auto mean_of = [&](std::size_t k) { return m_moment(statistics_of(outs[k], settings[k]), power); };
  const photon_statistics here = statistics_of(outs[0], params);
  const double mean = m_moment(here, power);
  const double second = m_moment(here, 2 * power);
  const double variance = std::max(0.0, second - mean * mean);
  const double coarse = (mean_of(1) - mean_of(2)) / (2.0 * h);
  const double fine = (mean_of(3) - mean_of(4)) / h;
  const derivative d{(4.0 * fine - coarse) / 3.0, coarse, fine};

  const double n = photon_scale(loop);
  const double scale = std::pow(n, power + 1);
  if (!(std::abs(d.value) > cfg.flat_tol * scale)) {
    throw error(errc::flat_response, "d<M^" + std::to_string(power) + ">/dphi = " +
                                         std::to_string(d.value) + " is indistinguishable from zero");
  }
  return {variance / (d.value * d.value), variance, d.value, h};
}

}  // namespace detail

/// Var(M) / (d<M>/dphi)^2 with M = n1 - n2.
inline propagation_result error_propagation_delta_phi(const two_mode_state& probe, const channel_params& params,
                                                      const estimator_config& cfg = {}) {
  return detail::propagate_moment(probe, params, cfg, 1);
}

/// Var(M^2) / (d<M^2>/dphi)^2.
inline propagation_result m2_error_propagation(const two_mode_state& probe, const channel_params& params,
                                               const estimator_config& cfg = {}) {
  return detail::propagate_moment(probe, params, cfg, 2);
}

/// Both forms of the classical Fisher information over the outcomes with
/// p > p_min: sum 4 (d sqrt p)^2 and sum (dp)^2 / p.
struct fisher_form_comparison {
  double amplitude_form = 0.0;
  double ratio_form = 0.0;
  std::size_t outcomes = 0;
};

namespace detail {

struct output_derivatives {
  two_mode_state here;
  std::vector<two_mode_state> shifted;  // phi + h, phi - h, phi + h/2, phi - h/2
  std::vector<complex> coarse;          // d psi / dphi, step h
  std::vector<complex> fine;            // step h/2
  double step = 0.0;
};

inline output_derivatives output_amplitude_derivatives(const two_mode_state& probe, const channel_params& params,
                                                       const estimator_config& cfg) {
  const two_mode_state loop = apply_beam_splitter(probe, splitter_sense::forward, cfg.tail_tol);
  const double h = effective_step(cfg, loop);
  std::array<channel_params, 5> settings;
  settings.fill(params);
  settings[1].phi += h;
  settings[2].phi -= h;
  settings[3].phi += 0.5 * h;
  settings[4].phi -= 0.5 * h;
  std::vector<two_mode_state> outs =
      propagate_from_loop(loop, std::span<const channel_params>(settings), cfg.tail_tol);
  const std::size_t size = outs[0].amplitudes().size();
  std::vector<complex> coarse(size);
  std::vector<complex> fine(size);
  for (std::size_t i = 0; i < size; ++i) {
    coarse[i] = (outs[1].amplitudes()[i] - outs[2].amplitudes()[i]) / (2.0 * h);
    fine[i] = (outs[3].amplitudes()[i] - outs[4].amplitudes()[i]) / h;
  }
  two_mode_state here = std::move(outs[0]);
  outs.erase(outs.begin());
  return {std::move(here), std::move(outs), std::move(coarse), std::move(fine), h};
}

// 4 (d sqrt p)^2 = 4 Re(conj(psi) dpsi)^2 / p. Where p vanishes the one-sided
// limit 4 |dpsi|^2 is used instead.
inline double fisher_sum(const two_mode_state& here, const std::vector<complex>& dpsi, double floor) {
  compensated_sum<double> s;
  const auto amps = here.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double p = std::norm(amps[i]);
    if (p > floor) {
      const double proj = (std::conj(amps[i]) * dpsi[i]).real();
      s += 4.0 * proj * proj / p;
    } else {
      s += 4.0 * std::norm(dpsi[i]);
    }
  }
  return s.value();
}

}  // namespace detail

inline fisher_report fisher_information(const two_mode_state& probe, const channel_params& params,
                                        const estimator_config& cfg = {}) {
  const detail::output_derivatives d = detail::output_amplitude_derivatives(probe, params, cfg);
  std::vector<complex> rich(d.coarse.size());
  for (std::size_t i = 0; i < rich.size(); ++i) rich[i] = (4.0 * d.fine[i] - d.coarse[i]) / 3.0;

  const double f_coarse = detail::fisher_sum(d.here, d.coarse, cfg.prob_floor);
  const double f_fine = detail::fisher_sum(d.here, d.fine, cfg.prob_floor);
  const double f = detail::fisher_sum(d.here, rich, cfg.prob_floor);
  const double ref = std::max(std::abs(f_fine), 1e-300);
  const double change = (f_coarse == 0.0 && f_fine == 0.0) ? 0.0 : std::abs(f_coarse - f_fine) / ref;
  if (change > cfg.halving_tol) {
    throw error(errc::truncation_dominated,
                "Fisher information changes by " + std::to_string(change) + " when the step is halved");
  }
  const double qfi = 4.0 * g_moments(probe, cfg.tail_tol, params.ordering).var_g;
  fisher_report r;
  r.fisher = f;
  r.qfi = qfi;
  r.bound_fisher = f > 0.0 ? 1.0 / f : std::numeric_limits<double>::infinity();
  r.bound_qfi = qfi > 0.0 ? 1.0 / qfi : std::numeric_limits<double>::infinity();
  r.step = d.step;
  r.halving_change = change;
  return r;
}

inline fisher_form_comparison compare_fisher_forms(const two_mode_state& probe, const channel_params& params,
                                                   double p_min, const estimator_config& cfg = {}) {
  const detail::output_derivatives d = detail::output_amplitude_derivatives(probe, params, cfg);
  const double h = d.step;
  auto probs_of = [&](std::size_t k, double shift) {
    channel_params p = params;
    p.phi += shift;
    return statistics_of(d.shifted[k], p);
  };
  const photon_statistics plus = probs_of(0, h);
  const photon_statistics minus = probs_of(1, -h);
  const photon_statistics plus_half = probs_of(2, 0.5 * h);
  const photon_statistics minus_half = probs_of(3, -0.5 * h);

  compensated_sum<double> amp, ratio;
  std::size_t count = 0;
  const auto amps = d.here.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double p = std::norm(amps[i]);
    if (p <= p_min) continue;
    const complex dpsi = (4.0 * d.fine[i] - d.coarse[i]) / 3.0;
    const double proj = (std::conj(amps[i]) * dpsi).real();
    amp += 4.0 * proj * proj / p;
    const double coarse = (plus.p[i] - minus.p[i]) / (2.0 * h);
    const double fine = (plus_half.p[i] - minus_half.p[i]) / h;
    const double dp = (4.0 * fine - coarse) / 3.0;
    ratio += dp * dp / p;
    ++count;
  }
  return {amp.value(), ratio.value(), count};
}

/// Quantum Fisher matrix of (phi_L, phi_NL) for exp(-i phi_L G_L - i phi_NL G_NL).
inline multiparam_report multiparam_fisher(const two_mode_state& probe, double tail_tol = default_tail_tol,
                                           kerr_ordering ordering = kerr_ordering::square) {
  if (probe.basis() != mode_basis::input) {
    throw error(errc::basis_mismatch, "multi-parameter Fisher expects a probe in the input modes");
  }
  if (probe.tail_mass() > tail_tol) {
    throw error(errc::tail_violation, "probe tail exceeds tolerance");
  }
  const generator_covariance g = generator_covariances(probe, ordering);
  multiparam_report r;
  const double f11 = 4.0 * g.var_l();
  const double f22 = 4.0 * g.var_nl();
  const double f12 = 4.0 * g.cov();
  r.matrix = {f11, f12, f12, f22};
  const double det = f11 * f22 - f12 * f12;
  if (!(f11 > 0.0) || !(f22 > 0.0) || !(det > 1e-12 * f11 * f22)) {
    throw error(errc::singular_fisher, "Fisher matrix is singular; phases are not jointly identifiable");
  }
  r.bound_l = f22 / det;
  r.bound_nl = f11 / det;
  r.single_l = 1.0 / f11;
  r.single_nl = 1.0 / f22;
  return r;
}

}  // namespace kerrgyro
