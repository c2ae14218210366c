#pragma once

// Input splitter, Kerr-Sagnac phase, output splitter and detected statistics.
//
// Mode convention: a+- = (a1 -+ i a2)/sqrt(2). The output modes are tied to the
// loop modes by the same relation, so the second splitter is the inverse map.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "kerrgyro/compensated_sum.hpp"
#include "kerrgyro/error.hpp"
#include "kerrgyro/fock_state.hpp"

namespace kerrgyro {

struct channel_params {
  double phi = 0.0;   // nonlinear signal
  double phi0 = 0.0;  // fixed linear bias
  kerr_ordering ordering = kerr_ordering::square;
};

enum class splitter_sense {
  forward,  // input modes -> counter-propagating modes
  inverse,  // counter-propagating modes -> output modes
};

namespace detail {

// Sector rotation matrices of the 50/50 splitter. In sector n the (k, j)
// element is <k, n-k|_{+-} |j, n-j>_{12}. Sector n is built from sector n-1 as
//   |j, n-j> = [sqrt(j) a1^dag |j-1, n-j> + sqrt(n-j) a2^dag |j, n-j-1>] / n
// with a1^dag = (b+^dag + b-^dag)/sqrt(2), a2^dag = -i (b+^dag - b-^dag)/sqrt(2).
// Using only one of the two terms divides by sqrt(j) and loses all accuracy
// above a hundred or so photons; the weighted pair stays at rounding level.
class splitter_sectors {
 public:
  std::size_t sector() const { return n_; }

  complex at(std::size_t k, std::size_t j) const { return m_[k * (n_ + 1) + j]; }

  void advance() {
    const std::size_t n = n_ + 1;
    next_.assign((n + 1) * (n + 1), complex{0.0, 0.0});
    const double scale = 1.0 / (std::sqrt(2.0) * static_cast<double>(n));
    const std::size_t w = n_ + 1;
    for (std::size_t k = 0; k <= n; ++k) {
      const double up = std::sqrt(static_cast<double>(k));
      const double down = std::sqrt(static_cast<double>(n - k));
      const complex* lower = k > 0 ? &m_[(k - 1) * w] : nullptr;
      const complex* same = k <= n_ ? &m_[k * w] : nullptr;
      complex* out = &next_[k * (n + 1)];
      for (std::size_t j = 0; j <= n; ++j) {
        complex acc{0.0, 0.0};
        if (j > 0) {
          // a1^dag on column j-1
          complex v{0.0, 0.0};
          if (lower) v += up * lower[j - 1];
          if (same) v += down * same[j - 1];
          acc += std::sqrt(static_cast<double>(j)) * v;
        }
        if (j < n) {
          // a2^dag on column j
          complex v{0.0, 0.0};
          if (lower) v += up * lower[j];
          if (same) v -= down * same[j];
          acc += std::sqrt(static_cast<double>(n - j)) * complex{v.imag(), -v.real()};
        }
        out[j] = acc * scale;
      }
    }
    m_.swap(next_);
    n_ = n;
  }

 private:
  std::size_t n_ = 0;
  std::vector<complex> m_{complex{1.0, 0.0}};
  std::vector<complex> next_;
};

inline std::size_t max_occupied_sector(const two_mode_state& psi) {
  std::size_t top = 0;
  for (std::size_t n1 = 0; n1 <= psi.cutoff1(); ++n1) {
    for (std::size_t n2 = 0; n2 <= psi.cutoff2(); ++n2) {
      if (psi(n1, n2) != complex{}) top = std::max(top, n1 + n2);
    }
  }
  return top;
}

}  // namespace detail

/// Exact SU(2) splitter applied sector by sector to every state in `states`.
/// The sector matrices are built once and shared. Each result lives on an
/// (n_max, n_max) grid where n_max is the highest occupied total photon number
/// across the batch.
inline std::vector<two_mode_state> apply_beam_splitter(std::span<const two_mode_state> states, splitter_sense sense,
                                                       double tail_tol = default_tail_tol) {
  const mode_basis expected =
      sense == splitter_sense::forward ? mode_basis::input : mode_basis::counter_propagating;
  std::size_t top = 0;
  for (const auto& psi : states) {
    if (psi.basis() != expected) {
      throw error(errc::basis_mismatch, std::string("splitter expects basis ") +
                                            std::string(to_string(expected)) + ", got " +
                                            std::string(to_string(psi.basis())));
    }
    if (psi.tail_mass() > tail_tol) {
      throw error(errc::tail_violation, "state tail " + std::to_string(psi.tail_mass()) +
                                            " exceeds tolerance before splitter");
    }
    top = std::max(top, detail::max_occupied_sector(psi));
  }
  std::vector<std::vector<complex>> out(states.size(), std::vector<complex>((top + 1) * (top + 1)));
  std::vector<complex> x;
  detail::splitter_sectors rot;
  for (std::size_t n = 0; n <= top; ++n) {
    if (n > 0) rot.advance();
    for (std::size_t b = 0; b < states.size(); ++b) {
      const two_mode_state& psi = states[b];
      x.assign(n + 1, complex{0.0, 0.0});
      bool any = false;
      for (std::size_t i = 0; i <= n; ++i) {
        x[i] = psi(i, n - i);
        any = any || x[i] != complex{};
      }
      if (!any) continue;
      for (std::size_t o = 0; o <= n; ++o) {
        complex s{0.0, 0.0};
        if (sense == splitter_sense::forward) {
          for (std::size_t i = 0; i <= n; ++i) s += rot.at(o, i) * x[i];
        } else {
          for (std::size_t i = 0; i <= n; ++i) s += std::conj(rot.at(i, o)) * x[i];
        }
        out[b][o * (top + 1) + (n - o)] = s;
      }
    }
  }
  const mode_basis result =
      sense == splitter_sense::forward ? mode_basis::counter_propagating : mode_basis::output;
  std::vector<two_mode_state> states_out;
  states_out.reserve(states.size());
  for (auto& amps : out) states_out.emplace_back(top, top, std::move(amps), result);
  return states_out;
}

inline two_mode_state apply_beam_splitter(const two_mode_state& psi, splitter_sense sense,
                                          double tail_tol = default_tail_tol) {
  return std::move(apply_beam_splitter(std::span<const two_mode_state>(&psi, 1), sense, tail_tol).front());
}

/// Diagonal phase exp(-i [phi g(n+, n-) + (phi0/2)(n+ - n-)]) on the loop modes,
/// g = n+^2 - n-^2 for the square ordering.
inline two_mode_state apply_gyro_phase(const two_mode_state& psi, const channel_params& params) {
  if (psi.basis() != mode_basis::counter_propagating) {
    throw error(errc::basis_mismatch, "gyro phase acts on the counter-propagating modes");
  }
  if (!std::isfinite(params.phi) || !std::isfinite(params.phi0)) {
    throw error(errc::non_finite, "channel phases must be finite");
  }
  std::vector<complex> amps(psi.amplitudes().begin(), psi.amplitudes().end());
  const double shift = params.ordering == kerr_ordering::square ? 0.0 : 1.0;
  for (std::size_t np = 0; np <= psi.cutoff1(); ++np) {
    for (std::size_t nm = 0; nm <= psi.cutoff2(); ++nm) {
      complex& c = amps[psi.index(np, nm)];
      if (c == complex{}) continue;
      const auto p = static_cast<double>(np);
      const auto m = static_cast<double>(nm);
      const double g = p * (p - shift) - m * (m - shift);
      c *= std::polar(1.0, -(params.phi * g + 0.5 * params.phi0 * (p - m)));
    }
  }
  return two_mode_state(psi.cutoff1(), psi.cutoff2(), std::move(amps), psi.basis());
}

/// Phase then output splitter, starting from a state already inside the loop.
inline two_mode_state propagate_from_loop(const two_mode_state& loop_state, const channel_params& params,
                                          double tail_tol = default_tail_tol) {
  return apply_beam_splitter(apply_gyro_phase(loop_state, params), splitter_sense::inverse, tail_tol);
}

/// Output states for several channel settings sharing one loop state.
inline std::vector<two_mode_state> propagate_from_loop(const two_mode_state& loop_state,
                                                       std::span<const channel_params> settings,
                                                       double tail_tol = default_tail_tol) {
  std::vector<two_mode_state> shifted;
  shifted.reserve(settings.size());
  for (const auto& p : settings) shifted.push_back(apply_gyro_phase(loop_state, p));
  return apply_beam_splitter(std::span<const two_mode_state>(shifted), splitter_sense::inverse, tail_tol);
}

/// Output-mode amplitudes of the full interferometer.
inline two_mode_state gyro_output_state(const two_mode_state& probe, const channel_params& params,
                                        double tail_tol = default_tail_tol) {
  return propagate_from_loop(apply_beam_splitter(probe, splitter_sense::forward, tail_tol), params,
                             tail_tol);
}

struct photon_statistics {
  std::size_t cutoff1 = 0;
  std::size_t cutoff2 = 0;
  std::vector<double> p;  // row-major in n1
  double phi = 0.0;
  double phi0 = 0.0;

  double operator()(std::size_t n1, std::size_t n2) const {
    if (n1 > cutoff1 || n2 > cutoff2) return 0.0;
    return p[n1 * (cutoff2 + 1) + n2];
  }

  double total() const {
    compensated_sum<double> s;
    for (double x : p) s += x;
    return s.value();
  }

  std::vector<double> total_number_marginal() const {
    std::vector<compensated_sum<double>> acc(cutoff1 + cutoff2 + 1);
    for (std::size_t n1 = 0; n1 <= cutoff1; ++n1) {
      for (std::size_t n2 = 0; n2 <= cutoff2; ++n2) acc[n1 + n2] += (*this)(n1, n2);
    }
    std::vector<double> out(acc.size());
    std::transform(acc.begin(), acc.end(), out.begin(), [](const auto& a) { return a.value(); });
    return out;
  }
};

inline photon_statistics statistics_of(const two_mode_state& output, const channel_params& params) {
  photon_statistics s{output.cutoff1(), output.cutoff2(), {}, params.phi, params.phi0};
  s.p.reserve(output.amplitudes().size());
  for (const auto& c : output.amplitudes()) s.p.push_back(std::norm(c));
  return s;
}

/// p(n1, n2 | phi) at the detectors.
inline photon_statistics gyro_pass(const two_mode_state& probe, const channel_params& params,
                                   double tail_tol = default_tail_tol) {
  if (probe.basis() != mode_basis::input) {
    throw error(errc::basis_mismatch, "gyro_pass expects a probe in the input modes");
  }
  return statistics_of(gyro_output_state(probe, params, tail_tol), params);
}

/// <M^k> with M = n1 - n2 at the output.
inline double m_moment(const photon_statistics& stats, int k) {
  compensated_sum<double> s;
  for (std::size_t n1 = 0; n1 <= stats.cutoff1; ++n1) {
    for (std::size_t n2 = 0; n2 <= stats.cutoff2; ++n2) {
      const double p = stats(n1, n2);
      if (p == 0.0) continue;
      s += p * std::pow(static_cast<double>(n1) - static_cast<double>(n2), k);
    }
  }
  return s.value();
}

struct m_moments {
  double mean_m = 0.0;
  double mean_m2 = 0.0;
  double var_m = 0.0;
};

inline m_moments m_statistics(const photon_statistics& stats) {
  const double m1 = m_moment(stats, 1);
  const double m2 = m_moment(stats, 2);
  return {m1, m2, std::max(0.0, m2 - m1 * m1)};
}

}  // namespace kerrgyro
