#pragma once

// Detection noise: efficiency eta, thermal photons N_t split evenly over the
// two detector ports, and a Gaussian random phase of variance sigma^2 between
// the interfering amplitudes. Noise enters through the detected operator only.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kerrgyro/compensated_sum.hpp"
#include "kerrgyro/error.hpp"
#include "kerrgyro/parallel.hpp"

namespace kerrgyro {

struct noise_params {
  double eta = 1.0;
  double thermal = 0.0;    // N_t
  double phase_var = 0.0;  // sigma^2

  double epsilon() const { return -std::expm1(-2.0 * phase_var); }

  void validate() const {
    if (!(eta > 0.0 && eta <= 1.0)) throw error(errc::invalid_argument, "eta must lie in (0, 1]");
    if (!(thermal >= 0.0) || !std::isfinite(thermal)) throw error(errc::invalid_argument, "N_t must be >= 0");
    if (!(phase_var >= 0.0) || !std::isfinite(phase_var)) {
      throw error(errc::invalid_argument, "phase variance must be >= 0");
    }
  }

  /// N_t well below the probe photon number.
  bool thermal_small(double n_bar) const { return thermal <= 0.1 * n_bar; }
};

namespace detail {

// Factorised moments of the detected modes A1 = sqrt(eta) a1 + sqrt(1-eta) b1
// (coherent alpha) and B2 = sqrt(eta) a2 + sqrt(1-eta) b2 (squeezed vacuum).
struct detected_moments {
  double a1_dag2;   // <A1^dag^2>
  double a1_n;      // <A1^dag A1>
  double b2_sq;     // <B2^2>
  double b2_n;      // <B2^dag B2>
};

inline detected_moments detected(double alpha, double r, const noise_params& noise) {
  const double sh = std::sinh(r);
  const double ch = std::cosh(r);
  const double half = 0.5 * noise.thermal;
  return {noise.eta * alpha * alpha, noise.eta * alpha * alpha + half, -noise.eta * ch * sh,
          noise.eta * sh * sh + half};
}

// <M^2> for a fixed random phase, M = A1^dag B2 e^{i phi} + h.c.
inline double conditional_m2(const detected_moments& d, double phase) {
  return 2.0 * std::cos(2.0 * phase) * d.a1_dag2 * d.b2_sq + d.a1_n * (d.b2_n + 1.0) + d.b2_n * (d.a1_n + 1.0);
}

}  // namespace detail

/// Var(M) at zero signal for a real coherent alpha in port 1 and squeezed
/// vacuum (reduced x) in port 2. Reduces to alpha^2 e^{-2r} + sinh^2 r without
/// noise. The thermal-thermal term N_t (N_t/2 + 1) is kept.
inline double noisy_m_variance(double alpha, double r, const noise_params& noise) {
  noise.validate();
  const double a2 = alpha * alpha;
  const double sh = std::sinh(r);
  const double ch = std::cosh(r);
  const double n2 = sh * sh;
  const double eta = noise.eta;
  const double nt = noise.thermal;
  // 1 + 2 sh^2 - 2 sh ch e^{-2 var} rewritten as e^{-2r} + 2 sh ch eps, exact at eps = 0
  return eta * eta * (a2 * (std::exp(-2.0 * r) + 2.0 * sh * ch * noise.epsilon()) + n2) +
         eta * (a2 + n2) * (nt + 1.0 - eta) + nt * (0.5 * nt + 1.0);
}

/// Variant of the variance that omits
/// alpha^2 (1 + sinh^2 r) from the noiseless part and the thermal-thermal term,
/// so it does not reduce to the squeezed variance; kept for comparison.
inline double noisy_m_variance_uncorrected(double alpha, double r, const noise_params& noise) {
  noise.validate();
  const double a2 = alpha * alpha;
  const double sh = std::sinh(r);
  const double ch = std::cosh(r);
  const double pair = -ch * sh;
  const double damp = std::exp(-2.0 * noise.phase_var);
  return noise.eta * noise.eta * (a2 * pair * damp + a2 * pair * damp + a2 * sh * sh + sh * sh) +
         noise.eta * (a2 + sh * sh) * (noise.thermal + 1.0 - noise.eta);
}

enum class noisy_probe { coherent, coherent_squeezed_optimum };

inline std::string_view to_string(noisy_probe k) {
  return k == noisy_probe::coherent ? "coherent" : "coherent-squeezed";
}

/// Degraded resolution at phi0 = -pi/2, phi -> 0, large N.
inline double noisy_delta2phi(double n_bar, noisy_probe kind, const noise_params& noise) {
  noise.validate();
  if (!(n_bar > 0.0)) throw error(errc::invalid_argument, "N must be positive");
  const double eta = noise.eta;
  const double nt = noise.thermal;
  if (kind == noisy_probe::coherent) {
    return (nt + 1.0) / (4.0 * eta * eta * eta * std::pow(n_bar, 3.0));
  }
  return 1.0 / (4.0 * eta * eta * std::pow(n_bar, 3.5)) + (nt + 1.0 - eta) / (4.0 * eta * eta * eta * std::pow(n_bar, 3.0)) +
         noise.epsilon() / (4.0 * eta * eta * std::pow(n_bar, 2.5));
}

/// Small-sigma form sigma^2 / (2 eta^2 N^{5/2}) of the phase-noise term.
inline double phase_noise_term_small_sigma(double n_bar, const noise_params& noise) {
  return noise.phase_var / (2.0 * noise.eta * noise.eta * std::pow(n_bar, 2.5));
}

struct mc_estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

inline constexpr std::size_t mc_chunk = 4096;

/// Monte Carlo over the random phase with the conditional moments evaluated
/// exactly. Each chunk of mc_chunk samples draws from its own generator seeded
/// by (seed, chunk), so the result does not depend on the thread count.
inline mc_estimate mc_noise_oracle(double alpha, double r, const noise_params& noise, std::size_t samples,
                                   std::uint64_t seed, unsigned threads = default_thread_count()) {
  noise.validate();
  if (samples < 10000) throw error(errc::invalid_argument, "Monte Carlo needs at least 1e4 samples");
  const detail::detected_moments d = detail::detected(alpha, r, noise);
  const std::size_t chunks = (samples + mc_chunk - 1) / mc_chunk;
  std::vector<double> sums(chunks, 0.0);
  std::vector<double> squares(chunks, 0.0);
  const double sigma = std::sqrt(noise.phase_var);
  parallel_for(
      chunks,
      [&](std::size_t c) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const std::size_t begin = c * mc_chunk;
        const std::size_t end = std::min(samples, begin + mc_chunk);
        compensated_sum<double> s, s2;
        for (std::size_t i = begin; i < end; ++i) {
          const double v = detail::conditional_m2(d, sigma * gauss(rng));
          s += v;
          s2 += v * v;
        }
        sums[c] = s.value();
        squares[c] = s2.value();
      },
      threads);
  compensated_sum<double> total, total2;
  for (std::size_t c = 0; c < chunks; ++c) {
    total += sums[c];
    total2 += squares[c];
  }
  const double n = static_cast<double>(samples);
  const double mean = total.value() / n;
  const double var = std::max(0.0, (total2.value() / n - mean * mean) * n / (n - 1.0));
  return {mean, std::sqrt(var / n), samples};
}

}  // namespace kerrgyro
