#pragma once

// Probe states: coherent pairs, coherent (x) squeezed vacuum, number pairs,
// with cutoffs sized from the exact single-mode photon distributions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "kerrgyro/compensated_sum.hpp"
#include "kerrgyro/error.hpp"
#include "kerrgyro/fock_state.hpp"

namespace kerrgyro {

enum class squeeze_axis {
  reduce_x,  // fluctuations of a + a^dag reduced, <a^2> = -cosh r sinh r
  reduce_p,  // rotated by pi, <a^2> = +cosh r sinh r
};

struct coherent_pair {
  complex alpha1{0.0, 0.0};
  complex alpha2{0.0, 0.0};
};

struct coherent_squeezed {
  double alpha = 0.0;  // real coherent amplitude in mode 1
  double r = 0.0;      // squeezing of the vacuum in mode 2
  squeeze_axis axis = squeeze_axis::reduce_x;
};

struct number_pair {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

class probe_spec {
 public:
  using variant_type = std::variant<coherent_pair, coherent_squeezed, number_pair>;

  probe_spec(coherent_pair p) : v_(p) { validate(); }         // NOLINT(google-explicit-constructor)
  probe_spec(coherent_squeezed p) : v_(p) { validate(); }     // NOLINT(google-explicit-constructor)
  probe_spec(number_pair p) : v_(p) { validate(); }           // NOLINT(google-explicit-constructor)

  const variant_type& variant() const { return v_; }
  double mean_total_photons() const { return mean_; }

  /// Coherent (x) squeezed probe with a fraction f of the N̄ photons in the squeezed mode.
  static probe_spec squeezed_split(double mean_total, double fraction,
                                   squeeze_axis axis = squeeze_axis::reduce_x) {
    if (!(mean_total >= 0.0) || !(fraction >= 0.0 && fraction <= 1.0)) {
      throw error(errc::invalid_argument, "squeezed split needs N >= 0 and f in [0, 1]");
    }
    return coherent_squeezed{std::sqrt((1.0 - fraction) * mean_total),
                             std::asinh(std::sqrt(fraction * mean_total)), axis};
  }

 private:
  void validate() {
    std::visit(
        [this](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, coherent_pair>) {
            if (!std::isfinite(std::abs(p.alpha1)) || !std::isfinite(std::abs(p.alpha2))) {
              throw error(errc::invalid_argument, "coherent amplitudes must be finite");
            }
            mean_ = std::norm(p.alpha1) + std::norm(p.alpha2);
          } else if constexpr (std::is_same_v<T, coherent_squeezed>) {
            if (!(p.alpha >= 0.0) || !(p.r >= 0.0) || !std::isfinite(p.alpha) || !std::isfinite(p.r)) {
              throw error(errc::invalid_argument, "coherent-squeezed needs finite alpha >= 0, r >= 0");
            }
            mean_ = p.alpha * p.alpha + std::sinh(p.r) * std::sinh(p.r);
          } else {
            mean_ = static_cast<double>(p.n1 + p.n2);
          }
        },
        v_);
  }

  variant_type v_;
  double mean_ = 0.0;
};

struct cutoff_plan {
  std::size_t cutoff1 = 0;
  std::size_t cutoff2 = 0;
  double tail1 = 0.0;  // predicted discarded mass per mode
  double tail2 = 0.0;
};

// ---------------------------------------------------------------------------
// Single-mode photon distributions

namespace detail {

inline double poisson_log_pmf(double mean, std::size_t n) {
  if (mean == 0.0) return n == 0 ? 0.0 : -INFINITY;
  const auto nn = static_cast<double>(n);
  return -mean + nn * std::log(mean) - std::lgamma(nn + 1.0);
}

// log |<2m|S(r)|0>|^2; odd photon numbers have zero weight.
inline double squeezed_log_pmf(double r, std::size_t n) {
  if (n % 2 == 1) return -INFINITY;
  if (r == 0.0) return n == 0 ? 0.0 : -INFINITY;
  const double m = static_cast<double>(n / 2);
  return -std::log(std::cosh(r)) + 2.0 * m * std::log(std::tanh(r)) +
         std::lgamma(2.0 * m + 1.0) - 2.0 * m * std::log(2.0) - 2.0 * std::lgamma(m + 1.0);
}

/// Exact photon distribution of one mode, evaluated lazily.
struct mode_distribution {
  std::function<double(std::size_t)> log_pmf;
  double mean = 0.0;
  double variance = 0.0;
  bool exact_support = false;  // number state: cutoff = n is exact
  std::size_t support = 0;
};

// Mass and relative moment_order-th moment beyond cutoff.
struct tail_estimate {
  double mass = 0.0;
  double moment = 0.0;
};

inline tail_estimate tail_beyond(const mode_distribution& d, std::size_t cutoff, int moment_order) {
  // Walk until the terms are negligible and we are past the mean.
  compensated_sum<double> mass_tail, mom_tail, mom_total;
  const std::size_t start_floor = static_cast<std::size_t>(d.mean + 1.0);
  for (std::size_t n = 0;; ++n) {
    const double lp = d.log_pmf(n);
    const double p = std::isfinite(lp) ? std::exp(lp) : 0.0;
    const double w = std::pow(static_cast<double>(n), moment_order) * p;
    mom_total += w;
    if (n > cutoff) {
      mass_tail += p;
      mom_tail += w;
    }
    if (n > cutoff && n > start_floor && n % 2 == 1) {
      // two consecutive terms checked so the even-only squeezed pmf terminates too
      const double lp_prev = d.log_pmf(n - 1);
      const double prev = std::isfinite(lp_prev) ? std::exp(lp_prev) : 0.0;
      const double scale = std::pow(static_cast<double>(n), moment_order);
      if ((p + prev) * std::max(1.0, scale) < 1e-30) break;
    }
    if (n > 1000000) break;
  }
  const double total = mom_total.value();
  return {mass_tail.value(), total > 0.0 ? mom_tail.value() / total : 0.0};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single-mode amplitude lists

/// c_n = exp(-|alpha|^2/2) alpha^n / sqrt(n!) for n <= cutoff.
inline std::vector<complex> coherent_vector(complex alpha, std::size_t cutoff,
                                            double tail_tol = default_tail_tol) {
  const double mod = std::abs(alpha);
  const double arg = std::arg(alpha);
  std::vector<complex> v(cutoff + 1, complex{0.0, 0.0});
  for (std::size_t n = 0; n <= cutoff; ++n) {
    const double lp = detail::poisson_log_pmf(mod * mod, n);
    if (!std::isfinite(lp)) continue;
    v[n] = std::polar(std::exp(0.5 * lp), static_cast<double>(n) * arg);
  }
  const detail::mode_distribution d{[m = mod * mod](std::size_t n) { return detail::poisson_log_pmf(m, n); },
                                    mod * mod, mod * mod};
  const double tail = detail::tail_beyond(d, cutoff, 0).mass;
  if (tail > tail_tol) {
    throw error(errc::tail_violation, "coherent cutoff " + std::to_string(cutoff) + " leaves tail " +
                                          std::to_string(tail));
  }
  return v;
}

/// Squeezed vacuum S(r)|0> with real coefficients; only even n populated.
inline std::vector<complex> squeezed_vacuum_vector(double r, squeeze_axis axis, std::size_t cutoff,
                                                   double tail_tol = default_tail_tol) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw error(errc::invalid_argument, "squeezing r must be >= 0");
  std::vector<complex> v(cutoff + 1, complex{0.0, 0.0});
  for (std::size_t n = 0; n <= cutoff; n += 2) {
    const double lp = detail::squeezed_log_pmf(r, n);
    if (!std::isfinite(lp)) continue;
    const std::size_t m = n / 2;
    const double sign = (axis == squeeze_axis::reduce_x && m % 2 == 1) ? -1.0 : 1.0;
    v[n] = sign * std::exp(0.5 * lp);
  }
  const double sh = std::sinh(r);
  const detail::mode_distribution d{[r](std::size_t n) { return detail::squeezed_log_pmf(r, n); },
                                    sh * sh, 2.0 * sh * sh * std::cosh(r) * std::cosh(r)};
  const double tail = detail::tail_beyond(d, cutoff, 0).mass;
  if (tail > tail_tol) {
    throw error(errc::tail_violation, "squeezed cutoff " + std::to_string(cutoff) + " leaves tail " +
                                          std::to_string(tail));
  }
  return v;
}

inline std::vector<complex> number_vector(std::size_t n, std::size_t cutoff) {
  if (n > cutoff) throw error(errc::invalid_argument, "photon number exceeds cutoff");
  std::vector<complex> v(cutoff + 1, complex{0.0, 0.0});
  v[n] = 1.0;
  return v;
}

// ---------------------------------------------------------------------------
// Truncation planning

namespace detail {

inline std::pair<mode_distribution, mode_distribution> mode_distributions(const probe_spec& spec) {
  return std::visit(
      [](const auto& p) -> std::pair<mode_distribution, mode_distribution> {
        using T = std::decay_t<decltype(p)>;
        auto coherent = [](double m) {
          return mode_distribution{[m](std::size_t n) { return poisson_log_pmf(m, n); }, m, m};
        };
        auto number = [](std::size_t k) {
          return mode_distribution{[k](std::size_t n) { return n == k ? 0.0 : -INFINITY; },
                                   static_cast<double>(k), 0.0, true, k};
        };
        if constexpr (std::is_same_v<T, coherent_pair>) {
          return {coherent(std::norm(p.alpha1)), coherent(std::norm(p.alpha2))};
        } else if constexpr (std::is_same_v<T, coherent_squeezed>) {
          const double sh = std::sinh(p.r);
          const double ch = std::cosh(p.r);
          const double r = p.r;
          return {coherent(p.alpha * p.alpha),
                  mode_distribution{[r](std::size_t n) { return squeezed_log_pmf(r, n); }, sh * sh,
                                    2.0 * sh * sh * ch * ch}};
        } else {
          return {number(p.n1), number(p.n2)};
        }
      },
      spec.variant());
}

// Smallest cutoff meeting both the mass and the relative high-moment
// tolerance. The search starts at mean + stdev and grows from there.
inline std::pair<std::size_t, double> plan_mode(const mode_distribution& d, double tol, int moment_order) {
  if (d.exact_support) return {d.support, 0.0};
  // Doubling search then bisection keeps the number of tail walks logarithmic.
  auto ok = [&](std::size_t c) {
    const tail_estimate t = tail_beyond(d, c, moment_order);
    return t.mass <= tol && t.moment <= tol;
  };
  std::size_t lo = 0;
  std::size_t hi = static_cast<std::size_t>(std::ceil(d.mean + std::sqrt(d.variance)));
  while (!ok(hi)) {
    lo = hi;
    hi = 2 * hi + 1;
  }
  if (ok(0)) return {0, tail_beyond(d, 0, 0).mass};
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) hi = mid; else lo = mid;
  }
  return {hi, tail_beyond(d, hi, 0).mass};
}

}  // namespace detail

/// Per-mode cutoffs so that the discarded mass (and the relative weight of the
/// moment_order-th photon-number moment) stays below tail_tol overall.
inline cutoff_plan plan_cutoffs(const probe_spec& spec, double tail_tol = default_tail_tol,
                                int moment_order = 6) {
  if (!(tail_tol > 0.0)) throw error(errc::invalid_argument, "tail tolerance must be positive");
  const auto [d1, d2] = detail::mode_distributions(spec);
  const auto [c1, t1] = detail::plan_mode(d1, 0.5 * tail_tol, moment_order);
  const auto [c2, t2] = detail::plan_mode(d2, 0.5 * tail_tol, moment_order);
  return {c1, c2, t1, t2};
}

inline two_mode_state build_probe(const probe_spec& spec, const cutoff_plan& plan,
                                  double tail_tol = default_tail_tol) {
  return std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        const double mode_tol = 0.5 * tail_tol;
        if constexpr (std::is_same_v<T, coherent_pair>) {
          const auto v1 = coherent_vector(p.alpha1, plan.cutoff1, mode_tol);
          const auto v2 = coherent_vector(p.alpha2, plan.cutoff2, mode_tol);
          return product_state(v1, v2);
        } else if constexpr (std::is_same_v<T, coherent_squeezed>) {
          const auto v1 = coherent_vector(complex{p.alpha, 0.0}, plan.cutoff1, mode_tol);
          const auto v2 = squeezed_vacuum_vector(p.r, p.axis, plan.cutoff2, mode_tol);
          return product_state(v1, v2);
        } else {
          const auto v1 = number_vector(p.n1, plan.cutoff1);
          const auto v2 = number_vector(p.n2, plan.cutoff2);
          return product_state(v1, v2);
        }
      },
      spec.variant());
}

inline two_mode_state build_probe(const probe_spec& spec, double tail_tol = default_tail_tol,
                                  int moment_order = 6) {
  return build_probe(spec, plan_cutoffs(spec, tail_tol, moment_order), tail_tol);
}

}  // namespace kerrgyro
