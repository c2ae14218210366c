#pragma once

// Pure two-mode bosonic states on a truncated photon-number grid, plus the
// exact moments of the Kerr-Sagnac generator G = N (N+ - N-).

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kerrgyro/compensated_sum.hpp"
#include "kerrgyro/error.hpp"

namespace kerrgyro {

using complex = std::complex<double>;

inline constexpr double default_tail_tol = 1e-10;
inline constexpr double norm_slack = 1e-12;

/// Which mode pair the (n1, n2) indices of a state refer to.
enum class mode_basis {
  input,                // a1, a2 before the first splitter
  counter_propagating,  // a+, a- inside the fiber loop
  output,               // the detected modes after the second splitter
};

constexpr std::string_view to_string(mode_basis b) {
  switch (b) {
    case mode_basis::input: return "input";
    case mode_basis::counter_propagating: return "counter_propagating";
    case mode_basis::output: return "output";
  }
  return "unknown";
}

/// Operator ordering of the self-phase term. `square` is G = N+^2 - N-^2.
/// `normal` is the normally ordered Kerr term N+(N+-1) - N-(N--1) = (N-1)(N+ - N-).
enum class kerr_ordering { square, normal };

constexpr std::string_view to_string(kerr_ordering k) {
  return k == kerr_ordering::square ? "square" : "normal";
}

/// Photon-number offset that the operator ordering adds to the interference
/// phase. With Lambda = 2 phi (n - 1 + offset) + phi0 evaluated between a+^dag and a-,
/// the square generator has offset 1 and the normal one offset 0.
constexpr int ordering_offset(kerr_ordering k) { return k == kerr_ordering::square ? 1 : 0; }

class two_mode_state {
 public:
  two_mode_state(std::size_t cutoff1, std::size_t cutoff2, mode_basis basis = mode_basis::input)
      : cutoff1_(cutoff1),
        cutoff2_(cutoff2),
        basis_(basis),
        amps_((cutoff1 + 1) * (cutoff2 + 1), complex{0.0, 0.0}) {}

  two_mode_state(std::size_t cutoff1, std::size_t cutoff2, std::vector<complex> amplitudes,
                 mode_basis basis)
      : cutoff1_(cutoff1), cutoff2_(cutoff2), basis_(basis), amps_(std::move(amplitudes)) {
    if (amps_.size() != (cutoff1_ + 1) * (cutoff2_ + 1)) {
      throw error(errc::dimension_mismatch, "amplitude count does not match cutoffs");
    }
  }

  std::size_t cutoff1() const { return cutoff1_; }
  std::size_t cutoff2() const { return cutoff2_; }
  mode_basis basis() const { return basis_; }

  std::size_t index(std::size_t n1, std::size_t n2) const { return n1 * (cutoff2_ + 1) + n2; }

  /// Amplitude c(n1, n2); zero outside the grid.
  complex operator()(std::size_t n1, std::size_t n2) const {
    if (n1 > cutoff1_ || n2 > cutoff2_) return {0.0, 0.0};
    return amps_[index(n1, n2)];
  }

  std::span<const complex> amplitudes() const { return amps_; }

  double norm2() const {
    compensated_sum<double> s;
    for (const auto& c : amps_) s += std::norm(c);
    return s.value();
  }

  /// Probability mass lost to truncation, 1 - sum |c|^2. Builders never
  /// renormalise, so this is the exact discarded tail of the probe.
  double tail_mass() const { return std::max(0.0, 1.0 - norm2()); }

  /// Mass sitting on the outermost band n1 == cutoff1 or n2 == cutoff2.
  double edge_mass() const {
    compensated_sum<double> s;
    for (std::size_t n1 = 0; n1 <= cutoff1_; ++n1) {
      for (std::size_t n2 = 0; n2 <= cutoff2_; ++n2) {
        if (n1 == cutoff1_ || n2 == cutoff2_) s += std::norm(amps_[index(n1, n2)]);
      }
    }
    return s.value();
  }

  /// Distribution of the total photon number n1 + n2.
  std::vector<double> total_number_marginal() const {
    std::vector<compensated_sum<double>> acc(cutoff1_ + cutoff2_ + 1);
    for (std::size_t n1 = 0; n1 <= cutoff1_; ++n1) {
      for (std::size_t n2 = 0; n2 <= cutoff2_; ++n2) acc[n1 + n2] += std::norm(amps_[index(n1, n2)]);
    }
    std::vector<double> out(acc.size());
    std::transform(acc.begin(), acc.end(), out.begin(), [](const auto& a) { return a.value(); });
    return out;
  }

  bool has_real_coefficients(double tol = 1e-14) const {
    return std::all_of(amps_.begin(), amps_.end(),
                       [tol](const complex& c) { return std::abs(c.imag()) <= tol; });
  }

 private:
  std::size_t cutoff1_;
  std::size_t cutoff2_;
  mode_basis basis_;
  std::vector<complex> amps_;
};

/// |psi1> (x) |psi2> in the input modes.
inline two_mode_state product_state(std::span<const complex> mode1, std::span<const complex> mode2) {
  if (mode1.empty() || mode2.empty()) {
    throw error(errc::empty_vector, "single-mode amplitude list is empty");
  }
  auto norm_of = [](std::span<const complex> v) {
    compensated_sum<double> s;
    for (const auto& c : v) s += std::norm(c);
    return s.value();
  };
  if (norm_of(mode1) > 1.0 + norm_slack || norm_of(mode2) > 1.0 + norm_slack) {
    throw error(errc::norm_exceeded, "single-mode norm exceeds 1");
  }
  const std::size_t c1 = mode1.size() - 1;
  const std::size_t c2 = mode2.size() - 1;
  std::vector<complex> amps((c1 + 1) * (c2 + 1));
  for (std::size_t n1 = 0; n1 <= c1; ++n1) {
    for (std::size_t n2 = 0; n2 <= c2; ++n2) amps[n1 * (c2 + 1) + n2] = mode1[n1] * mode2[n2];
  }
  return two_mode_state(c1, c2, std::move(amps), mode_basis::input);
}

// ---------------------------------------------------------------------------
// Observables

/// Diagonal observable tabulated on a grid; must match the state's cutoffs.
struct weight_grid {
  std::size_t cutoff1 = 0;
  std::size_t cutoff2 = 0;
  std::vector<double> values;  // row-major in n1
};

template <class F>
  requires std::invocable<F, std::size_t, std::size_t>
double expectation(const two_mode_state& psi, F&& weight) {
  compensated_sum<double> s;
  for (std::size_t n1 = 0; n1 <= psi.cutoff1(); ++n1) {
    for (std::size_t n2 = 0; n2 <= psi.cutoff2(); ++n2) {
      const double p = std::norm(psi(n1, n2));
      if (p != 0.0) s += p * static_cast<double>(weight(n1, n2));
    }
  }
  return s.value();
}

inline double expectation(const two_mode_state& psi, const weight_grid& w) {
  if (w.cutoff1 != psi.cutoff1() || w.cutoff2 != psi.cutoff2() ||
      w.values.size() != (w.cutoff1 + 1) * (w.cutoff2 + 1)) {
    throw error(errc::dimension_mismatch, "weight grid does not match state cutoffs");
  }
  return expectation(psi, [&](std::size_t n1, std::size_t n2) { return w.values[psi.index(n1, n2)]; });
}

/// coeff * (a1^dag)^create1 a1^annihilate1 (a2^dag)^create2 a2^annihilate2
struct monomial {
  complex coeff{1.0, 0.0};
  int create1 = 0;
  int annihilate1 = 0;
  int create2 = 0;
  int annihilate2 = 0;
};

using sparse_operator = std::vector<monomial>;

namespace detail {

// sqrt(n!/(n-k)!) for lowering n by k; 0 when k > n.
inline double lower_factor(long n, int k) {
  if (k > n) return 0.0;
  double f = 1.0;
  for (int j = 0; j < k; ++j) f *= std::sqrt(static_cast<double>(n - j));
  return f;
}

// sqrt((n+k)!/n!) for raising n by k.
inline double raise_factor(long n, int k) {
  double f = 1.0;
  for (int j = 1; j <= k; ++j) f *= std::sqrt(static_cast<double>(n + j));
  return f;
}

}  // namespace detail

/// O|psi> on a grid enlarged to hold every image of the truncated state.
inline two_mode_state apply(const sparse_operator& op, const two_mode_state& psi) {
  std::size_t grow1 = 0;
  std::size_t grow2 = 0;
  for (const auto& m : op) {
    if (m.create1 < 0 || m.annihilate1 < 0 || m.create2 < 0 || m.annihilate2 < 0) {
      throw error(errc::invalid_argument, "negative ladder power");
    }
    grow1 = std::max<std::size_t>(grow1, static_cast<std::size_t>(std::max(0, m.create1 - m.annihilate1)));
    grow2 = std::max<std::size_t>(grow2, static_cast<std::size_t>(std::max(0, m.create2 - m.annihilate2)));
  }
  const std::size_t c1 = psi.cutoff1() + grow1;
  const std::size_t c2 = psi.cutoff2() + grow2;
  std::vector<compensated_sum<complex>> acc((c1 + 1) * (c2 + 1));
  for (std::size_t n1 = 0; n1 <= psi.cutoff1(); ++n1) {
    for (std::size_t n2 = 0; n2 <= psi.cutoff2(); ++n2) {
      const complex c = psi(n1, n2);
      if (c == complex{}) continue;
      for (const auto& m : op) {
        const long l1 = static_cast<long>(n1) - m.annihilate1;
        const long l2 = static_cast<long>(n2) - m.annihilate2;
        if (l1 < 0 || l2 < 0) continue;
        const double f = detail::lower_factor(static_cast<long>(n1), m.annihilate1) *
                         detail::raise_factor(l1, m.create1) *
                         detail::lower_factor(static_cast<long>(n2), m.annihilate2) *
                         detail::raise_factor(l2, m.create2);
        const auto t1 = static_cast<std::size_t>(l1 + m.create1);
        const auto t2 = static_cast<std::size_t>(l2 + m.create2);
        acc[t1 * (c2 + 1) + t2] += m.coeff * f * c;
      }
    }
  }
  std::vector<complex> amps(acc.size());
  std::transform(acc.begin(), acc.end(), amps.begin(), [](const auto& a) { return a.value(); });
  return two_mode_state(c1, c2, std::move(amps), psi.basis());
}

/// <psi|O|psi> on the truncated state.
inline complex expectation(const two_mode_state& psi, const sparse_operator& op) {
  const two_mode_state image = apply(op, psi);
  compensated_sum<complex> s;
  for (std::size_t n1 = 0; n1 <= psi.cutoff1(); ++n1) {
    for (std::size_t n2 = 0; n2 <= psi.cutoff2(); ++n2) s += std::conj(psi(n1, n2)) * image(n1, n2);
  }
  return s.value();
}

// ---------------------------------------------------------------------------
// Generator moments

struct generator_moments {
  double mean_g = 0.0;
  double var_g = 0.0;
};

/// First and second moments of the linear generator G_L = i(a2^dag a1 - a1^dag a2)
/// and the nonlinear one G_NL = w(N) G_L, with w(N) = N (square) or N-1 (normal).
struct generator_covariance {
  double mean_l = 0.0;
  double mean_nl = 0.0;
  double second_l = 0.0;      // <G_L^2>
  double second_nl = 0.0;     // <G_NL^2>
  double cross = 0.0;         // Re <G_L G_NL>

  double var_l() const { return std::max(0.0, second_l - mean_l * mean_l); }
  double var_nl() const { return std::max(0.0, second_nl - mean_nl * mean_nl); }
  double cov() const { return cross - mean_l * mean_nl; }
};

namespace detail {

inline double nonlinear_weight(std::size_t n, kerr_ordering k) {
  const auto nn = static_cast<double>(n);
  return k == kerr_ordering::square ? nn : nn - 1.0;
}

}  // namespace detail

inline generator_covariance generator_covariances(const two_mode_state& psi,
                                                  kerr_ordering ordering = kerr_ordering::square) {
  compensated_sum<double> mean_l, mean_nl, second_l, second_nl, cross;

  if (psi.basis() == mode_basis::counter_propagating) {
    // Both generators are diagonal here: G_L = N+ - N-.
    for (std::size_t np = 0; np <= psi.cutoff1(); ++np) {
      for (std::size_t nm = 0; nm <= psi.cutoff2(); ++nm) {
        const double p = std::norm(psi(np, nm));
        if (p == 0.0) continue;
        const double l = static_cast<double>(np) - static_cast<double>(nm);
        const double g = detail::nonlinear_weight(np + nm, ordering) * l;
        mean_l += p * l;
        mean_nl += p * g;
        second_l += p * l * l;
        second_nl += p * g * g;
        cross += p * l * g;
      }
    }
  } else {
    // v = G_L |psi> on a grid one larger per mode; N is unchanged by G_L.
    const std::size_t c1 = psi.cutoff1() + 1;
    const std::size_t c2 = psi.cutoff2() + 1;
    std::vector<complex> v((c1 + 1) * (c2 + 1));
    const complex i{0.0, 1.0};
    for (std::size_t n1 = 0; n1 <= psi.cutoff1(); ++n1) {
      for (std::size_t n2 = 0; n2 <= psi.cutoff2(); ++n2) {
        const complex c = psi(n1, n2);
        if (c == complex{}) continue;
        // i a2^dag a1 : (n1, n2) -> (n1-1, n2+1)
        if (n1 > 0) {
          v[(n1 - 1) * (c2 + 1) + n2 + 1] +=
              i * std::sqrt(static_cast<double>(n1) * static_cast<double>(n2 + 1)) * c;
        }
        // -i a1^dag a2 : (n1, n2) -> (n1+1, n2-1)
        if (n2 > 0) {
          v[(n1 + 1) * (c2 + 1) + n2 - 1] -=
              i * std::sqrt(static_cast<double>(n1 + 1) * static_cast<double>(n2)) * c;
        }
      }
    }
    for (std::size_t n1 = 0; n1 <= c1; ++n1) {
      for (std::size_t n2 = 0; n2 <= c2; ++n2) {
        const complex gv = v[n1 * (c2 + 1) + n2];
        if (gv == complex{}) continue;
        const double w = detail::nonlinear_weight(n1 + n2, ordering);
        const double q = std::norm(gv);
        const double overlap = (std::conj(psi(n1, n2)) * gv).real();
        mean_l += overlap;
        mean_nl += w * overlap;
        second_l += q;
        second_nl += w * w * q;
        cross += w * q;
      }
    }
  }
  return {mean_l.value(), mean_nl.value(), second_l.value(), second_nl.value(), cross.value()};
}

/// Exact <G> and Var(G) on the truncated state. Degree-6 moments amplify
/// truncation error, so an out-of-tolerance tail is rejected.
inline generator_moments g_moments(const two_mode_state& psi, double tail_tol = default_tail_tol,
                                   kerr_ordering ordering = kerr_ordering::square) {
  if (psi.tail_mass() > tail_tol) {
    throw error(errc::tail_violation, "tail mass " + std::to_string(psi.tail_mass()) +
                                          " exceeds tolerance " + std::to_string(tail_tol));
  }
  const generator_covariance c = generator_covariances(psi, ordering);
  return {c.mean_nl, c.var_nl()};
}

}  // namespace kerrgyro
