#pragma once

// Closed-form references: the rotation-to-signal map, coherent, squeezed and
// number-state resolution formulas, and the large-N Gaussian surrogates.

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "kerrgyro/error.hpp"
#include "kerrgyro/fock_state.hpp"

namespace kerrgyro {

namespace constants {
inline constexpr double c = 299792458.0;           // m/s
inline constexpr double mu0 = 1.25663706212e-6;    // N/A^2
inline constexpr double hbar = 1.054571817e-34;    // J s
}  // namespace constants

struct physical_params {
  double omega = 0.0;          // optical angular frequency, rad/s
  double length = 0.0;         // fiber length, m
  double radius = 0.0;         // loop radius, m
  int loops = 1;
  double chi = 0.0;            // Kerr susceptibility, SI
  double cross_section = 0.0;  // m^2
  double pulse_duration = 0.0; // s
  double n0 = 1.0;             // linear index
  double rotation = 0.0;       // rad/s, signed

  double loop_area() const { return std::numbers::pi * radius * radius; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw error(errc::invalid_argument, std::string(name) + " must be positive and finite");
      }
    };
    positive(omega, "omega");
    positive(length, "length");
    positive(radius, "radius");
    positive(cross_section, "cross_section");
    positive(pulse_duration, "pulse_duration");
    positive(n0, "n0");
    if (loops < 1) throw error(errc::invalid_argument, "loops must be >= 1");
    if (!std::isfinite(chi) || chi < 0.0) throw error(errc::invalid_argument, "chi must be finite and >= 0");
    if (!std::isfinite(rotation)) throw error(errc::invalid_argument, "rotation must be finite");
  }
};

/// phi = mu0 A hbar omega^2 loops chi Omega / (cross_section tau c).
inline double signal_from_rotation(const physical_params& p) {
  p.validate();
  using namespace constants;
  return mu0 * p.loop_area() * hbar * p.omega * p.omega * p.loops * p.chi * p.rotation /
         (p.cross_section * p.pulse_duration * c);
}

/// Kerr-shifted index for a mode carrying `photons` photons per pulse.
inline double refractive_index(const physical_params& p, double photons) {
  p.validate();
  if (photons < 0.0) throw error(errc::invalid_argument, "photon number must be >= 0");
  using namespace constants;
  return std::sqrt(p.n0 * p.n0 + mu0 * hbar * p.omega * c * p.chi * photons / (p.cross_section * p.pulse_duration));
}

struct sagnac_breakdown {
  double reciprocal = 0.0;  // (omega/c) L (n+ - n-)
  double rotation = 0.0;    // 2 omega A loops Omega (n+^2 + n-^2) / c^2
  double total() const { return reciprocal + rotation; }
};

inline sagnac_breakdown sagnac_phase_from_indices(const physical_params& p, double n_plus, double n_minus) {
  p.validate();
  if (!(n_plus >= 1.0) || !(n_minus >= 1.0)) throw error(errc::invalid_argument, "indices must be >= 1");
  using constants::c;
  sagnac_breakdown b;
  b.reciprocal = p.omega / c * p.length * (n_plus - n_minus);
  b.rotation = 2.0 * p.omega * p.loop_area() * p.loops / (c * c) * p.rotation * (n_plus * n_plus + n_minus * n_minus);
  return b;
}

/// Phase difference with the indices set by the photon numbers in each direction.
inline sagnac_breakdown sagnac_phase(const physical_params& p, double photons_plus, double photons_minus) {
  return sagnac_phase_from_indices(p, refractive_index(p, photons_plus), refractive_index(p, photons_minus));
}

// ---------------------------------------------------------------- coherent

struct m_closed_form {
  double mean_m = 0.0;
  double mean_m2 = 0.0;
  double var_m() const { return mean_m2 - mean_m * mean_m; }
};

/// Exact <M>, <M^2> for coherent amplitudes alpha+- in the loop modes. The
/// square ordering adds 2 phi (resp. 4 phi) to the fringe phase relative to
/// the normal-ordered generator.
inline m_closed_form coherent_moments_loop(complex alpha_plus, complex alpha_minus, double phi, double phi0,
                                           kerr_ordering ordering = kerr_ordering::square) {
  const double delta = ordering_offset(ordering);
  const double n = std::norm(alpha_plus) + std::norm(alpha_minus);
  const complex i{0.0, 1.0};
  const complex first = std::conj(alpha_plus) * alpha_minus * std::exp(i * (2.0 * delta * phi + phi0)) *
                        std::exp(-n * (1.0 - std::exp(2.0 * i * phi)));
  const complex a2 = std::conj(alpha_plus) * alpha_minus;
  const complex second = a2 * a2 * std::exp(i * (4.0 * phi + 4.0 * delta * phi + 2.0 * phi0)) *
                         std::exp(-n * (1.0 - std::exp(4.0 * i * phi)));
  m_closed_form r;
  r.mean_m = 2.0 * first.real();
  r.mean_m2 = n + 2.0 * std::norm(alpha_plus) * std::norm(alpha_minus) + 2.0 * second.real();
  return r;
}

/// Same for mean occupations n+-, taking alpha+- real.
inline m_closed_form coherent_moments(double n_plus, double n_minus, double phi, double phi0,
                                      kerr_ordering ordering = kerr_ordering::square) {
  if (n_plus < 0.0 || n_minus < 0.0) throw error(errc::invalid_argument, "mean occupations must be >= 0");
  return coherent_moments_loop(std::sqrt(n_plus), std::sqrt(n_minus), phi, phi0, ordering);
}

/// Coherent amplitudes given on the input ports.
inline m_closed_form coherent_moments_input(complex alpha1, complex alpha2, double phi, double phi0,
                                            kerr_ordering ordering = kerr_ordering::square) {
  const double s = 1.0 / std::sqrt(2.0);
  const complex i{0.0, 1.0};
  return coherent_moments_loop(s * (alpha1 - i * alpha2), s * (alpha1 + i * alpha2), phi, phi0, ordering);
}

/// Error propagation for |sqrt(N), 0> at phi0 = -pi/2 in the limit phi -> 0,
/// without any large-N approximation.
inline double coherent_delta2phi_exact_limit(double n_bar, kerr_ordering ordering = kerr_ordering::square) {
  if (!(n_bar > 0.0)) throw error(errc::invalid_argument, "N must be positive");
  const double k = n_bar + ordering_offset(ordering);
  return 1.0 / (4.0 * n_bar * k * k);
}

/// Exact quantum Fisher information of a coherent state in one port,
/// 4 Var(G) = 4 (N^3 + 3 N^2 + N) for the square ordering.
inline double coherent_qfi(double n_bar, kerr_ordering ordering = kerr_ordering::square) {
  if (n_bar < 0.0) throw error(errc::invalid_argument, "N must be >= 0");
  // Given N photons in one port, Var(G_L) = N, so Var(G) = <N (N + d)^2>.
  const double d = ordering_offset(ordering) - 1.0;
  const double n = n_bar;
  const double m1 = n;
  const double m2 = n * n + n;
  const double m3 = n * n * n + 3.0 * n * n + n;
  return 4.0 * (m3 + 2.0 * d * m2 + d * d * m1);
}

struct asymptote_report {
  double predicted_delta2_phi = 0.0;
  double asymptote = 0.0;
  bool visibility_ok = false;  // sqrt(N) phi < 0.1
  bool fringe_ok = false;      // cos(2 N phi) > 1/sqrt(2)
  bool large_n_ok = false;     // N >= 8
  bool valid() const { return visibility_ok && fringe_ok && large_n_ok; }
  std::string flags() const {
    std::string s;
    auto add = [&s](const char* f) {
      if (!s.empty()) s += '|';
      s += f;
    };
    if (!visibility_ok) add("visibility");
    if (!fringe_ok) add("fringe");
    if (!large_n_ok) add("small_N");
    return s;
  }
};

/// Balanced coherent probe: 1/(4 N^3 cos(2 N phi)) and its phi -> 0 asymptote.
inline asymptote_report coherent_delta2phi(double n_bar, double phi) {
  if (!(n_bar > 0.0)) throw error(errc::invalid_argument, "N must be positive");
  const double fringe = std::cos(2.0 * n_bar * phi);
  if (!(fringe > 0.0)) {
    throw error(errc::out_of_regime, "cos(2 N phi) <= 0: outside the small-signal fringe");
  }
  const double half = 0.5 * n_bar;
  asymptote_report r;
  r.predicted_delta2_phi = 1.0 / (16.0 * n_bar * half * half * fringe);
  r.asymptote = 1.0 / (4.0 * n_bar * n_bar * n_bar);
  r.visibility_ok = std::sqrt(n_bar) * std::abs(phi) < 0.1;
  r.fringe_ok = fringe > 1.0 / std::sqrt(2.0) + 1e-12;
  r.large_n_ok = n_bar >= 8.0;
  return r;
}

// ---------------------------------------------------------------- squeezed

struct squeezed_model {
  double var_m = 0.0;
  double commutator = 0.0;  // |<[M, G]>|
  double delta2_phi = 0.0;
};

/// Coherent alpha in port 1, squeezed vacuum (reduced x quadrature) in port 2,
/// phi0 = -pi/2, phi -> 0.
inline squeezed_model squeezed_simple_model(double alpha, double r) {
  if (!std::isfinite(alpha) || !std::isfinite(r) || r < 0.0) {
    throw error(errc::invalid_argument, "alpha must be finite and r >= 0");
  }
  const double a2 = alpha * alpha;
  const double sh = std::sinh(r);
  const double ch = std::cosh(r);
  const double n2 = sh * sh;
  const double var_n2 = 2.0 * sh * sh * ch * ch;
  squeezed_model m;
  m.var_m = a2 * std::exp(-2.0 * r) + n2;
  m.commutator = 2.0 * std::abs(a2 * a2 + a2 - n2 * n2 - var_n2);
  m.delta2_phi = m.commutator > 0.0 ? m.var_m / (m.commutator * m.commutator)
                                    : std::numeric_limits<double>::infinity();
  return m;
}

/// Same model parametrised by total mean photons and squeezed-mode photons.
inline squeezed_model squeezed_simple_model_split(double n_bar, double n2) {
  if (!(n2 >= 0.0) || !(n2 <= n_bar)) throw error(errc::invalid_argument, "need 0 <= N2 <= N");
  return squeezed_simple_model(std::sqrt(n_bar - n2), std::asinh(std::sqrt(n2)));
}

inline double squeezed_simple_optimum_n2(double n_bar) { return 0.5 * std::sqrt(n_bar); }
inline double squeezed_simple_asymptote(double n_bar) { return 1.0 / (4.0 * std::pow(n_bar, 3.5)); }

// ------------------------------------------------------ Gaussian surrogates

/// Gauss-Hermite rule for weight exp(-x^2), nodes by Newton iteration on the
/// orthonormal recurrence.
struct gauss_hermite {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit gauss_hermite(int n) {
    if (n < 1 || n > 200) throw error(errc::invalid_argument, "Gauss-Hermite order must be in [1, 200]");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const double pim4 = std::pow(std::numbers::pi, -0.25);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
      if (i == 0) {
        z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
      } else if (i == 1) {
        z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
      } else if (i == 2) {
        z = 1.86 * z - 0.86 * nodes[0];
      } else if (i == 3) {
        z = 1.91 * z - 0.91 * nodes[1];
      } else {
        z = 2.0 * z - nodes[i - 2];
      }
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p1 = pim4;
        double p2 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
        }
        pp = std::sqrt(2.0 * n) * p2;
        const double z1 = z;
        z = z1 - p1 / pp;
        if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
      }
      nodes[i] = z;
      nodes[n - 1 - i] = -z;
      weights[i] = 2.0 / (pp * pp);
      weights[n - 1 - i] = weights[i];
    }
  }

  /// E[f(X)] for X ~ N(0, 1).
  template <class F>
  double standard_normal_mean(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(std::sqrt(2.0) * nodes[i]);
    return s / std::sqrt(std::numbers::pi);
  }
};

namespace detail {

// Large-N surrogate moments: port 1 classical with alpha^2 = (1 - f) N, the
// squeezed port contributes N2 = f N X^2 and an anti-squeezed quadrature
// 2 sqrt(fN) X, so G_L ~ 2 alpha sqrt(fN) X and G = N G_L.
struct surrogate_moments {
  double var_l = 0.0;
  double var_nl = 0.0;
  double cov = 0.0;
};

inline surrogate_moments surrogate(double f, double n_bar) {
  if (!(f > 0.0 && f < 1.0)) throw error(errc::invalid_argument, "fraction must lie in (0, 1)");
  if (!(n_bar > 0.0)) throw error(errc::invalid_argument, "N must be positive");
  static const gauss_hermite rule(16);
  const double a2 = (1.0 - f) * n_bar;
  const double n2 = f * n_bar;
  auto gl = [&](double x) { return 2.0 * std::sqrt(a2 * n2) * x; };
  auto total = [&](double x) { return a2 + n2 * x * x; };
  surrogate_moments m;
  m.var_l = rule.standard_normal_mean([&](double x) { return gl(x) * gl(x); });
  m.cov = rule.standard_normal_mean([&](double x) { return total(x) * gl(x) * gl(x); });
  m.var_nl = rule.standard_normal_mean([&](double x) { return std::pow(total(x) * gl(x), 2); });
  return m;
}

}  // namespace detail

struct surrogate_report {
  double qfi = 0.0;
  bool large_n_ok = false;  // N >= 8 and both ports carry >= 1 photon
};

/// 4 Var(G) for the coherent + squeezed split at fraction f = N2 / N.
inline surrogate_report squeezed_qfi_surrogate(double f, double n_bar) {
  const auto m = detail::surrogate(f, n_bar);
  return {4.0 * m.var_nl, n_bar >= 8.0 && f * n_bar >= 1.0 && (1.0 - f) * n_bar >= 1.0};
}

struct multiparam_surrogate_report {
  std::array<double, 4> matrix{};
  double bound_l = 0.0;
  double bound_nl = 0.0;
};

inline multiparam_surrogate_report multiparam_surrogate(double f, double n_bar) {
  const auto m = detail::surrogate(f, n_bar);
  multiparam_surrogate_report r;
  const double f11 = 4.0 * m.var_l;
  const double f12 = 4.0 * m.cov;
  const double f22 = 4.0 * m.var_nl;
  r.matrix = {f11, f12, f12, f22};
  const double det = f11 * f22 - f12 * f12;
  if (!(det > 1e-12 * f11 * f22)) throw error(errc::singular_fisher, "surrogate Fisher matrix is singular");
  r.bound_l = f22 / det;
  r.bound_nl = f11 / det;
  return r;
}

// ------------------------------------------------------------ number states

struct number_state_report {
  double mean_m = 0.0;
  double mean_m2 = 0.0;
  std::optional<double> delta2_phi;  // empty when n1 == n2
  double qfi = 0.0;
  double twin_m2_asymptote = 0.0;    // 1/(2 N^4)
};

/// |n1, n2> probes. The fringe angle is 2 phi (N - 1 + d) + phi0 with d = 1 for
/// the square ordering. The second moment carries (n1 - n2)^2 C^2; the
/// first-power form is inconsistent with <M^2> = (n1 - n2)^2 at phi = phi0 = 0.
inline number_state_report number_state_model(unsigned n1, unsigned n2, double phi, double phi0,
                                              kerr_ordering ordering = kerr_ordering::square) {
  if (n1 + n2 < 1) throw error(errc::invalid_argument, "need at least one photon");
  const double a = n1;
  const double b = n2;
  const double n = a + b;
  const double k = n - 1.0 + ordering_offset(ordering);
  const double angle = 2.0 * phi * k + phi0;
  const double c1 = std::cos(angle);
  const double s1 = std::sin(angle);
  const double spread = 2.0 * a * b + a + b;
  number_state_report r;
  r.mean_m = (a - b) * c1;
  r.mean_m2 = (a - b) * (a - b) * c1 * c1 + spread * s1 * s1;
  if (n1 != n2) r.delta2_phi = spread / (4.0 * k * k * (a - b) * (a - b));
  r.qfi = 4.0 * k * k * spread;
  r.twin_m2_asymptote = 1.0 / (2.0 * n * n * n * n);
  return r;
}

/// Second moment with the first power of (n1 - n2) in the C1^2 term. It fails
/// <M^2> = <M>^2 at phi = phi0 = 0; kept for comparison only.
inline double number_state_m2_linear_c1(unsigned n1, unsigned n2, double phi, double phi0) {
  const double a = n1;
  const double b = n2;
  const double angle = 2.0 * phi * (a + b - 1.0) + phi0;
  return (a - b) * std::pow(std::cos(angle), 2) + (2.0 * a * b + a + b) * std::pow(std::sin(angle), 2);
}

/// Large-N twin-Fock moments for M^2 at n1 = n2 = N/2.
struct twin_fock_asymptotics {
  double mean_m2 = 0.0;
  double var_m2 = 0.0;
};

inline twin_fock_asymptotics twin_fock_m2_moments(double n_bar, double phi, double phi0) {
  const double angle = 2.0 * phi * (n_bar - 1.0) + phi0;
  const double s = std::sin(angle);
  const double c = std::cos(angle);
  const double n2 = n_bar * n_bar;
  return {0.5 * n2 * s * s, s * s * (n2 * n2 / 8.0 * s * s + 2.0 * n2 * c * c)};
}

}  // namespace kerrgyro
