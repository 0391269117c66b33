#pragma once

// Jacobi theta functions with real characteristics,
//
//   theta[a;b](z, tau) = sum_n exp(i pi tau (n+a)^2 + 2 pi i (n+a)(z+b)),
//
// evaluated by a symmetric truncation of the series around its dominant term.
// Results are available either raw or as ScaledValue (mantissa and log scale)
// so that products of many thetas stay representable.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "torus_hall/errors.hpp"

namespace torus_hall {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Modular parameter tau = tau1 + i tau2 with tau2 > 0.
class ModularParam {
 public:
  ModularParam(double tau1, double tau2) : tau1_(tau1), tau2_(tau2) {
    if (!std::isfinite(tau1) || !std::isfinite(tau2) || !(tau2 > 0.0)) {
      throw InvalidArgument("modular parameter requires finite tau1 and tau2 > 0, got tau2 = " +
                            std::to_string(tau2));
    }
  }
  explicit ModularParam(cplx tau) : ModularParam(tau.real(), tau.imag()) {}

  double tau1() const { return tau1_; }
  double tau2() const { return tau2_; }
  cplx value() const { return {tau1_, tau2_}; }

  /// k * tau, k > 0 (level-k lattices).
  ModularParam scaled(double k) const { return {k * tau1_, k * tau2_}; }

 private:
  double tau1_;
  double tau2_;
};

struct ThetaChar {
  double a = 0.0;
  double b = 0.0;
};

/// gamma = a + b tau.
struct LatticeVector {
  long a = 0;
  long b = 0;
};

struct TruncationPolicy {
  double rel_eps = 1e-14;
  int max_terms = 10000;

  void validate() const {
    if (!(rel_eps > 0.0 && rel_eps < 1.0)) throw InvalidArgument("rel_eps must lie in (0, 1)");
    if (max_terms < 3) throw InvalidArgument("max_terms must be >= 3");
  }
};

/// value = mantissa * exp(log_scale).
struct ScaledValue {
  cplx mantissa{0.0, 0.0};
  double log_scale = 0.0;

  static ScaledValue from(cplx v) { return ScaledValue{v, 0.0}.normalized(); }

  cplx value() const { return mantissa * std::exp(log_scale); }
  bool is_zero() const { return mantissa == cplx{0.0, 0.0}; }
  double log_abs() const {
    return is_zero() ? -std::numeric_limits<double>::infinity()
                     : std::log(std::abs(mantissa)) + log_scale;
  }
  /// log |value|^2, the quantity densities are built from.
  double log_abs2() const { return 2.0 * log_abs(); }

  ScaledValue normalized() const {
    const double m = std::abs(mantissa);
    if (m == 0.0 || !std::isfinite(m)) return *this;
    if (m > 1e50 || m < 1e-50) return {mantissa / m, log_scale + std::log(m)};
    return *this;
  }

  ScaledValue& operator*=(const ScaledValue& other) {
    mantissa *= other.mantissa;
    log_scale += other.log_scale;
    *this = normalized();
    return *this;
  }
  friend ScaledValue operator*(ScaledValue lhs, const ScaledValue& rhs) { return lhs *= rhs; }

  /// Multiply by exp(w) without forming exp(w).
  ScaledValue& mul_exp(cplx w) {
    mantissa *= std::polar(1.0, w.imag());
    log_scale += w.real();
    return *this;
  }

  ScaledValue pow(int k) const {
    ScaledValue r{cplx{1.0, 0.0}, 0.0};
    for (int i = 0; i < k; ++i) r *= *this;
    return r;
  }
};

/// Half-width M of the window n in [-M, M] that drops a tail below rel_eps.
/// `center_offset` is |Im z| / tau2 (plus |a| for shifted series).
inline int truncation_window(double tau2, double center_offset, const TruncationPolicy& policy) {
  policy.validate();
  const double spread = std::sqrt(std::max(0.0, -std::log(policy.rel_eps)) / (kPi * tau2));
  const double m = std::ceil(spread + center_offset) + 2.0;
  if (!(m <= static_cast<double>(policy.max_terms))) {
    throw NonconvergentParameter("theta series needs M = " + std::to_string(m) +
                                 " terms (max_terms = " + std::to_string(policy.max_terms) +
                                 "); tau2 too small for this z");
  }
  return static_cast<int>(m);
}

namespace detail {

// Sum over n in [-M, M] of exp(i pi tau t^2 + 2 pi i t (z + b)) with t = n + a,
// factored by the largest term modulus. exp(2 pi i n u) is evaluated with the
// fractional part of u, which is exact for integer n.
inline ScaledValue shifted_series(double a, double b, cplx z, const ModularParam& tau, int m_half) {
  const double tau1 = tau.tau1();
  const double tau2 = tau.tau2();
  const double u = z.real() + b;
  const double v = z.imag();
  const double u_frac = u - std::floor(u);

  auto log_mod = [&](double t) { return -kPi * tau2 * t * t - 2.0 * kPi * t * v; };

  // Dominant term: t closest to -v / tau2 within the window.
  const double n_star = std::clamp(-v / tau2 - a, static_cast<double>(-m_half),
                                   static_cast<double>(m_half));
  double ref = -std::numeric_limits<double>::infinity();
  for (double n : {std::floor(n_star), std::ceil(n_star)}) ref = std::max(ref, log_mod(n + a));

  // Outside-in summation: small tails first.
  cplx sum{0.0, 0.0};
  auto add = [&](int n) {
    const double t = n + a;
    const double phase = kPi * tau1 * t * t + 2.0 * kPi * (n * u_frac + a * u);
    sum += std::polar(std::exp(log_mod(t) - ref), phase);
  };
  for (int k = m_half; k >= 1; --k) {
    add(-k);
    add(k);
  }
  add(0);
  return ScaledValue{sum, ref}.normalized();
}

inline cplx checked_value(const ScaledValue& v) {
  if (v.log_scale > 700.0) {
    throw NonconvergentParameter("theta value overflows double precision (log scale " +
                                 std::to_string(v.log_scale) + ")");
  }
  return v.value();
}

}  // namespace detail

inline ScaledValue theta_char_scaled(const ThetaChar& ch, cplx z, const ModularParam& tau,
                                     const TruncationPolicy& policy = {}) {
  const int m = truncation_window(tau.tau2(), std::abs(z.imag()) / tau.tau2() + std::abs(ch.a),
                                  policy);
  return detail::shifted_series(ch.a, ch.b, z, tau, m);
}

inline ScaledValue theta_scaled(cplx z, const ModularParam& tau,
                                const TruncationPolicy& policy = {}) {
  const int m = truncation_window(tau.tau2(), std::abs(z.imag()) / tau.tau2(), policy);
  return detail::shifted_series(0.0, 0.0, z, tau, m);
}

/// theta(z, tau) = sum_n exp(i pi n^2 tau + 2 pi i n z).
inline cplx theta(cplx z, const ModularParam& tau, const TruncationPolicy& policy = {}) {
  return detail::checked_value(theta_scaled(z, tau, policy));
}

/// Direct shifted-series evaluation of theta[a;b](z, tau).
inline cplx theta_char(const ThetaChar& ch, cplx z, const ModularParam& tau,
                       const TruncationPolicy& policy = {}) {
  return detail::checked_value(theta_char_scaled(ch, z, tau, policy));
}

/// Second route: exp(i pi a^2 tau + 2 pi i a (z+b)) theta(z + a tau + b, tau).
inline ScaledValue theta_char_via_shift_scaled(const ThetaChar& ch, cplx z, const ModularParam& tau,
                                               const TruncationPolicy& policy = {}) {
  const cplx t = tau.value();
  ScaledValue v = theta_scaled(z + ch.a * t + ch.b, tau, policy);
  v.mul_exp(kI * kPi * ch.a * ch.a * t + 2.0 * kPi * kI * ch.a * (z + ch.b));
  return v.normalized();
}

inline cplx theta_char_via_shift(const ThetaChar& ch, cplx z, const ModularParam& tau,
                                 const TruncationPolicy& policy = {}) {
  return detail::checked_value(theta_char_via_shift_scaled(ch, z, tau, policy));
}

inline constexpr ThetaChar kTheta11Char{0.5, 0.5};

/// theta_11 = theta[1/2; 1/2]; odd in z, zeros on the lattice.
inline ScaledValue theta11_scaled(cplx z, const ModularParam& tau,
                                  const TruncationPolicy& policy = {}) {
  return theta_char_scaled(kTheta11Char, z, tau, policy);
}

inline cplx theta11(cplx z, const ModularParam& tau, const TruncationPolicy& policy = {}) {
  return theta_char(kTheta11Char, z, tau, policy);
}

/// mu with theta[a;b](z + c + d tau) = mu * theta[a;b](z), gamma = c + d tau.
inline cplx quasi_period_multiplier(const ThetaChar& ch, const LatticeVector& gamma, cplx z,
                                    const ModularParam& tau) {
  const double c = static_cast<double>(gamma.a);
  const double d = static_cast<double>(gamma.b);
  const cplx t = tau.value();
  return std::exp(-kI * kPi * t * d * d - 2.0 * kPi * kI * d * z) *
         std::polar(1.0, 2.0 * kPi * (ch.a * c - ch.b * d));
}

/// theta_11(z + a + b tau) = (-1)^(a+b) exp(-i pi tau b^2 - 2 pi i b z) theta_11(z).
inline cplx theta11_multiplier(const LatticeVector& gamma, cplx z, const ModularParam& tau) {
  const double b = static_cast<double>(gamma.b);
  const double sign = ((gamma.a + gamma.b) % 2 == 0) ? 1.0 : -1.0;
  return sign * std::exp(-kI * kPi * tau.value() * b * b - 2.0 * kPi * kI * b * z);
}

}  // namespace torus_hall
