#pragma once

// Kahler data of the flux torus C / (Z + tau Z) and its deformations: the flat
// frame (tau -> tau_s), the y-dependent deformation H(y), the Hermitian metric
// h = 2 pi N / D(y) with D = tau2 + s H''(y) / (2 pi N), its Gauss curvature and
// the time s_c where D first touches zero.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "torus_hall/errors.hpp"
#include "torus_hall/numerics.hpp"
#include "torus_hall/theta.hpp"

namespace torus_hall {

struct TorusConfig {
  ModularParam tau{0.0, 1.0};
  int n_phi = 1;

  TorusConfig() = default;
  TorusConfig(ModularParam t, int n) : tau(t), n_phi(n) {
    if (n_phi < 1) throw InvalidArgument("n_phi must be >= 1, got " + std::to_string(n_phi));
  }
};

/// Point on the universal cover, z = x + tau y.
struct CoverPoint {
  double x = 0.0;
  double y = 0.0;

  cplx z(const ModularParam& tau) const { return x + tau.value() * y; }
};

/// Point of the fundamental domain; coordinates reduced into [0, 1).
class TorusPoint {
 public:
  TorusPoint(double x, double y) : x_(reduce(x)), y_(reduce(y)) {}

  double x() const { return x_; }
  double y() const { return y_; }
  CoverPoint lift() const { return {x_, y_}; }

 private:
  static double reduce(double v) {
    if (!std::isfinite(v)) throw InvalidArgument("torus point coordinates must be finite");
    double r = v - std::floor(v);
    return r >= 1.0 ? 0.0 : r;
  }
  double x_;
  double y_;
};

enum class DeformationKind { FlatQuadratic, PeriodicSine, CustomPeriodic };

struct HamiltonianValues {
  double h = 0.0;   // H(y)
  double h1 = 0.0;  // H'(y)
  double h2 = 0.0;  // H''(y)
};

using RealFn = std::function<double(double)>;

class Deformation {
 public:
  /// H = y^2 / 2; realized through flat_frame.
  static Deformation flat_quadratic(double s) { return Deformation(DeformationKind::FlatQuadratic, s); }

  /// H = sin^2(2 pi y).
  static Deformation periodic_sine(double s) { return Deformation(DeformationKind::PeriodicSine, s); }

  /// User-supplied period-1 H. Missing derivatives fall back to central differences.
  static Deformation custom_periodic(double s, RealFn h, RealFn h1 = {}, RealFn h2 = {}) {
    if (!h) throw InvalidArgument("custom deformation needs H");
    Deformation d(DeformationKind::CustomPeriodic, s);
    for (int i = 0; i < 16; ++i) {
      const double y = -1.0 + i / 8.0 + 0.0371;
      const double gap = std::abs(h(y + 1.0) - h(y));
      if (!(gap < 1e-10)) {
        throw NonPeriodicHamiltonian("custom H is not 1-periodic: |H(y+1) - H(y)| = " +
                                     std::to_string(gap) + " at y = " + std::to_string(y));
      }
    }
    d.h_ = std::move(h);
    d.h1_ = std::move(h1);
    d.h2_ = std::move(h2);
    return d;
  }

  DeformationKind kind() const { return kind_; }
  double s() const { return s_; }
  bool periodic() const { return kind_ != DeformationKind::FlatQuadratic; }
  bool has_analytic_h2() const { return kind_ == DeformationKind::PeriodicSine || bool(h2_); }

  Deformation with_s(double s) const {
    Deformation d = *this;
    d.s_ = checked_s(s);
    return d;
  }

  HamiltonianValues values(double y) const {
    require_periodic();
    if (kind_ == DeformationKind::PeriodicSine) {
      const double sn = std::sin(2.0 * kPi * y);
      return {sn * sn, 2.0 * kPi * std::sin(4.0 * kPi * y), 8.0 * kPi * kPi * std::cos(4.0 * kPi * y)};
    }
    HamiltonianValues v;
    v.h = h_(y);
    v.h1 = h1_ ? h1_(y) : numerics::first_derivative(h_, y, 1e-5);
    v.h2 = h2_ ? h2_(y) : numerics::second_derivative(h_, y, 1e-4);
    return v;
  }

  /// H''' and H'''' (analytic for the sine family, differences of H'' otherwise).
  double h3(double y) const {
    if (kind_ == DeformationKind::PeriodicSine) return -32.0 * kPi * kPi * kPi * std::sin(4.0 * kPi * y);
    return numerics::first_derivative([this](double t) { return values(t).h2; }, y, 1e-4);
  }
  double h4(double y) const {
    if (kind_ == DeformationKind::PeriodicSine) {
      return -128.0 * kPi * kPi * kPi * kPi * std::cos(4.0 * kPi * y);
    }
    return numerics::second_derivative([this](double t) { return values(t).h2; }, y, 1e-3);
  }

 private:
  Deformation(DeformationKind kind, double s) : kind_(kind), s_(checked_s(s)) {}

  static double checked_s(double s) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("deformation time s must be finite and >= 0");
    return s;
  }
  void require_periodic() const {
    if (!periodic()) throw InvalidArgument("flat-quadratic deformation has no periodic H; use flat_frame");
  }

  DeformationKind kind_;
  double s_;
  RealFn h_;
  RealFn h1_;
  RealFn h2_;
};

inline HamiltonianValues hamiltonian_values(const Deformation& d, double y) { return d.values(y); }

// ---------------------------------------------------------------------------
// Flat frame

struct FlatFrame {
  cplx tau_s;

  ModularParam tau() const { return ModularParam(tau_s); }
  cplx z_s(double x, double y) const { return x + tau_s * y; }
};

/// tau_s = tau + i s / (2 pi denominator).
inline FlatFrame flat_frame(const TorusConfig& cfg, double s, int denominator) {
  if (!(s >= 0.0)) throw InvalidArgument("flat_frame needs s >= 0");
  if (denominator < 1) throw InvalidArgument("flat_frame denominator must be >= 1");
  return {cfg.tau.value() + kI * s / (2.0 * kPi * denominator)};
}

// ---------------------------------------------------------------------------
// Metric and curvature

enum class CurvatureMode { PaperLiteral, StandardLogH };

namespace detail {

inline void require_periodic(const Deformation& d) {
  if (!d.periodic()) throw InvalidArgument("metric data needs a periodic deformation");
}

inline double denominator_tolerance(const TorusConfig& cfg) { return 1e-12 * cfg.tau.tau2(); }

}  // namespace detail

/// D(y) = tau2 + s H''(y) / (2 pi N_phi).
inline double metric_denominator(const TorusConfig& cfg, const Deformation& d, double y) {
  detail::require_periodic(d);
  return cfg.tau.tau2() + d.s() / (2.0 * kPi * cfg.n_phi) * d.values(y).h2;
}

inline double checked_denominator(const TorusConfig& cfg, const Deformation& d, double y) {
  const double den = metric_denominator(cfg, d, y);
  if (!(den > detail::denominator_tolerance(cfg))) {
    throw PastCriticalDeformation("metric denominator " + std::to_string(den) + " <= 0 at y = " +
                                  std::to_string(y) + " (s = " + std::to_string(d.s()) + ")");
  }
  return den;
}

inline double hermitian_metric_h(const TorusConfig& cfg, const Deformation& d, double y) {
  return 2.0 * kPi * cfg.n_phi / checked_denominator(cfg, d, y);
}

/// Smallest s > 0 with min_y D(y) = 0; +inf when H'' >= 0 everywhere.
inline double critical_s(const TorusConfig& cfg, const Deformation& d) {
  detail::require_periodic(d);
  const double scale = 2.0 * kPi * cfg.n_phi * cfg.tau.tau2();
  if (d.kind() == DeformationKind::PeriodicSine) return scale / (8.0 * kPi * kPi);

  // Sampled minimum of H'', refined by golden-section search around the best sample.
  constexpr int kSamples = 1024;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kSamples; ++i) {
    const double v = d.values(static_cast<double>(i) / kSamples).h2;
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double lo = (best - 1.0) / kSamples;
  double hi = (best + 1.0) / kSamples;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int iter = 0; iter < 80; ++iter) {
    const double a = hi - g * (hi - lo);
    const double b = lo + g * (hi - lo);
    if (d.values(a).h2 < d.values(b).h2) hi = b; else lo = a;
  }
  const double min_h2 = std::min(best_val, d.values(0.5 * (lo + hi)).h2);
  if (!(min_h2 < 0.0)) return std::numeric_limits<double>::infinity();

  const double guess = scale / (-min_h2);
  auto min_den = [&](double s) { return cfg.tau.tau2() + s / (2.0 * kPi * cfg.n_phi) * min_h2; };
  return numerics::bisect_root(min_den, 0.0, 2.0 * guess, 1e-14 * guess);
}

/// Throws PastCriticalDeformation when s >= s_c.
inline void require_subcritical(const TorusConfig& cfg, const Deformation& d) {
  const double sc = critical_s(cfg, d);
  if (d.s() >= sc) {
    throw PastCriticalDeformation("s = " + std::to_string(d.s()) + " is at or past s_c = " +
                                  std::to_string(sc));
  }
}

namespace detail {

struct DenominatorJet {
  double d0, d1, d2;
};

inline DenominatorJet denominator_jet(const TorusConfig& cfg, const Deformation& d, double y) {
  const double c = d.s() / (2.0 * kPi * cfg.n_phi);
  return {checked_denominator(cfg, d, y), c * d.h3(y), c * d.h4(y)};
}

}  // namespace detail

/// Second y-derivative of h, analytic from D', D''.
inline double metric_h_second_derivative(const TorusConfig& cfg, const Deformation& d, double y) {
  const auto j = detail::denominator_jet(cfg, d, y);
  return 2.0 * kPi * cfg.n_phi * (2.0 * j.d1 * j.d1 - j.d2 * j.d0) / (j.d0 * j.d0 * j.d0);
}

/// PaperLiteral: K = 2 / (4 pi N)^2 h''. StandardLogH: curvature of h |dz_s|^2,
/// -(1/2h) Laplacian(log h) in the conformal chart (x + tau1 y, int D dy).
inline double gauss_curvature(const TorusConfig& cfg, const Deformation& d, double y,
                              CurvatureMode mode = CurvatureMode::PaperLiteral) {
  detail::require_periodic(d);
  const double n = cfg.n_phi;
  if (d.s() == 0.0) return 0.0;
  if (mode == CurvatureMode::PaperLiteral) {
    const double pref = 2.0 / ((4.0 * kPi * n) * (4.0 * kPi * n));
    if (d.kind() == DeformationKind::PeriodicSine) return pref * metric_h_second_derivative(cfg, d, y);
    checked_denominator(cfg, d, y);
    return pref * numerics::second_derivative([&](double t) { return hermitian_metric_h(cfg, d, t); }, y, 1e-4);
  }
  const auto j = detail::denominator_jet(cfg, d, y);
  return (j.d2 * j.d0 - 2.0 * j.d1 * j.d1) / (4.0 * kPi * n * j.d0 * j.d0 * j.d0);
}

/// Integral of K over the torus with area form 2 pi N dx dy (K depends on y only).
inline double gauss_bonnet_integral(const TorusConfig& cfg, const Deformation& d,
                                    CurvatureMode mode = CurvatureMode::PaperLiteral) {
  auto integrand = [&](double y) { return 2.0 * kPi * cfg.n_phi * gauss_curvature(cfg, d, y, mode); };
  double prev = numerics::integrate_1d(integrand, 0.0, 1.0, 48, 8);
  for (int panels = 16; panels <= 256; panels *= 2) {
    const double next = numerics::integrate_1d(integrand, 0.0, 1.0, 48, panels);
    if (std::abs(next - prev) < 1e-13) return next;
    prev = next;
  }
  return prev;
}

}  // namespace torus_hall
