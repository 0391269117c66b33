#pragma once

// Lowest-Landau-level states on the torus in the unitary gauge: one-particle
// sections, the filled level (IQHE) and Laughlin states, together with their
// images under the flat and the y-dependent coherent state transforms.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "torus_hall/errors.hpp"
#include "torus_hall/geometry.hpp"
#include "torus_hall/theta.hpp"

namespace torus_hall {

struct ManyBodyConfig {
  int n_e = 2;
  int k = 1;
  int l = 0;

  ManyBodyConfig() = default;
  ManyBodyConfig(int n_e_, int k_, int l_) : n_e(n_e_), k(k_), l(l_) { validate(); }

  void validate() const {
    if (n_e < 1) throw InvalidArgument("n_e must be >= 1, got " + std::to_string(n_e));
    if (k < 1 || k % 2 == 0) throw InvalidArgument("k must be an odd positive integer, got " + std::to_string(k));
    if (l < 0 || l >= k) throw InvalidArgument("l must satisfy 0 <= l < k, got l = " + std::to_string(l));
  }
  int n_phi() const { return k * n_e; }
};

enum class StateKind { SingleParticle, Integer, Laughlin };

/// How the y-dependent transform acts on many-body states.
///   Operator: every z_j is mapped to z_j + i s H'(y_j) / (2 pi N_phi) and picks up
///             exp(s (H(y_j) - y_j H'(y_j))); doubly periodic density.
///   Displayed: center-of-mass and pairwise shifts evaluated at Y = sum y_j and
///             y_i - y_j. Kept for comparison; |Psi|^2 is not periodic in y.
enum class NonflatForm { Operator, Displayed };

using Evaluator = std::function<ScaledValue(std::span<const CoverPoint>)>;

class EvolvedState {
 public:
  EvolvedState(StateKind kind, int index, TorusConfig cfg, Deformation d, int particles, Evaluator eval)
      : kind_(kind), index_(index), cfg_(cfg), deformation_(std::move(d)), particles_(particles),
        eval_(std::move(eval)) {}

  StateKind kind() const { return kind_; }
  int index() const { return index_; }
  const TorusConfig& cfg() const { return cfg_; }
  const Deformation& deformation() const { return deformation_; }
  int particles() const { return particles_; }

  ScaledValue scaled(std::span<const CoverPoint> pts) const {
    if (static_cast<int>(pts.size()) != particles_) {
      throw InvalidArgument("state expects " + std::to_string(particles_) + " coordinates, got " +
                            std::to_string(pts.size()));
    }
    return eval_(pts);
  }
  cplx operator()(std::span<const CoverPoint> pts) const { return scaled(pts).value(); }
  cplx operator()(const CoverPoint& p) const { return scaled(std::span<const CoverPoint>(&p, 1)).value(); }
  cplx operator()(const TorusPoint& p) const { return (*this)(p.lift()); }
  double log_abs2(std::span<const CoverPoint> pts) const { return scaled(pts).log_abs2(); }

 private:
  StateKind kind_;
  int index_;
  TorusConfig cfg_;
  Deformation deformation_;
  int particles_;
  Evaluator eval_;
};

struct SpectralData {
  int l = 0;
  int n_phi = 1;
  cplx s_eigenvalue{1.0, 0.0};
  double qh_eigenvalue = 0.0;
};

/// ((lambda - 1/lambda) / 2i)^2.
inline cplx qh_from_eigenvalue(cplx lambda) {
  const cplx w = (lambda - 1.0 / lambda) / (2.0 * kI);
  return w * w;
}

namespace detail {

inline void check_level(const TorusConfig& cfg, int l) {
  if (l < 0 || l >= cfg.n_phi) {
    throw InvalidArgument("level index l must satisfy 0 <= l < n_phi = " + std::to_string(cfg.n_phi) +
                          ", got " + std::to_string(l));
  }
}

inline void check_periodic(const Deformation& d) {
  if (!d.periodic()) throw InvalidArgument("non-flat evolution needs a periodic deformation");
}

inline double sin2(double v) {
  const double t = std::sin(v);
  return t * t;
}

// theta_{l/N}(N z, N tau) exp(i pi N tau y^2) at modular parameter tau.
inline ScaledValue lll_factor(int l, int n, cplx z, double y, cplx tau) {
  ScaledValue v = theta_char_scaled({static_cast<double>(l) / n, 0.0}, static_cast<double>(n) * z,
                                    ModularParam(static_cast<double>(n) * tau));
  v.mul_exp(kI * kPi * static_cast<double>(n) * tau * y * y);
  return v.normalized();
}

// theta[char_a; char_b](k W, k tau) prod_{i<j} theta11(w_i - w_j, tau)^k exp(i pi tau n_phi sum y^2)
// where w_j are (possibly shifted) holomorphic coordinates.
inline ScaledValue laughlin_core(const ThetaChar& cm, int k, int n_phi, std::span<const cplx> w,
                                 std::span<const CoverPoint> pts, cplx tau) {
  const ModularParam t(tau);
  cplx big_w{0.0, 0.0};
  double y2 = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    big_w += w[j];
    y2 += pts[j].y * pts[j].y;
  }
  ScaledValue v = theta_char_scaled(cm, static_cast<double>(k) * big_w, t.scaled(k));
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = i + 1; j < w.size(); ++j) v *= theta11_scaled(w[i] - w[j], t).pow(k);
  }
  v.mul_exp(kI * kPi * tau * static_cast<double>(n_phi) * y2);
  return v.normalized();
}

inline ThetaChar laughlin_char(const ManyBodyConfig& mb) {
  return {(mb.n_e - 1) / (2.0 * mb.k) + static_cast<double>(mb.l) / mb.k, (mb.n_e - 1) / 2.0};
}

// Flat evolution: base formula at tau_s, z_j -> x_j + tau_s y_j.
inline Evaluator flat_laughlin_evaluator(const ManyBodyConfig& mb, cplx tau_s) {
  const ThetaChar cm = laughlin_char(mb);
  return [mb, cm, tau_s](std::span<const CoverPoint> pts) {
    std::vector<cplx> w(pts.size());
    for (std::size_t j = 0; j < pts.size(); ++j) w[j] = pts[j].x + tau_s * pts[j].y;
    return laughlin_core(cm, mb.k, mb.n_phi(), w, pts, tau_s);
  };
}

inline Evaluator nonflat_laughlin_evaluator(const ManyBodyConfig& mb, const TorusConfig& cfg,
                                            const Deformation& d, NonflatForm form) {
  const ThetaChar cm = laughlin_char(mb);
  const cplx tau = cfg.tau.value();
  const double s = d.s();
  const int n_phi = mb.n_phi();
  const int k = mb.k;
  const double spectral = -s * sin2(2.0 * kPi * cm.a);
  if (form == NonflatForm::Operator) {
    return [=](std::span<const CoverPoint> pts) {
      std::vector<cplx> w(pts.size());
      double log_pref = spectral;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        const auto hv = d.values(pts[j].y);
        w[j] = pts[j].z(cfg.tau) + kI * s * hv.h1 / (2.0 * kPi * n_phi);
        log_pref += s * (hv.h - pts[j].y * hv.h1);
      }
      ScaledValue v = laughlin_core(cm, k, n_phi, w, pts, tau);
      v.mul_exp(log_pref);
      return v.normalized();
    };
  }
  return [=](std::span<const CoverPoint> pts) {
    const ModularParam t = cfg.tau;
    cplx big_z{0.0, 0.0};
    double big_y = 0.0;
    double y2 = 0.0;
    for (const auto& p : pts) {
      big_z += p.z(t);
      big_y += p.y;
      y2 += p.y * p.y;
    }
    const auto hy = d.values(big_y);
    ScaledValue v = theta_char_scaled(cm, static_cast<double>(k) * (big_z + kI * s * hy.h1 / (2.0 * kPi * n_phi)),
                                      t.scaled(k));
    v.mul_exp(spectral + s * (hy.h - big_y * hy.h1));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const double yij = pts[i].y - pts[j].y;
        const auto hij = d.values(yij);
        ScaledValue pair = theta11_scaled(pts[i].z(t) - pts[j].z(t) + kI * s * hij.h1 / (2.0 * kPi * n_phi), t);
        pair.mul_exp(s * (hij.h - yij * hij.h1));
        v *= pair.pow(k);
      }
    }
    v.mul_exp(kI * kPi * tau * static_cast<double>(n_phi) * y2);
    return v.normalized();
  };
}

}  // namespace detail

// ---------------------------------------------------------------------------
// One particle

/// Squared L^2 norm of the flat-evolved one-particle state, 1 / sqrt(2 N tau2_s).
inline double lll_norm2_closed_form(int n_phi, double tau2_s) {
  return 1.0 / std::sqrt(2.0 * n_phi * tau2_s);
}

/// Half-form norm factor ||dz_s^{1/2}||^2 = sqrt(tau2_s / (2 pi N)).
inline double half_form_factor(int n_phi, double tau2_s) {
  return std::sqrt(tau2_s / (2.0 * kPi * n_phi));
}

/// exp(i pi N tau y^2) theta_{l/N}(N z, N tau).
inline EvolvedState lll_state(const TorusConfig& cfg, int l) {
  detail::check_level(cfg, l);
  const int n = cfg.n_phi;
  const cplx tau = cfg.tau.value();
  return EvolvedState(StateKind::SingleParticle, l, cfg, Deformation::flat_quadratic(0.0), 1,
                      [l, n, tau](std::span<const CoverPoint> p) {
                        return detail::lll_factor(l, n, p[0].x + tau * p[0].y, p[0].y, tau);
                      });
}

inline EvolvedState lll_evolved_flat(const TorusConfig& cfg, int l, double s) {
  detail::check_level(cfg, l);
  const int n = cfg.n_phi;
  const cplx tau_s = flat_frame(cfg, s, n).tau_s;
  return EvolvedState(StateKind::SingleParticle, l, cfg, Deformation::flat_quadratic(s), 1,
                      [l, n, tau_s](std::span<const CoverPoint> p) {
                        return detail::lll_factor(l, n, p[0].x + tau_s * p[0].y, p[0].y, tau_s);
                      });
}

inline SpectralData spectral_data(const TorusConfig& cfg, int l) {
  detail::check_level(cfg, l);
  const double angle = 2.0 * kPi * l / cfg.n_phi;
  return {l, cfg.n_phi, std::polar(1.0, -angle), detail::sin2(angle)};
}

/// exp(s (H - y H')) exp(-s Q_l) theta_{l/N}(N (z + i s H'/(2 pi N)), N tau) exp(i pi N tau y^2),
/// Q_l the eigenvalue of Q(H) on the l-th state (sin^2(2 pi l / N) for the sine family).
inline EvolvedState lll_evolved_nonflat(const TorusConfig& cfg, int l, const Deformation& d) {
  detail::check_level(cfg, l);
  detail::check_periodic(d);
  const int n = cfg.n_phi;
  const cplx tau = cfg.tau.value();
  const double s = d.s();
  const double spectral = -s * spectral_data(cfg, l).qh_eigenvalue;
  return EvolvedState(StateKind::SingleParticle, l, cfg, d, 1,
                      [=](std::span<const CoverPoint> p) {
                        const double y = p[0].y;
                        const auto hv = d.values(y);
                        const cplx z = p[0].x + tau * y + kI * s * hv.h1 / (2.0 * kPi * n);
                        ScaledValue v = detail::lll_factor(l, n, z, 0.0, tau);
                        v.mul_exp(kI * kPi * static_cast<double>(n) * tau * y * y + s * (hv.h - y * hv.h1) +
                                  spectral);
                        return v.normalized();
                      });
}

// ---------------------------------------------------------------------------
// Many body

inline EvolvedState laughlin_evolved_flat(const TorusConfig& base, const ManyBodyConfig& mb, double s) {
  mb.validate();
  const TorusConfig cfg(base.tau, mb.n_phi());
  const cplx tau_s = flat_frame(cfg, s, mb.n_phi()).tau_s;
  return EvolvedState(mb.k == 1 ? StateKind::Integer : StateKind::Laughlin, mb.l, cfg,
                      Deformation::flat_quadratic(s), mb.n_e, detail::flat_laughlin_evaluator(mb, tau_s));
}

inline EvolvedState laughlin_state(const ModularParam& tau, const ManyBodyConfig& mb) {
  return laughlin_evolved_flat(TorusConfig(tau, mb.n_phi()), mb, 0.0);
}

inline EvolvedState laughlin_evolved_nonflat(const TorusConfig& base, const ManyBodyConfig& mb,
                                             const Deformation& d, NonflatForm form = NonflatForm::Operator) {
  mb.validate();
  detail::check_periodic(d);
  const TorusConfig cfg(base.tau, mb.n_phi());
  return EvolvedState(mb.k == 1 ? StateKind::Integer : StateKind::Laughlin, mb.l, cfg, d, mb.n_e,
                      detail::nonflat_laughlin_evaluator(mb, cfg, d, form));
}

namespace detail {
inline ManyBodyConfig filled_level(const TorusConfig& cfg) {
  if (cfg.n_phi < 2) throw InvalidArgument("filled-level state needs N >= 2");
  return ManyBodyConfig(cfg.n_phi, 1, 0);
}
}  // namespace detail

/// theta[(N-1)/2; (N-1)/2](Z, tau) prod_{i<j} theta11(z_i - z_j, tau) exp(i pi tau N sum y^2).
inline EvolvedState iqhe_state(const TorusConfig& cfg) {
  return laughlin_evolved_flat(cfg, detail::filled_level(cfg), 0.0);
}

inline EvolvedState iqhe_evolved_flat(const TorusConfig& cfg, double s) {
  return laughlin_evolved_flat(cfg, detail::filled_level(cfg), s);
}

inline EvolvedState iqhe_evolved_nonflat(const TorusConfig& cfg, const Deformation& d,
                                         NonflatForm form = NonflatForm::Operator) {
  return laughlin_evolved_nonflat(cfg, detail::filled_level(cfg), d, form);
}

/// Slater determinant det[theta_{i/N}(N z_j, N tau) exp(i pi N tau y_j^2)] at tau_s.
/// Reference implementation for the filled level; O(N^3) per evaluation.
inline cplx slater_determinant(const TorusConfig& cfg, std::span<const CoverPoint> pts, double s = 0.0) {
  const int n = cfg.n_phi;
  if (static_cast<int>(pts.size()) != n) throw InvalidArgument("Slater determinant needs N points");
  const cplx tau_s = flat_frame(cfg, s, n).tau_s;
  std::vector<cplx> m(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m[i * n + j] = detail::lll_factor(i, n, pts[j].x + tau_s * pts[j].y, pts[j].y, tau_s).value();
    }
  }
  cplx det{1.0, 0.0};
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r) {
      if (std::abs(m[r * n + c]) > std::abs(m[piv * n + c])) piv = r;
    }
    if (m[piv * n + c] == cplx{0.0, 0.0}) return {0.0, 0.0};
    if (piv != c) {
      for (int j = 0; j < n; ++j) std::swap(m[c * n + j], m[piv * n + j]);
      det = -det;
    }
    det *= m[c * n + c];
    for (int r = c + 1; r < n; ++r) {
      const cplx f = m[r * n + c] / m[c * n + c];
      for (int j = c; j < n; ++j) m[r * n + j] -= f * m[c * n + j];
    }
  }
  return det;
}

}  // namespace torus_hall
