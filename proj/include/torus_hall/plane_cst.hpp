#pragma once

// Plane track: Hermite functions h_m^a, the heat-kernel transform on R and its
// complexified images at z_s = x + i s p, and the plane Laughlin state.

#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "torus_hall/errors.hpp"
#include "torus_hall/numerics.hpp"
#include "torus_hall/theta.hpp"

namespace torus_hall::plane {

struct PlaneCSTConfig {
  double s = 1.0;
  int m = 0;
  double a = 2.0;

  void validate() const {
    if (!(s > 0.0)) throw InvalidArgument("plane transform needs s > 0");
    if (m < 0) throw InvalidArgument("Hermite index must be >= 0");
    if (!(a > 0.0)) throw InvalidArgument("Hermite scale a must be > 0");
  }
};

struct PlanePoint {
  double x = 0.0;
  double p = 0.0;

  cplx z(double s) const { return {x, s * p}; }
};

/// H^a_m with H^a_0 = 1, H^a_1 = 2x/a, H^a_{m+1} = (2x/a) H^a_m - (2m/a) H^a_{m-1}.
template <class T>
T hermite_poly(int m, double a, T x) {
  if (m < 0) throw InvalidArgument("Hermite index must be >= 0");
  if (!(a > 0.0)) throw InvalidArgument("Hermite scale a must be > 0");
  T prev = T(1.0);
  if (m == 0) return prev;
  T cur = (2.0 / a) * x;
  for (int k = 1; k < m; ++k) {
    T next = (2.0 / a) * x * cur - (2.0 * k / a) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Physicists' H_m (a = 1).
template <class T>
T hermite_physicists(int m, T x) { return hermite_poly(m, 1.0, x); }

/// h_m^a(x) = d^m/dx^m exp(-x^2/a) = (-1)^m exp(-x^2/a) H^a_m(x).
inline double hermite_fn(int m, double a, double x) {
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;
  return sign * std::exp(-x * x / a) * hermite_poly(m, a, x);
}

/// Largest normalized off-diagonal |G_mn| / sqrt(G_mm G_nn) of the Gram matrix of
/// h_0^a .. h_max^a, in L^2(dx) or, with `weighted`, in L^2(e^{x^2/a} dx).
inline double hermite_gram_offdiag(int max_m, double a, bool weighted = false) {
  const double half = std::sqrt(a * (weighted ? 40.0 : 20.0)) + 3.0;
  const auto rule = numerics::composite_rule(-half, half, 32, 64);
  std::vector<double> g(static_cast<std::size_t>(max_m + 1) * (max_m + 1), 0.0);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i];
    const double w = rule.weights[i] * (weighted ? std::exp(x * x / a) : 1.0);
    for (int m = 0; m <= max_m; ++m) {
      for (int n = 0; n <= max_m; ++n) g[m * (max_m + 1) + n] += w * hermite_fn(m, a, x) * hermite_fn(n, a, x);
    }
  }
  double worst = 0.0;
  for (int m = 0; m <= max_m; ++m) {
    for (int n = 0; n <= max_m; ++n) {
      if (m == n) continue;
      const double d = std::sqrt(g[m * (max_m + 1) + m] * g[n * (max_m + 1) + n]);
      worst = std::max(worst, std::abs(g[m * (max_m + 1) + n]) / d);
    }
  }
  return worst;
}

using PlaneFn = std::function<cplx(double)>;

/// (2 pi s)^{-1/2} int exp(-(y - w)^2 / (2 s)) f(y) dy on a window around Re w.
/// s = 0 is the identity and needs real w.
inline cplx heat_evolve(const PlaneFn& f, double s, cplx w) {
  if (s < 0.0) throw InvalidArgument("heat_evolve needs s >= 0");
  if (s == 0.0) {
    if (w.imag() != 0.0) throw InvalidArgument("heat_evolve at s = 0 needs real w");
    return f(w.real());
  }
  const double growth = w.imag() * w.imag() / (2.0 * s);
  if (growth > 700.0) {
    throw NonconvergentParameter("heat_evolve: Im(w)^2 / (2s) = " + std::to_string(growth) +
                                 " overflows the kernel");
  }
  constexpr double kEps = 1e-14;
  const double half = std::sqrt(2.0 * s * std::log(1.0 / kEps)) + std::abs(w.imag()) + 5.0;
  // 32 nodes per panel; panels are one unit long, shorter when the kernel is narrower.
  const double width = std::min(1.0, std::sqrt(s));
  const int panels = static_cast<int>(std::ceil(2.0 * half / width));
  const auto rule = numerics::composite_rule(w.real() - half, w.real() + half, 32, panels);
  cplx sum{0.0, 0.0};
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double y = rule.nodes[i];
    const cplx d = y - w;
    sum += rule.weights[i] * std::exp(-d * d / (2.0 * s)) * f(y);
  }
  return sum / std::sqrt(2.0 * kPi * s);
}

/// exp(-s p^2 / 2) heat_evolve(h_m^{2s}, s, x + i s p).
inline cplx plane_cst_image(int m, double s, double x, double p) {
  PlaneCSTConfig{s, m, 2.0 * s}.validate();
  const PlaneFn h = [m, s](double y) { return cplx(hermite_fn(m, 2.0 * s, y), 0.0); };
  return std::exp(-s * p * p / 2.0) * heat_evolve(h, s, cplx(x, s * p));
}

/// Literal closed form exp(-i x p / (2 s)) z_s^m exp(-|z_s|^2 / (4 s)).
inline cplx proposition_form_literal(int m, double s, double x, double p) {
  const cplx z(x, s * p);
  return std::polar(1.0, -x * p / (2.0 * s)) * std::pow(z, m) * std::exp(-std::norm(z) / (4.0 * s));
}

/// Exact image: c(m, s) exp(-i x p / 2) H_m(z_s / (2 sqrt s)) exp(-|z_s|^2 / (4 s)),
/// c(m, s) = (-1)^m (4 s)^{-m/2} / sqrt 2 (physicists' H_m).
inline cplx proposition_form_exact(int m, double s, double x, double p) {
  const cplx z(x, s * p);
  return std::polar(1.0, -x * p / 2.0) * hermite_physicists(m, z / (2.0 * std::sqrt(s))) *
         std::exp(-std::norm(z) / (4.0 * s));
}

inline double proposition_constant_exact(int m, double s) {
  return ((m % 2 == 0) ? 1.0 : -1.0) * std::pow(4.0 * s, -0.5 * m) / std::sqrt(2.0);
}

enum class PropositionForm { Literal, Exact };

inline cplx proposition_form(PropositionForm form, int m, double s, double x, double p) {
  return form == PropositionForm::Literal ? proposition_form_literal(m, s, x, p)
                                          : proposition_form_exact(m, s, x, p);
}

/// c(m, s) measured as image / closed form at (x, p) = (0.1, 0.1).
inline cplx proposition_constant(int m, double s, PropositionForm form = PropositionForm::Exact) {
  return plane_cst_image(m, s, 0.1, 0.1) / proposition_form(form, m, s, 0.1, 0.1);
}

struct RatioSpread {
  double spread = 0.0;  // max |r - r_ref| / |r_ref|
  cplx reference{0.0, 0.0};
  int points = 0;
};

/// Spread of image / closed form over a grid with |x|, |s p| <= extent.
inline RatioSpread proposition_ratio_spread(int m, double s, PropositionForm form, int per_axis = 6,
                                            double extent = 3.0) {
  RatioSpread r;
  r.reference = proposition_constant(m, s, form);
  for (int i = 0; i < per_axis; ++i) {
    for (int j = 0; j < per_axis; ++j) {
      const double x = -extent + 2.0 * extent * (i + 0.5) / per_axis;
      const double sp = -extent + 2.0 * extent * (j + 0.5) / per_axis;
      const cplx closed = proposition_form(form, m, s, x, sp / s);
      if (std::abs(closed) < 1e-280) continue;
      const cplx ratio = plane_cst_image(m, s, x, sp / s) / closed;
      r.spread = std::max(r.spread, std::abs(ratio - r.reference) / std::abs(r.reference));
      ++r.points;
    }
  }
  return r;
}

/// max_x |e_{s2}(e_{s1} f)(x) - e_{s1+s2} f(x)| / max_x |e_{s1+s2} f(x)| over `xs`.
inline double heat_semigroup_check(const PlaneFn& f, double s1, double s2, std::span<const double> xs) {
  const PlaneFn once = [&](double y) { return heat_evolve(f, s1, y); };
  double worst = 0.0;
  double scale = 0.0;
  for (double x : xs) {
    const cplx two_step = heat_evolve(once, s2, x);
    const cplx direct = heat_evolve(f, s1 + s2, x);
    worst = std::max(worst, std::abs(two_step - direct));
    scale = std::max(scale, std::abs(direct));
  }
  return scale > 0.0 ? worst / scale : worst;
}

/// prod_{i<j} (z_i - z_j)^3 exp(-sum |z_k|^2 / (4 s)), z = x + i s p.
inline cplx plane_laughlin(double s, std::span<const PlanePoint> pts) {
  if (pts.size() < 2) throw InvalidArgument("plane Laughlin state needs N >= 2");
  if (!(s > 0.0)) throw InvalidArgument("plane Laughlin state needs s > 0");
  cplx v{1.0, 0.0};
  double gauss = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    gauss += std::norm(pts[i].z(s));
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const cplx d = pts[i].z(s) - pts[j].z(s);
      v *= d * d * d;
    }
  }
  return v * std::exp(-gauss / (4.0 * s));
}

}  // namespace torus_hall::plane
