#pragma once

// Normalization and one-body densities of torus states, plus the 1D peak
// diagnostics used for the large-s concentration checks.
//
// Magnitudes are handled in log form: every integrand is exp(log|Psi|^2 - L)
// for a reference L taken from a coarse sample, and L is carried alongside the
// result.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "torus_hall/errors.hpp"
#include "torus_hall/geometry.hpp"
#include "torus_hall/numerics.hpp"
#include "torus_hall/states.hpp"

namespace torus_hall {

enum class NormMethod { Auto, ClosedForm, Quadrature, MonteCarlo };

inline const char* to_string(NormMethod m) {
  switch (m) {
    case NormMethod::Auto: return "auto";
    case NormMethod::ClosedForm: return "closed_form";
    case NormMethod::Quadrature: return "quadrature";
    case NormMethod::MonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

struct IntegrationSpec {
  NormMethod method = NormMethod::Auto;
  numerics::QuadratureSpec quad{};
  numerics::MCSpec mc{};
  unsigned threads = 1;
};

struct NormResult {
  double norm2 = 0.0;       // may be +inf if the state is huge; see log_norm2
  double std_error = 0.0;   // absolute, same units as norm2
  double log_norm2 = 0.0;
  double log_reference = 0.0;
  NormMethod method = NormMethod::ClosedForm;
};

namespace detail {

inline std::vector<CoverPoint> unpack(std::span<const double> u) {
  std::vector<CoverPoint> pts(u.size() / 2);
  for (std::size_t j = 0; j < pts.size(); ++j) pts[j] = {u[2 * j], u[2 * j + 1]};
  return pts;
}

/// Largest log|Psi|^2 over a deterministic coarse sample of configurations.
inline double log_reference(const EvolvedState& state) {
  const int n = state.particles();
  auto rng = numerics::stream_for(0x5EEDULL, static_cast<std::uint64_t>(n));
  double best = -std::numeric_limits<double>::infinity();
  std::vector<CoverPoint> pts(n);
  for (int trial = 0; trial < 256; ++trial) {
    for (auto& p : pts) p = {numerics::uniform01(rng), numerics::uniform01(rng)};
    best = std::max(best, state.log_abs2(pts));
  }
  if (!std::isfinite(best)) throw InvalidArgument("state vanishes on every sampled configuration");
  return best;
}

inline NormMethod resolve(NormMethod m, const EvolvedState& state) {
  if (m != NormMethod::Auto) return m;
  if (state.kind() == StateKind::SingleParticle && state.deformation().kind() == DeformationKind::FlatQuadratic) {
    return NormMethod::ClosedForm;
  }
  return 2 * state.particles() <= 4 ? NormMethod::Quadrature : NormMethod::MonteCarlo;
}

// Panels per axis so that each y-Gaussian of width 1/sqrt(4 pi N tau2) spans
// about one 48-node panel or more.
inline numerics::QuadratureSpec resolve_panels(numerics::QuadratureSpec q, const EvolvedState& state) {
  if (q.panels_per_axis > 0) return q;
  const TorusConfig& cfg = state.cfg();
  double tau2 = cfg.tau.tau2();
  if (state.deformation().kind() == DeformationKind::FlatQuadratic) {
    tau2 = flat_frame(cfg, state.deformation().s(), cfg.n_phi).tau_s.imag();
  }
  const double sigma = 1.0 / std::sqrt(4.0 * kPi * cfg.n_phi * tau2);
  q.panels_per_axis = std::max(1, static_cast<int>(std::ceil(0.08 / sigma)));
  return q;
}

}  // namespace detail

/// Squared norm of `state` over the product of fundamental domains.
inline NormResult normalize(const EvolvedState& state, const IntegrationSpec& spec = {}) {
  NormResult r;
  r.method = detail::resolve(spec.method, state);
  if (r.method == NormMethod::ClosedForm) {
    if (state.kind() != StateKind::SingleParticle ||
        state.deformation().kind() != DeformationKind::FlatQuadratic) {
      throw InvalidArgument("closed-form norm exists only for flat one-particle states");
    }
    const TorusConfig& cfg = state.cfg();
    const double tau2_s = flat_frame(cfg, state.deformation().s(), cfg.n_phi).tau_s.imag();
    r.norm2 = lll_norm2_closed_form(cfg.n_phi, tau2_s);
    r.log_norm2 = std::log(r.norm2);
    return r;
  }

  r.log_reference = detail::log_reference(state);
  const double ref = r.log_reference;
  auto integrand = [&](std::span<const double> u) {
    const auto pts = detail::unpack(u);
    return std::exp(state.log_abs2(pts) - ref);
  };
  const int dims = 2 * state.particles();
  double mean = 0.0;
  double se = 0.0;
  if (r.method == NormMethod::Quadrature) {
    mean = numerics::gauss_legendre(integrand, dims, detail::resolve_panels(spec.quad, state), spec.threads);
  } else {
    const auto est = numerics::monte_carlo(integrand, dims, spec.mc, spec.threads);
    mean = est.mean;
    se = est.std_error;
  }
  if (!(mean > 0.0)) throw InvalidArgument("state norm evaluated to zero");
  r.log_norm2 = std::log(mean) + ref;
  r.norm2 = std::exp(r.log_norm2);
  r.std_error = se * std::exp(ref);
  return r;
}

// ---------------------------------------------------------------------------
// Integrated density along y

/// rho(y) = sqrt(2 N tau2_s) sum_n exp(-2 pi N tau2_s (y + n + l/N)^2); unit mass on [0, 1).
inline std::function<double(double)> integrated_density_y(const TorusConfig& cfg, int l, double s) {
  detail::check_level(cfg, l);
  const double n = cfg.n_phi;
  const double tau2_s = flat_frame(cfg, s, cfg.n_phi).tau_s.imag();
  const double a = 2.0 * kPi * n * tau2_s;
  const int reach = static_cast<int>(std::ceil(std::sqrt(-std::log(1e-15) / a))) + 2;
  const double shift = static_cast<double>(l) / cfg.n_phi;
  const double amp = std::sqrt(2.0 * n * tau2_s);
  return [=](double y) {
    const double c = y + shift - std::floor(y + shift);
    double sum = 0.0;
    for (int k = -reach; k <= reach; ++k) {
      const double d = c + k;
      sum += std::exp(-a * d * d);
    }
    return amp * sum;
  };
}

// ---------------------------------------------------------------------------
// Density grids

struct DensityGrid {
  int nx = 0;
  int ny = 0;
  int particles = 1;
  std::vector<double> values;  // row-major, x fastest: values[iy * nx + ix]
  double norm_used = 0.0;
  double log_norm_used = 0.0;
  NormMethod method = NormMethod::ClosedForm;
  std::optional<std::vector<double>> std_error;

  double x(int ix) const { return (ix + 0.5) / nx; }
  double y(int iy) const { return (iy + 0.5) / ny; }
  double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * nx + ix]; }
  /// Midpoint-rule integral over the fundamental domain.
  double total() const {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / (static_cast<double>(nx) * ny);
  }
};

/// One-body density n * int |Psi(p, z_2..z_n)|^2 / ||Psi||^2 at cell-centred nodes.
/// Many-body inner integrals use quadrature or Monte Carlo per `spec`; in the
/// Monte Carlo case every node draws from its own stream, seeded by node index.
inline DensityGrid density_grid(const EvolvedState& state, int nx, int ny, const IntegrationSpec& spec = {},
                                std::optional<NormResult> norm = std::nullopt) {
  if (nx < 1 || ny < 1) throw InvalidArgument("density grid needs nx, ny >= 1");
  const int n = state.particles();
  DensityGrid g;
  g.nx = nx;
  g.ny = ny;
  g.particles = n;
  g.values.assign(static_cast<std::size_t>(nx) * ny, 0.0);

  NormResult nr = norm ? *norm : normalize(state, spec);
  g.norm_used = nr.norm2;
  g.log_norm_used = nr.log_norm2;
  g.method = nr.method;

  const std::size_t nodes = g.values.size();
  if (n == 1) {
    numerics::parallel_for(nodes, spec.threads, [&](std::size_t idx) {
      const CoverPoint p{g.x(static_cast<int>(idx % nx)), g.y(static_cast<int>(idx / nx))};
      g.values[idx] = std::exp(state.log_abs2(std::span<const CoverPoint>(&p, 1)) - nr.log_norm2);
    });
    return g;
  }

  const double ref = nr.log_norm2;
  const int dims = 2 * (n - 1);
  const bool use_mc = spec.method == NormMethod::MonteCarlo ||
                      (spec.method == NormMethod::Auto && nr.method == NormMethod::MonteCarlo);
  g.method = use_mc ? NormMethod::MonteCarlo : NormMethod::Quadrature;
  if (use_mc) g.std_error = std::vector<double>(nodes, 0.0);
  const numerics::QuadratureSpec inner_quad = detail::resolve_panels(spec.quad, state);

  numerics::parallel_for(nodes, spec.threads, [&](std::size_t idx) {
    const CoverPoint first{g.x(static_cast<int>(idx % nx)), g.y(static_cast<int>(idx / nx))};
    auto inner = [&](std::span<const double> u) {
      std::vector<CoverPoint> pts(n);
      pts[0] = first;
      for (int j = 1; j < n; ++j) pts[j] = {u[2 * (j - 1)], u[2 * (j - 1) + 1]};
      return std::exp(state.log_abs2(pts) - ref);
    };
    if (use_mc) {
      numerics::MCSpec node_spec = spec.mc;
      node_spec.seed = numerics::splitmix64(spec.mc.seed ^ numerics::splitmix64(idx + 0x9E37ULL));
      const auto est = numerics::monte_carlo(inner, dims, node_spec, 1);
      g.values[idx] = n * est.mean;
      (*g.std_error)[idx] = n * est.std_error;
    } else {
      g.values[idx] = n * numerics::gauss_legendre(inner, dims, inner_quad, 1);
    }
  });
  return g;
}

// ---------------------------------------------------------------------------
// Filled level, one-particle sum

/// Flat: sqrt(2 N tau2_s) sum_l |theta_{l/N}(N z_s, N tau_s) exp(i pi N tau_s y^2)|^2.
inline std::function<double(double, double)> iqhe_density_fast(const TorusConfig& cfg, double s) {
  const int n = cfg.n_phi;
  const cplx tau_s = flat_frame(cfg, s, n).tau_s;
  const double amp = std::sqrt(2.0 * n * tau_s.imag());
  return [=](double x, double y) {
    double sum = 0.0;
    for (int l = 0; l < n; ++l) sum += std::exp(detail::lll_factor(l, n, x + tau_s * y, y, tau_s).log_abs2());
    return amp * sum;
  };
}

/// Non-flat: sum_l |phi_l|^2 / ||phi_l||^2 with phi_l = lll_evolved_nonflat(l) and
/// numerically computed norms. The evolved one-particle states keep distinct x
/// Fourier content, so they remain orthogonal and the sum is the exact density.
inline std::function<double(double, double)> iqhe_density_fast(const TorusConfig& cfg, const Deformation& d,
                                                             const numerics::QuadratureSpec& quad = {}) {
  if (!d.periodic()) return iqhe_density_fast(cfg, d.s());
  std::vector<EvolvedState> states;
  std::vector<double> log_norms;
  IntegrationSpec spec;
  spec.method = NormMethod::Quadrature;
  spec.quad = quad;
  for (int l = 0; l < cfg.n_phi; ++l) {
    states.push_back(lll_evolved_nonflat(cfg, l, d));
    log_norms.push_back(normalize(states.back(), spec).log_norm2);
  }
  return [states, log_norms](double x, double y) {
    const CoverPoint p{x, y};
    double sum = 0.0;
    for (std::size_t l = 0; l < states.size(); ++l) {
      sum += std::exp(states[l].log_abs2(std::span<const CoverPoint>(&p, 1)) - log_norms[l]);
    }
    return sum;
  };
}

inline DensityGrid sample_grid(const std::function<double(double, double)>& rho, int nx, int ny, int particles,
                               unsigned threads = 1) {
  DensityGrid g;
  g.nx = nx;
  g.ny = ny;
  g.particles = particles;
  g.method = NormMethod::ClosedForm;
  g.values.assign(static_cast<std::size_t>(nx) * ny, 0.0);
  numerics::parallel_for(g.values.size(), threads, [&](std::size_t idx) {
    g.values[idx] = rho(g.x(static_cast<int>(idx % nx)), g.y(static_cast<int>(idx / nx)));
  });
  return g;
}

// ---------------------------------------------------------------------------
// Peaks

struct PeakReport {
  std::vector<double> centers;  // mod 1
  std::vector<double> widths;   // Gaussian sigma
  std::vector<double> heights;
  bool degenerate = false;      // flat profile, no peaks extracted
};

/// Local maxima of a 1-periodic profile sampled at i / resolution, refined by a
/// least-squares parabola through log(profile) on +-3 samples.
inline PeakReport peak_report(const std::function<double(double)>& profile, int resolution = 256) {
  if (resolution < 8) throw InvalidArgument("peak_report resolution must be >= 8");
  std::vector<double> v(resolution);
  for (int i = 0; i < resolution; ++i) v[i] = profile(static_cast<double>(i) / resolution);
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  PeakReport rep;
  if (!(*mx > 0.0) || *mx - *mn <= 1e-12 * std::abs(*mx)) {
    rep.degenerate = true;
    return rep;
  }
  const double step = 1.0 / resolution;
  auto at = [&](int i) { return v[((i % resolution) + resolution) % resolution]; };
  for (int i = 0; i < resolution; ++i) {
    if (!(v[i] > 1e-3 * *mx) || !(v[i] > at(i - 1)) || !(v[i] >= at(i + 1))) continue;
    // Fit log v = c0 + c1 t + c2 t^2, t in samples; symmetric t makes the normal equations decouple.
    double s0 = 0, s2 = 0, s4 = 0, b0 = 0, b1 = 0, b2 = 0;
    bool ok = true;
    for (int t = -3; t <= 3; ++t) {
      const double val = at(i + t);
      if (!(val > 0.0)) {
        ok = false;
        break;
      }
      const double lv = std::log(val);
      s0 += 1;
      s2 += t * t;
      s4 += t * t * t * t;
      b0 += lv;
      b1 += t * lv;
      b2 += t * t * lv;
    }
    if (!ok) continue;
    const double c1 = b1 / s2;
    const double det = s0 * s4 - s2 * s2;
    const double c2 = (s0 * b2 - s2 * b0) / det;
    const double c0 = (s4 * b0 - s2 * b2) / det;
    if (!(c2 < 0.0)) continue;
    const double offset = -c1 / (2.0 * c2);
    double center = (i + offset) * step;
    center -= std::floor(center);
    if (center >= 1.0) center = 0.0;
    rep.centers.push_back(center);
    rep.widths.push_back(std::sqrt(-1.0 / (2.0 * c2)) * step);
    rep.heights.push_back(std::exp(c0 - c1 * c1 / (4.0 * c2)));
  }
  if (rep.centers.empty()) rep.degenerate = true;
  return rep;
}

// ---------------------------------------------------------------------------
// Curvature against density change

struct CurvatureDensityReport {
  std::vector<double> y;
  std::vector<double> abs_curvature;
  std::vector<double> mean_abs_change;  // mean over x of |rho_s - rho_0|
  double pearson = 0.0;
};

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

/// Filled-level density change under the deformation `d` against |K(y)|.
inline CurvatureDensityReport curvature_density_correlation(const TorusConfig& cfg, const Deformation& d,
                                                            int nx = 32, int ny = 64,
                                                            CurvatureMode mode = CurvatureMode::PaperLiteral) {
  require_subcritical(cfg, d);
  const auto rho_s = iqhe_density_fast(cfg, d);
  const auto rho_0 = iqhe_density_fast(cfg, 0.0);
  CurvatureDensityReport rep;
  for (int iy = 0; iy < ny; ++iy) {
    const double y = (iy + 0.5) / ny;
    double change = 0.0;
    for (int ix = 0; ix < nx; ++ix) {
      const double x = (ix + 0.5) / nx;
      change += std::abs(rho_s(x, y) - rho_0(x, y));
    }
    rep.y.push_back(y);
    rep.abs_curvature.push_back(std::abs(gauss_curvature(cfg, d, y, mode)));
    rep.mean_abs_change.push_back(change / nx);
  }
  rep.pearson = pearson(rep.abs_curvature, rep.mean_abs_change);
  return rep;
}

}  // namespace torus_hall
