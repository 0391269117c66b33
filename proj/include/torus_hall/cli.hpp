#pragma once

// Helpers shared by the torus_hall command-line tool: scalar parsing, CSV
// formatting, exit-code mapping and the invariant suite behind `verify`.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <ostream>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "torus_hall/density.hpp"
#include "torus_hall/errors.hpp"
#include "torus_hall/geometry.hpp"
#include "torus_hall/numerics.hpp"
#include "torus_hall/plane_cst.hpp"
#include "torus_hall/states.hpp"
#include "torus_hall/theta.hpp"

namespace torus_hall::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kValidation = 2,
  kBudget = 3,
  kSingular = 4,
  kNumerical = 5,
};

/// "a+bi" or "a-bi", no spaces; a and b are decimal or exponent literals.
inline cplx parse_complex(const std::string& text) {
  static const std::regex re(R"(^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([+-](?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)i$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) {
    throw InvalidArgument("complex value must look like a+bi, got '" + text + "'");
  }
  return {std::stod(m[1].str()), std::stod(m[2].str())};
}

/// 17 significant digits, round-trip exact.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_complex(cplx z) {
  return fmt(z.real()) + (std::signbit(z.imag()) ? "-" : "+") + fmt(std::abs(z.imag())) + "i";
}

/// TORUS_HALL_THREADS beats the command-line value; 0 means hardware parallelism.
inline unsigned resolve_threads(unsigned requested, const char* env = std::getenv("TORUS_HALL_THREADS")) {
  if (env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw InvalidArgument(std::string("TORUS_HALL_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<unsigned>(v);
  }
  return requested == 0 ? numerics::hardware_threads() : requested;
}

struct ErrorInfo {
  int code = kOk;
  std::string type;
  std::string message;
};

/// Maps the active exception to an exit code; call from a catch block.
inline ErrorInfo classify_current_exception(bool allow_singular = false) {
  try {
    throw;
  } catch (const PastCriticalDeformation& e) {
    return {allow_singular ? kNumerical : kSingular, "PastCriticalDeformation", e.what()};
  } catch (const BudgetExceeded& e) {
    return {kBudget, "BudgetExceeded", e.what()};
  } catch (const InvalidArgument& e) {
    return {kValidation, "InvalidArgument", e.what()};
  } catch (const NonPeriodicHamiltonian& e) {
    return {kValidation, "NonPeriodicHamiltonian", e.what()};
  } catch (const NonconvergentParameter& e) {
    return {kNumerical, "NonconvergentParameter", e.what()};
  } catch (const NoBracket& e) {
    return {kNumerical, "NoBracket", e.what()};
  } catch (const Error& e) {
    return {kNumerical, "Error", e.what()};
  } catch (const std::exception& e) {
    return {kInternal, "std::exception", e.what()};
  } catch (...) {
    return {kInternal, "unknown", "unknown exception"};
  }
}

inline void write_density_csv(std::ostream& out, const DensityGrid& g) {
  const bool with_err = g.std_error.has_value();
  out << (with_err ? "x,y,rho,stderr\n" : "x,y,rho\n");
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t idx = static_cast<std::size_t>(iy) * g.nx + ix;
      out << fmt(g.x(ix)) << ',' << fmt(g.y(iy)) << ',' << fmt(g.values[idx]);
      if (with_err) out << ',' << fmt((*g.std_error)[idx]);
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Invariant suite

struct Check {
  std::string group;
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool informational = false;  // reported, not counted towards the exit status
  std::string note;
};

inline Check make_check(std::string group, std::string name, double residual, double tol, std::string note = {}) {
  Check c{std::move(group), std::move(name), residual, tol, residual < tol, false, std::move(note)};
  if (!std::isfinite(residual)) c.passed = false;
  return c;
}

struct VerifyOptions {
  std::set<std::string> only;  // empty: every group
  ModularParam tau{0.0, 1.0};
  int n_phi = 2;
  unsigned threads = 1;
  std::uint64_t seed = 1;
};

inline const std::vector<std::string>& verify_groups() {
  static const std::vector<std::string> g{"theta", "norms", "geometry", "spectral", "plane"};
  return g;
}

namespace detail {

inline void theta_checks(const VerifyOptions& o, std::vector<Check>& out) {
  auto rng = numerics::stream_for(o.seed, 1);
  auto u = [&] { return numerics::uniform01(rng); };
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const ThetaChar ch{u(), u()};
    const ModularParam tau(u() - 0.5, 0.5 + 1.5 * u());
    const cplx z(u() - 0.5, u() - 0.5);
    const LatticeVector g{static_cast<long>(std::floor(5 * u())) - 2, static_cast<long>(std::floor(5 * u())) - 2};
    const cplx shifted = z + static_cast<double>(g.a) + static_cast<double>(g.b) * tau.value();
    const cplx lhs = theta_char(ch, shifted, tau);
    const cplx rhs = quasi_period_multiplier(ch, g, z, tau) * theta_char(ch, z, tau);
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
  }
  out.push_back(make_check("theta", "quasi_periodicity", worst, 1e-11, "200 random characteristics"));

  const cplx z(0.31, -0.17);
  const double odd = std::abs(theta11(-z, o.tau) + theta11(z, o.tau)) / std::abs(theta11(z, o.tau));
  out.push_back(make_check("theta", "theta11_odd", odd, 1e-13));
}

inline void norm_checks(const VerifyOptions& o, std::vector<Check>& out) {
  IntegrationSpec spec;
  spec.method = NormMethod::Quadrature;
  spec.quad.order_per_axis = 48;
  spec.threads = o.threads;
  double worst = 0.0, worst_half = 0.0;
  for (int n : {2, 3}) {
    const TorusConfig cfg(o.tau, n);
    for (double s : {0.0, 1.0, 5.0}) {
      const auto st = lll_evolved_flat(cfg, 1, s);
      const double t2s = flat_frame(cfg, s, n).tau_s.imag();
      const double q = normalize(st, spec).norm2;
      worst = std::max(worst, std::abs(q / lll_norm2_closed_form(n, t2s) - 1.0));
      const double corrected = q * half_form_factor(n, t2s);
      worst_half = std::max(worst_half, std::abs(corrected * 2.0 * n * std::sqrt(kPi) - 1.0));
    }
  }
  out.push_back(make_check("norms", "one_particle_norm", worst, 1e-9));
  out.push_back(make_check("norms", "half_form_unitarity", worst_half, 1e-8));
}

inline void geometry_checks(const VerifyOptions& o, std::vector<Check>& out) {
  const TorusConfig cfg(o.tau, o.n_phi);
  const auto sine = Deformation::periodic_sine(0.0);
  const auto sampled = Deformation::custom_periodic(0.0, [](double y) {
    const double v = std::sin(2.0 * kPi * y);
    return v * v;
  });
  const double expected = o.n_phi * o.tau.tau2() / (4.0 * kPi);
  out.push_back(make_check("geometry", "critical_time_sampled", std::abs(critical_s(cfg, sampled) - expected), 1e-8,
                           "s_c = " + fmt(critical_s(cfg, sine))));
  double gb = 0.0;
  for (double f : {0.0, 0.3, 0.6, 0.9}) gb = std::max(gb, std::abs(gauss_bonnet_integral(cfg, sine.with_s(f * expected))));
  out.push_back(make_check("geometry", "gauss_bonnet", gb, 1e-10));
  double flat = 0.0;
  for (int i = 0; i < 16; ++i) flat = std::max(flat, std::abs(gauss_curvature(cfg, sine, (i + 0.5) / 16)));
  out.push_back(make_check("geometry", "flat_at_zero_time", flat, 1e-15));
}

inline void spectral_checks(std::vector<Check>& out) {
  double worst = 0.0;
  for (int n = 1; n <= 12; ++n) {
    const TorusConfig cfg(ModularParam(0.0, 1.0), n);
    for (int l = 0; l < n; ++l) {
      const auto sd = spectral_data(cfg, l);
      worst = std::max(worst, std::abs(qh_from_eigenvalue(sd.s_eigenvalue) - sd.qh_eigenvalue));
    }
  }
  out.push_back(make_check("spectral", "eigenvalue_rule", worst, 1e-14));
}

inline void plane_checks(std::vector<Check>& out) {
  using namespace torus_hall::plane;
  const std::vector<double> xs{-2.0, -1.0, -0.3, 0.0, 0.4, 1.2, 2.1};
  const PlaneFn gauss = [](double y) { return cplx(std::exp(-y * y), 0.0); };
  const PlaneFn herm = [](double y) { return cplx(hermite_fn(3, 1.0, y), 0.0); };
  const double sg = std::max(heat_semigroup_check(gauss, 0.5, 0.5, xs), heat_semigroup_check(herm, 0.3, 0.7, xs));
  out.push_back(make_check("plane", "heat_semigroup", sg, 1e-7));

  double exact = 0.0, literal = 0.0;
  for (int m = 0; m <= 6; ++m) {
    for (double s : {0.5, 1.0, 2.0}) {
      exact = std::max(exact, proposition_ratio_spread(m, s, PropositionForm::Exact).spread);
      literal = std::max(literal, proposition_ratio_spread(m, s, PropositionForm::Literal).spread);
    }
  }
  out.push_back(make_check("plane", "ratio_constancy", exact, 1e-6, "Hermite closed form"));
  Check lit = make_check("plane", "ratio_constancy_monomial", literal, 1e-6, "z_s^m closed form");
  lit.informational = true;
  out.push_back(lit);

  out.push_back(make_check("plane", "hermite_orthogonality_weighted", hermite_gram_offdiag(6, 2.0, true), 1e-10,
                           "weight exp(x^2/a)"));
  Check flat = make_check("plane", "hermite_orthogonality_lebesgue", hermite_gram_offdiag(6, 2.0, false), 1e-10);
  flat.informational = true;
  out.push_back(flat);

  std::vector<PlanePoint> p{{0.1, 0.5}, {-0.7, 0.2}, {0.4, -0.9}};
  const cplx v = plane_laughlin(0.8, p);
  std::swap(p[0], p[1]);
  out.push_back(make_check("plane", "laughlin_antisymmetry", std::abs(plane_laughlin(0.8, p) + v) / std::abs(v),
                           1e-13));
}

}  // namespace detail

inline std::vector<Check> run_verify(const VerifyOptions& o) {
  for (const auto& g : o.only) {
    const auto& all = verify_groups();
    if (std::find(all.begin(), all.end(), g) == all.end()) throw InvalidArgument("unknown verify group '" + g + "'");
  }
  auto want = [&](const std::string& g) { return o.only.empty() || o.only.count(g) > 0; };
  std::vector<Check> out;
  if (want("theta")) detail::theta_checks(o, out);
  if (want("norms")) detail::norm_checks(o, out);
  if (want("geometry")) detail::geometry_checks(o, out);
  if (want("spectral")) detail::spectral_checks(out);
  if (want("plane")) detail::plane_checks(out);
  return out;
}

inline bool all_passed(const std::vector<Check>& checks) {
  for (const auto& c : checks) {
    if (!c.informational && !c.passed) return false;
  }
  return true;
}

inline json to_json(const std::vector<Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks) {
    arr.push_back({{"group", c.group},
                   {"name", c.name},
                   {"residual", c.residual},
                   {"tolerance", c.tolerance},
                   {"passed", c.passed},
                   {"informational", c.informational},
                   {"note", c.note}});
  }
  return arr;
}

}  // namespace torus_hall::cli
