// Acceptance suite: one PASS/FAIL line per criterion, measured residuals after it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "torus_hall/density.hpp"
#include "torus_hall/geometry.hpp"
#include "torus_hall/numerics.hpp"
#include "torus_hall/plane_cst.hpp"
#include "torus_hall/states.hpp"
#include "torus_hall/theta.hpp"

using namespace torus_hall;
namespace fs = std::filesystem;

namespace {

struct Item {
  std::string what;
  double value;
  double tol;
  bool ok;
};

class Criterion {
 public:
  explicit Criterion(std::string id) : id_(std::move(id)), t0_(std::chrono::steady_clock::now()) {}

  /// value < tol
  void below(const std::string& what, double value, double tol) {
    items_.push_back({what, value, tol, std::isfinite(value) && value < tol});
  }
  void require(const std::string& what, bool ok) { items_.push_back({what, ok ? 1.0 : 0.0, 1.0, ok}); }
  void note(const std::string& text) { notes_.push_back(text); }
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

  bool finish() const {
    bool ok = true;
    for (const auto& it : items_) ok = ok && it.ok;
    std::printf("%s: %s (%.2f s)\n", id_.c_str(), ok ? "PASS" : "FAIL", seconds());
    for (const auto& it : items_) {
      if (it.tol == 1.0 && (it.value == 0.0 || it.value == 1.0)) {
        std::printf("    %-58s %s\n", it.what.c_str(), it.ok ? "ok" : "NOT MET");
      } else {
        std::printf("    %-58s %.3e < %.1e  %s\n", it.what.c_str(), it.value, it.tol, it.ok ? "ok" : "NOT MET");
      }
    }
    for (const auto& n : notes_) std::printf("    note: %s\n", n.c_str());
    std::fflush(stdout);
    return ok;
  }

 private:
  std::string id_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<Item> items_;
  std::vector<std::string> notes_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double circ_dist(double a, double b) {
  double d = std::abs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

IntegrationSpec quadrature(int order) {
  IntegrationSpec spec;
  spec.method = NormMethod::Quadrature;
  spec.quad.order_per_axis = order;
  spec.threads = numerics::hardware_threads();
  return spec;
}

const ModularParam kTauI(0.0, 1.0);

// ---------------------------------------------------------------------------

bool ac1() {
  Criterion c("AC1 theta quasi-periodicity");
  auto rng = numerics::stream_for(2024, 1);
  auto u = [&] { return numerics::uniform01(rng); };
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ThetaChar ch{u() - 0.5, u() - 0.5};
    const ModularParam tau(2.0 * u() - 1.0, 0.4 + 2.6 * u());
    const cplx z(2.0 * u() - 1.0, 2.0 * u() - 1.0);
    const LatticeVector g{static_cast<long>(std::floor(7 * u())) - 3, static_cast<long>(std::floor(7 * u())) - 3};
    const cplx t = tau.value();
    const cplx shifted = z + static_cast<double>(g.a) + static_cast<double>(g.b) * t;
    // Multiplier written out here rather than taken from the library.
    const double a = static_cast<double>(g.a), b = static_cast<double>(g.b);
    const cplx mu = std::exp(cplx(0, -kPi) * t * b * b - cplx(0, 2 * kPi) * b * z + cplx(0, 2 * kPi) * (ch.a * a - ch.b * b));
    const cplx lhs = theta_char(ch, shifted, tau);
    const cplx rhs = mu * theta_char(ch, z, tau);
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
  }
  c.below("max relative residual over 1000 checks", worst, 1e-11);
  c.below("runtime [s]", c.seconds(), 5.0);
  return c.finish();
}

bool ac2() {
  Criterion c("AC2 one-particle norm identity");
  double worst = 0.0;
  const auto spec = quadrature(48);
  for (int n : {2, 3, 5}) {
    for (cplx t : {cplx(0, 1), cplx(0, 2), cplx(0.3, 1.2)}) {
      const TorusConfig cfg(ModularParam(t), n);
      for (double s : {0.0, 1.0, 5.0}) {
        const double t2s = t.imag() + s / (2.0 * kPi * n);
        for (int l = 0; l < n; ++l) {
          const double q = normalize(lll_evolved_flat(cfg, l, s), spec).norm2;
          worst = std::max(worst, std::abs(q * std::sqrt(2.0 * n * t2s) - 1.0));
        }
      }
    }
  }
  c.below("max |quadrature * sqrt(2 N tau2_s) - 1|", worst, 1e-9);
  return c.finish();
}

bool ac3() {
  Criterion c("AC3 half-form unitarity");
  double worst = 0.0;
  const auto spec = quadrature(48);
  for (int n : {2, 3, 5}) {
    for (cplx t : {cplx(0, 1), cplx(0.3, 1.2)}) {
      const TorusConfig cfg(ModularParam(t), n);
      for (double s : {0.0, 1.0, 5.0, 10.0}) {
        const double t2s = t.imag() + s / (2.0 * kPi * n);
        const double q = normalize(lll_evolved_flat(cfg, 0, s), spec).norm2;
        const double corrected = q * std::sqrt(t2s / (2.0 * kPi * n));
        worst = std::max(worst, std::abs(corrected * 2.0 * n * std::sqrt(kPi) - 1.0));
      }
    }
  }
  c.below("max |corrected norm * 2 N sqrt(pi) - 1|", worst, 1e-8);
  return c.finish();
}

bool ac4() {
  Criterion c("AC4 one-particle densities, N=3, tau=5i");
  const TorusConfig cfg(ModularParam(0.0, 5.0), 3);
  const double expected[] = {0.0, 2.0 / 3.0, 1.0 / 3.0};
  for (int l = 0; l < 3; ++l) {
    const auto rho = integrated_density_y(cfg, l, 0.0);
    const auto rep = peak_report(rho, 256);
    c.require("l=" + std::to_string(l) + " has one peak", rep.centers.size() == 1);
    if (!rep.centers.empty()) {
      c.below("l=" + std::to_string(l) + " |center - " + num(expected[l]) + "|", circ_dist(rep.centers[0], expected[l]),
              1.0 / 256);
    }
    const double mass = numerics::integrate_1d(rho, 0.0, 1.0, 48, 16);
    c.below("l=" + std::to_string(l) + " |integral - 1|", std::abs(mass - 1.0), 1e-8);
  }
  return c.finish();
}

bool ac5() {
  Criterion c("AC5 peak width scaling");
  const TorusConfig cfg(kTauI, 3);
  auto width = [&](double t2s) {
    const double s = (t2s - 1.0) * 2.0 * kPi * 3;
    const auto rep = peak_report(integrated_density_y(cfg, 0, s), 256);
    return rep.widths.empty() ? std::numeric_limits<double>::quiet_NaN() : rep.widths[0];
  };
  const double w2 = width(2.0), w8 = width(8.0);
  c.note("sigma(2) = " + num(w2) + ", sigma(8) = " + num(w8));
  c.below("|(sigma(2)/sigma(8)) / 2 - 1|", std::abs(w2 / w8 / 2.0 - 1.0), 0.05);
  return c.finish();
}

bool ac6() {
  Criterion c("AC6 filled level");
  auto rng = numerics::stream_for(6, 0);
  for (int n : {2, 3}) {
    for (double s : {0.0, 1.0}) {
      const TorusConfig cfg(ModularParam(0.2, 1.1), n);
      const auto st = iqhe_evolved_flat(cfg, s);
      cplx ref{0, 0};
      double spread = 0.0;
      for (int trial = 0; trial < 50; ++trial) {
        std::vector<CoverPoint> pts(n);
        for (auto& p : pts) p = {numerics::uniform01(rng), numerics::uniform01(rng)};
        const cplx r = st(pts) / slater_determinant(cfg, pts, s);
        if (trial == 0) ref = r;
        else spread = std::max(spread, std::abs(r - ref) / std::abs(ref));
      }
      c.below("Slater ratio spread N=" + std::to_string(n) + " s=" + num(s), spread, 1e-8);
    }
  }

  {
    const TorusConfig cfg(kTauI, 2);
    const auto fast = sample_grid(iqhe_density_fast(cfg, 0.0), 12, 12, 2);
    const auto direct = density_grid(iqhe_state(cfg), 12, 12, quadrature(32));
    double diff = 0.0;
    for (std::size_t i = 0; i < fast.values.size(); ++i) diff = std::max(diff, std::abs(fast.values[i] - direct.values[i]));
    c.below("max |fast - direct reduced density|, N=2", diff, 1e-6);
  }

  double mass_err = 0.0;
  numerics::QuadratureSpec q;
  q.order_per_axis = 48;
  q.panels_per_axis = 4;
  for (int n = 2; n <= 8; ++n) {
    const auto rho = iqhe_density_fast(TorusConfig(kTauI, n), 0.0);
    const double m = numerics::gauss_legendre([&](std::span<const double> u) { return rho(u[0], u[1]); }, 2, q, 1);
    mass_err = std::max(mass_err, std::abs(m - n));
  }
  c.below("max |integral rho - N|, N=2..8", mass_err, 1e-8);

  double prev = std::numeric_limits<double>::infinity();
  bool decreasing = true;
  std::string ratios;
  for (int n = 2; n <= 8; ++n) {
    const auto g = sample_grid(iqhe_density_fast(TorusConfig(kTauI, n), 0.0), 64, 64, n);
    const auto [mn, mx] = std::minmax_element(g.values.begin(), g.values.end());
    const double ratio = *mx / *mn;
    decreasing = decreasing && ratio < prev;
    prev = ratio;
    ratios += (ratios.empty() ? "" : ", ") + num(ratio);
  }
  c.note("max/min for N=2..8: " + ratios);
  c.require("max/min strictly decreasing in N", decreasing);
  return c.finish();
}

bool ac7() {
  Criterion c("AC7 Laughlin k=3");
  const ManyBodyConfig mb(2, 3, 0);
  const TorusConfig base(kTauI, mb.n_phi());
  const auto st = laughlin_state(kTauI, mb);

  IntegrationSpec mc;
  mc.method = NormMethod::MonteCarlo;
  mc.mc.n_samples = 1'000'000;
  mc.mc.seed = 12345;
  mc.threads = numerics::hardware_threads();
  const auto nr = normalize(st, mc);
  IntegrationSpec node = mc;
  node.mc.n_samples = 4000;
  const auto g = density_grid(st, 16, 16, node, nr);
  const double total = g.total();
  c.note("norm samples 1e6, grid 16x16 x 4000 = 1.024e6 inner samples, integral = " + num(total));
  c.below("|integral rho / 2 - 1|", std::abs(total / 2.0 - 1.0), 0.01);

  auto rng = numerics::stream_for(7, 0);
  double anti = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CoverPoint> p{{numerics::uniform01(rng), numerics::uniform01(rng)},
                              {numerics::uniform01(rng), numerics::uniform01(rng)}};
    const cplx v = st(p);
    std::swap(p[0], p[1]);
    anti = std::max(anti, std::abs(st(p) + v) / std::abs(v));
  }
  c.below("antisymmetry |psi(swap) + psi| / |psi|", anti, 1e-12);

  auto mag = [&](double sep) {
    std::vector<CoverPoint> p{{0.3, 0.4}, {0.3 + sep, 0.4 + 0.5 * sep}};
    return std::abs(st(p));
  };
  const double slope = std::log(mag(1e-3) / mag(1e-4)) / std::log(10.0);
  c.below("|coincidence order - 3|", std::abs(slope - 3.0), 0.01);

  double add = 0.0;
  for (double s1 : {0.3, 1.0}) {
    for (double s2 : {0.5, 2.0}) {
      const cplx tau_s1 = kTauI.value() + cplx(0, s1 / (2.0 * kPi * mb.n_phi()));
      const auto two_step = laughlin_evolved_flat(TorusConfig(ModularParam(tau_s1), mb.n_phi()), mb, s2);
      const auto one_step = laughlin_evolved_flat(base, mb, s1 + s2);
      for (int trial = 0; trial < 10; ++trial) {
        std::vector<CoverPoint> p{{numerics::uniform01(rng), numerics::uniform01(rng)},
                                  {numerics::uniform01(rng), numerics::uniform01(rng)}};
        const cplx a = two_step(p), b = one_step(p);
        add = std::max(add, std::abs(a - b) / std::abs(b));
      }
    }
  }
  c.below("flat additivity s1 then s2 vs s1+s2", add, 1e-10);

  // N_e = 3 smoke run: finite, positive, same bytes for the same seed.
  const ManyBodyConfig mb3(3, 3, 1);
  const auto st3 = laughlin_state(kTauI, mb3);
  IntegrationSpec mc3 = mc;
  mc3.mc.n_samples = 100'000;
  const auto n3a = normalize(st3, mc3);
  const auto n3b = normalize(st3, mc3);
  IntegrationSpec node3 = mc3;
  node3.mc.n_samples = 2000;
  const auto g3a = density_grid(st3, 3, 3, node3, n3a);
  const auto g3b = density_grid(st3, 3, 3, node3, n3b);
  bool finite_pos = std::isfinite(n3a.log_norm2) && n3a.norm2 > 0.0;
  for (double v : g3a.values) finite_pos = finite_pos && std::isfinite(v) && v > 0.0;
  c.require("N_e=3 norm and density finite and positive", finite_pos);
  c.require("N_e=3 seed-stable", n3a.log_norm2 == n3b.log_norm2 && g3a.values == g3b.values);
  c.note("N_e=3 integral of 3x3 grid = " + num(g3a.total()) + " (untoleranced)");
  c.below("runtime [s]", c.seconds(), 600.0);
  return c.finish();
}

bool ac8() {
  Criterion c("AC8 nonflat geometry");
  const TorusConfig cfg(kTauI, 2);
  const auto sine = Deformation::periodic_sine(0.0);
  const auto sampled = Deformation::custom_periodic(0.0, [](double y) {
    const double v = std::sin(2.0 * kPi * y);
    return v * v;
  });
  c.below("|s_c - 1/(2 pi)| (sine family)", std::abs(critical_s(cfg, sine) - 1.0 / (2.0 * kPi)), 1e-8);
  c.below("|s_c - 1/(2 pi)| (sampled Hamiltonian)", std::abs(critical_s(cfg, sampled) - 1.0 / (2.0 * kPi)), 1e-8);
  double gb = 0.0;
  for (double s : {0.0, 0.05, 0.1, 0.15}) gb = std::max(gb, std::abs(gauss_bonnet_integral(cfg, sine.with_s(s))));
  c.below("max |Gauss-Bonnet integral|, s in {0,.05,.1,.15}", gb, 1e-10);
  double k0 = 0.0;
  for (int i = 0; i < 64; ++i) k0 = std::max(k0, std::abs(gauss_curvature(cfg, sine, i / 64.0)));
  c.below("max |K| at s=0", k0, 1e-15);

  const auto d = sine.with_s(0.1);
  std::vector<EvolvedState> states;
  for (int l = 0; l < 2; ++l) states.push_back(lll_evolved_nonflat(cfg, l, d));
  states.push_back(iqhe_evolved_nonflat(cfg, d));
  states.push_back(laughlin_evolved_nonflat(cfg, ManyBodyConfig(2, 3, 1), Deformation::periodic_sine(0.1)));
  auto rng = numerics::stream_for(8, 0);
  double per = 0.0;
  for (const auto& st : states) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<CoverPoint> p(st.particles());
      for (auto& q : p) q = {numerics::uniform01(rng), numerics::uniform01(rng)};
      const double ref = st.log_abs2(p);
      for (int axis = 0; axis < 2; ++axis) {
        for (std::size_t j = 0; j < p.size(); ++j) {
          auto q = p;
          (axis == 0 ? q[j].x : q[j].y) += 1.0;
          per = std::max(per, std::abs(std::expm1(st.log_abs2(q) - ref)));
        }
      }
    }
  }
  c.below("max relative change of |psi|^2 under unit shifts", per, 1e-9);

  const auto rep = curvature_density_correlation(cfg, d);
  c.note("Pearson(|K|, |rho_s - rho_0|), filled level N=2, s=0.1: " + num(rep.pearson));
  c.require("density change concentrated where |K| is largest (positive correlation)", rep.pearson > 0.0);
  return c.finish();
}

bool ac9() {
  Criterion c("AC9 spectral rule");
  double worst = 0.0;
  for (int n = 1; n <= 12; ++n) {
    for (int l = 0; l < n; ++l) {
      const cplx lambda = std::polar(1.0, -2.0 * kPi * l / n);
      const cplx w = (lambda - 1.0 / lambda) / cplx(0, 2);
      const double sn = std::sin(2.0 * kPi * l / n);
      worst = std::max(worst, std::abs(w * w - sn * sn));
      const auto sd = spectral_data(TorusConfig(kTauI, n), l);
      worst = std::max(worst, std::abs(qh_from_eigenvalue(sd.s_eigenvalue) - sd.qh_eigenvalue));
    }
  }
  c.below("max |((lambda - 1/lambda)/2i)^2 - sin^2(2 pi l/N)|", worst, 1e-14);

  double pref = 0.0;
  for (int n : {2, 3, 5}) {
    const TorusConfig cfg(ModularParam(0.1, 1.3), n);
    const double s = 0.05;
    const auto d = Deformation::periodic_sine(s);
    for (int l = 0; l < n; ++l) {
      const auto st = lll_evolved_nonflat(cfg, l, d);
      for (double x : {0.1, 0.6}) {
        for (double y : {0.2, 0.45, 0.8}) {
          const double sn = std::sin(2.0 * kPi * y);
          const double h = sn * sn, h1 = 2.0 * kPi * std::sin(4.0 * kPi * y);
          const cplx tau = cfg.tau.value();
          const cplx z = x + tau * y + cplx(0, s * h1 / (2.0 * kPi * n));
          const cplx bare = theta_char({static_cast<double>(l) / n, 0.0}, static_cast<double>(n) * z,
                                       cfg.tau.scaled(n)) *
                            std::exp(cplx(0, kPi * n) * tau * y * y + s * (h - y * h1));
          const cplx measured = st(CoverPoint{x, y}) / bare;
          const double expected = std::exp(-s * std::pow(std::sin(2.0 * kPi * l / n), 2));
          pref = std::max(pref, std::abs(measured - expected) / expected);
        }
      }
    }
  }
  c.below("nonflat prefactor exp(-s sin^2(2 pi l/N)) recovered", pref, 1e-10);
  return c.finish();
}

bool ac10() {
  using namespace torus_hall::plane;
  Criterion c("AC10 plane track");
  double literal = 0.0, exact = 0.0;
  for (int m = 0; m <= 6; ++m) {
    for (double s : {0.5, 1.0, 2.0}) {
      literal = std::max(literal, proposition_ratio_spread(m, s, PropositionForm::Literal).spread);
      exact = std::max(exact, proposition_ratio_spread(m, s, PropositionForm::Exact).spread);
    }
  }
  c.below("ratio spread, closed form e^{-ixp/2s} z_s^m e^{-|z_s|^2/4s}", literal, 1e-6);
  c.note("same grid with e^{-ixp/2} H_m(z_s/2 sqrt s) e^{-|z_s|^2/4s}: spread " + num(exact));

  const std::vector<double> xs{-2.0, -1.0, -0.3, 0.0, 0.4, 1.2, 2.1};
  const PlaneFn gauss = [](double y) { return cplx(std::exp(-y * y), 0.0); };
  const PlaneFn herm = [](double y) { return cplx(hermite_fn(3, 1.0, y), 0.0); };
  c.below("heat semigroup, Gaussian 0.5+0.5", heat_semigroup_check(gauss, 0.5, 0.5, xs), 1e-7);
  c.below("heat semigroup, h_3 0.3+0.7", heat_semigroup_check(herm, 0.3, 0.7, xs), 1e-7);

  const double lebesgue = hermite_gram_offdiag(6, 2.0, false);
  const double weighted = hermite_gram_offdiag(6, 2.0, true);
  c.below("Hermite Gram off-diagonal in L^2(dx), m,n <= 6", lebesgue, 1e-10);
  c.note("with weight e^{x^2/a}: off-diagonal " + num(weighted));

  std::vector<PlanePoint> p{{0.1, 0.5}, {-0.7, 0.2}, {0.4, -0.9}};
  const cplx v = plane_laughlin(0.8, p);
  std::swap(p[0], p[2]);
  c.below("plane Laughlin antisymmetry", std::abs(plane_laughlin(0.8, p) + v) / std::abs(v), 1e-13);
  auto mag = [](double sep) {
    std::vector<PlanePoint> q{{0.2, 0.3}, {0.2 + sep, 0.3}, {-0.5, 0.9}};
    return std::abs(plane_laughlin(1.3, q));
  };
  const double slope = std::log(mag(1e-2) / mag(1e-3)) / std::log(10.0);
  c.below("plane Laughlin |coincidence order - 3|", std::abs(slope - 3.0), 0.01);
  return c.finish();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

bool ac11() {
  Criterion c("AC11 CLI determinism");
  const fs::path dir = fs::temp_directory_path() / "torus_hall_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [&](const std::string& args) {
    const std::string cmd =
        "cd '" + dir.string() + "' && '" + std::string(TORUS_HALL_CLI_PATH) + "' " + args + " > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  };
  const std::vector<std::string> cases{
      "density --state laughlin --ne 2 --k 3 --nx 8 --ny 8 --method mc --samples 4000 --seed 11",
      "density --state laughlin --ne 2 --k 3 --nx 6 --ny 6 --method quadrature --order 24",
      "density --state iqhe --n 3 --tau 0.2+1.1i --s 0.5 --nx 32 --ny 32",
      "density --state single --n-phi 3 --l 2 --deformation sine --s 0.05 --nx 16 --ny 16"};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const std::string a = "a" + std::to_string(i) + ".csv", b = "b" + std::to_string(i) + ".csv";
    const int ra = run(cases[i] + " --threads 1 -o " + a);
    const int rb = run(cases[i] + " --threads 4 -o " + b);
    const bool same = ra == 0 && rb == 0 && !slurp(dir / a).empty() && slurp(dir / a) == slurp(dir / b);
    c.require("byte-identical CSV, 1 vs 4 threads: case " + std::to_string(i), same);
  }
  fs::remove_all(dir);
  return c.finish();
}

}  // namespace

int main() {
  const std::vector<std::function<bool()>> all{ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9, ac10, ac11};
  int failed = 0;
  for (const auto& f : all) {
    try {
      if (!f()) ++failed;
    } catch (const std::exception& e) {
      std::printf("    exception: %s\n", e.what());
      std::printf("criterion aborted: FAIL\n");
      ++failed;
    }
  }
  std::printf("%d of %zu criteria failed\n", failed, all.size());
  return failed == 0 ? 0 : 1;
}
