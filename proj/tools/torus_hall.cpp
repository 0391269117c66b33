// torus_hall: densities, curvature tables, plane checks and the invariant suite.

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "torus_hall/cli.hpp"

#ifndef TORUS_HALL_GIT_DESCRIBE
#define TORUS_HALL_GIT_DESCRIBE "unknown"
#endif

using namespace torus_hall;
using torus_hall::cli::json;
using torus_hall::cli::fmt;

namespace {

struct Common {
  unsigned threads = 0;
  bool allow_singular = false;
  std::string out;
  std::string sidecar;

  std::string sidecar_path() const { return sidecar.empty() ? out + ".json" : sidecar; }
};

void add_common(CLI::App* app, Common& c, const std::string& default_out) {
  c.out = default_out;
  app->add_option("--threads", c.threads, "worker threads, 0 = hardware (TORUS_HALL_THREADS overrides)");
  app->add_option("-o,--out", c.out, "output file")->capture_default_str();
  app->add_option("--sidecar", c.sidecar, "JSON sidecar path (default: <out>.json)");
  app->add_flag("--allow-singular", c.allow_singular, "run at or past the critical deformation time");
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write to " + path + " failed");
}

/// Runs `body`, then writes the sidecar whether or not it threw.
int run(const std::string& command, const Common& c, json config, const std::function<void(json&, unsigned)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  json side;
  side["command"] = command;
  side["config"] = std::move(config);
  side["git_describe"] = TORUS_HALL_GIT_DESCRIBE;
  int code = cli::kOk;
  try {
    const unsigned threads = cli::resolve_threads(c.threads);
    side["threads"] = threads;
    body(side, threads);
    side["error"] = nullptr;
    if (side.contains("all_passed") && !side["all_passed"].get<bool>()) code = cli::kInternal;
  } catch (...) {
    const auto info = cli::classify_current_exception(c.allow_singular);
    code = info.code;
    side["error"] = {{"type", info.type}, {"message", info.message}};
    std::cerr << "torus_hall " << command << ": " << info.type << ": " << info.message << '\n';
  }
  side["exit_code"] = code;
  side["runtime_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    write_file(c.sidecar_path(), side.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "torus_hall " << command << ": " << e.what() << '\n';
    if (code == cli::kOk) code = cli::kInternal;
  }
  return code;
}

NormMethod parse_method(const std::string& m) {
  if (m == "auto") return NormMethod::Auto;
  if (m == "closed") return NormMethod::ClosedForm;
  if (m == "quadrature") return NormMethod::Quadrature;
  if (m == "mc") return NormMethod::MonteCarlo;
  throw InvalidArgument("method must be auto, closed, quadrature or mc, got '" + m + "'");
}

json norm_json(const NormResult& r) {
  return {{"norm2", r.norm2},
          {"log_norm2", r.log_norm2},
          {"std_error", r.std_error},
          {"method", to_string(r.method)}};
}

// ---------------------------------------------------------------------------
// density / sweep

struct DensityOpts {
  std::string state = "single";
  int l = 0;
  int n_phi = 3;
  int n = 2;
  int ne = 2;
  int k = 3;
  std::string tau = "0+1i";
  double s = 0.0;
  std::string deformation = "flat";
  std::string form = "operator";
  int nx = 64;
  int ny = 64;
  std::string method = "auto";
  int order = 32;
  std::int64_t max_evals = 4'000'000'000;
  long samples = 100000;
  std::uint64_t seed = 1;
  bool direct = false;

  json to_json() const {
    return {{"state", state},  {"l", l},           {"n_phi", n_phi},   {"n", n},         {"ne", ne},
            {"k", k},          {"tau", tau},       {"s", s},           {"deformation", deformation},
            {"form", form},    {"nx", nx},         {"ny", ny},         {"method", method},
            {"order", order},  {"max_evals", max_evals}, {"samples", samples}, {"seed", seed},   {"direct", direct}};
  }
};

void add_density_options(CLI::App* app, DensityOpts& o) {
  app->add_option("--state", o.state, "single | iqhe | laughlin")->capture_default_str();
  app->add_option("--l", o.l, "level index (single) or centre-of-mass index (laughlin)")->capture_default_str();
  app->add_option("--n-phi", o.n_phi, "flux quanta for --state single")->capture_default_str();
  app->add_option("--n", o.n, "particles for --state iqhe")->capture_default_str();
  app->add_option("--ne", o.ne, "particles for --state laughlin")->capture_default_str();
  app->add_option("--k", o.k, "odd Laughlin exponent")->capture_default_str();
  app->add_option("--tau", o.tau, "modular parameter a+bi")->capture_default_str();
  app->add_option("--s", o.s, "deformation time")->capture_default_str();
  app->add_option("--deformation", o.deformation, "flat | sine")->capture_default_str();
  app->add_option("--form", o.form, "operator | displayed (nonflat many-body)")->capture_default_str();
  app->add_option("--nx", o.nx)->capture_default_str();
  app->add_option("--ny", o.ny)->capture_default_str();
  app->add_option("--method", o.method, "auto | closed | quadrature | mc")->capture_default_str();
  app->add_option("--order", o.order, "Gauss-Legendre order per axis")->capture_default_str();
  app->add_option("--max-evals", o.max_evals, "quadrature evaluation budget")->capture_default_str();
  app->add_option("--samples", o.samples, "Monte Carlo samples per integral")->capture_default_str();
  app->add_option("--seed", o.seed)->capture_default_str();
  app->add_flag("--direct", o.direct, "iqhe: reduced density of the many-body state instead of the one-particle sum");
}

struct DensityRun {
  DensityGrid grid;
  json norm;
  double s_c = std::numeric_limits<double>::infinity();
};

DensityRun compute_density(const DensityOpts& o, bool allow_singular, unsigned threads) {
  const ModularParam tau(cli::parse_complex(o.tau));
  if (o.nx < 1 || o.ny < 1) throw InvalidArgument("grid needs nx, ny >= 1");
  if (!(o.s >= 0.0)) throw InvalidArgument("s must be >= 0");
  if (o.deformation != "flat" && o.deformation != "sine") {
    throw InvalidArgument("deformation must be flat or sine, got '" + o.deformation + "'");
  }
  if (o.form != "operator" && o.form != "displayed") {
    throw InvalidArgument("form must be operator or displayed, got '" + o.form + "'");
  }
  const bool nonflat = o.deformation == "sine";
  const NonflatForm form = o.form == "operator" ? NonflatForm::Operator : NonflatForm::Displayed;

  IntegrationSpec spec;
  spec.method = parse_method(o.method);
  spec.quad.order_per_axis = o.order;
  spec.quad.max_evals = o.max_evals;
  spec.quad.validate();
  spec.mc.n_samples = o.samples;
  spec.mc.seed = o.seed;
  spec.mc.validate();
  spec.threads = threads;

  int n_phi = 0;
  if (o.state == "single") {
    n_phi = o.n_phi;
  } else if (o.state == "iqhe") {
    n_phi = o.n;
  } else if (o.state == "laughlin") {
    n_phi = ManyBodyConfig(o.ne, o.k, o.l).n_phi();
  } else {
    throw InvalidArgument("state must be single, iqhe or laughlin, got '" + o.state + "'");
  }
  const TorusConfig cfg(tau, n_phi);
  const Deformation d = nonflat ? Deformation::periodic_sine(o.s) : Deformation::flat_quadratic(o.s);

  DensityRun run;
  if (nonflat) {
    run.s_c = critical_s(cfg, d);
    if (!allow_singular) require_subcritical(cfg, d);
  }

  if (o.state == "iqhe" && !o.direct) {
    auto rho = nonflat ? iqhe_density_fast(cfg, d, spec.quad) : iqhe_density_fast(cfg, o.s);
    run.grid = sample_grid(rho, o.nx, o.ny, cfg.n_phi, threads);
    run.norm = {{"method", "one-particle-sum"}};
    return run;
  }

  EvolvedState st = [&] {
    if (o.state == "single") return nonflat ? lll_evolved_nonflat(cfg, o.l, d) : lll_evolved_flat(cfg, o.l, o.s);
    if (o.state == "iqhe") return nonflat ? iqhe_evolved_nonflat(cfg, d, form) : iqhe_evolved_flat(cfg, o.s);
    const ManyBodyConfig mb(o.ne, o.k, o.l);
    return nonflat ? laughlin_evolved_nonflat(cfg, mb, d, form) : laughlin_evolved_flat(cfg, mb, o.s);
  }();
  const NormResult nr = normalize(st, spec);
  run.norm = norm_json(nr);
  run.grid = density_grid(st, o.nx, o.ny, spec, nr);
  return run;
}

std::string grid_csv(const DensityGrid& g) {
  std::ostringstream os;
  cli::write_density_csv(os, g);
  return os.str();
}

int cmd_density(const DensityOpts& o, const Common& c) {
  return run("density", c, o.to_json(), [&](json& side, unsigned threads) {
    const auto r = compute_density(o, c.allow_singular, threads);
    write_file(c.out, grid_csv(r.grid));
    side["norm"] = r.norm;
    side["method"] = o.state == "iqhe" && !o.direct ? "one-particle-sum" : to_string(r.grid.method);
    side["grid"] = {{"nx", r.grid.nx}, {"ny", r.grid.ny}, {"integral", r.grid.total()}};
    if (std::isfinite(r.s_c)) side["s_c"] = r.s_c;
    side["output"] = c.out;
  });
}

struct SweepOpts {
  DensityOpts base;
  std::vector<int> ns{2};
  std::vector<std::string> taus{"0+1i"};
  std::vector<double> ss{0.0};
  std::string grid_dir;
};

int cmd_sweep(const SweepOpts& o, const Common& c) {
  json config = o.base.to_json();
  config["n_list"] = o.ns;
  config["tau_list"] = o.taus;
  config["s_list"] = o.ss;
  config["grid_dir"] = o.grid_dir;
  return run("sweep", c, config, [&](json& side, unsigned threads) {
    std::ostringstream csv;
    csv << "n,tau1,tau2,s,integral,rho_min,rho_max\n";
    json rows = json::array();
    for (int n : o.ns) {
      for (const auto& t : o.taus) {
        for (double s : o.ss) {
          DensityOpts d = o.base;
          d.tau = t;
          d.s = s;
          if (d.state == "single") d.n_phi = n;
          else if (d.state == "iqhe") d.n = n;
          else d.ne = n;
          const auto r = compute_density(d, c.allow_singular, threads);
          const auto [mn, mx] = std::minmax_element(r.grid.values.begin(), r.grid.values.end());
          const cplx tau = cli::parse_complex(t);
          csv << n << ',' << fmt(tau.real()) << ',' << fmt(tau.imag()) << ',' << fmt(s) << ','
              << fmt(r.grid.total()) << ',' << fmt(*mn) << ',' << fmt(*mx) << '\n';
          json row = {{"n", n}, {"tau", t}, {"s", s}, {"norm", r.norm}};
          if (!o.grid_dir.empty()) {
            const std::string path = o.grid_dir + "/grid_n" + std::to_string(n) + "_tau" + t + "_s" + fmt(s) + ".csv";
            write_file(path, grid_csv(r.grid));
            row["grid"] = path;
          }
          rows.push_back(row);
        }
      }
    }
    write_file(c.out, csv.str());
    side["runs"] = rows;
    side["output"] = c.out;
  });
}

// ---------------------------------------------------------------------------
// geometry

struct GeometryOpts {
  int n_phi = 2;
  std::string tau = "0+1i";
  std::vector<double> ss{0.0, 0.05, 0.1, 0.15};
  int ny = 256;
  std::string mode = "literal";
};

int cmd_geometry(const GeometryOpts& o, const Common& c) {
  json config = {{"n_phi", o.n_phi}, {"tau", o.tau}, {"s", o.ss}, {"ny", o.ny}, {"mode", o.mode},
                 {"deformation", "sine"}, {"allow_singular", c.allow_singular}};
  return run("geometry", c, config, [&](json& side, unsigned) {
    const TorusConfig cfg(ModularParam(cli::parse_complex(o.tau)), o.n_phi);
    if (o.ny < 2) throw InvalidArgument("geometry needs ny >= 2");
    if (o.mode != "literal" && o.mode != "standard") {
      throw InvalidArgument("mode must be literal or standard, got '" + o.mode + "'");
    }
    const CurvatureMode mode = o.mode == "literal" ? CurvatureMode::PaperLiteral : CurvatureMode::StandardLogH;
    const Deformation sine = Deformation::periodic_sine(0.0);
    const double sc = critical_s(cfg, sine);
    side["s_c"] = sc;
    for (double s : o.ss) {
      const Deformation d = sine.with_s(s);
      if (!c.allow_singular) require_subcritical(cfg, d);
    }
    std::ostringstream csv;
    csv << "y,s,K\n";
    json gb = json::array();
    for (double s : o.ss) {
      const Deformation d = sine.with_s(s);
      bool singular = false;
      for (int i = 0; i < o.ny; ++i) {
        const double y = static_cast<double>(i) / o.ny;
        double k = std::numeric_limits<double>::quiet_NaN();
        try {
          k = gauss_curvature(cfg, d, y, mode);
        } catch (const PastCriticalDeformation&) {
          singular = true;
        }
        csv << fmt(y) << ',' << fmt(s) << ',' << fmt(k) << '\n';
      }
      json entry = {{"s", s}};
      if (singular || s >= sc) {
        entry["gauss_bonnet"] = nullptr;
      } else {
        entry["gauss_bonnet"] = gauss_bonnet_integral(cfg, d, mode);
      }
      gb.push_back(entry);
    }
    write_file(c.out, csv.str());
    side["gauss_bonnet"] = gb;
    side["output"] = c.out;
  });
}

// ---------------------------------------------------------------------------
// plane

struct PlaneOpts {
  int m = 0;
  double s = 1.0;
  int n = 32;
  double extent = 3.0;
};

int cmd_plane(const PlaneOpts& o, const Common& c) {
  json config = {{"m", o.m}, {"s", o.s}, {"n", o.n}, {"extent", o.extent}};
  return run("plane", c, config, [&](json& side, unsigned threads) {
    using namespace torus_hall::plane;
    PlaneCSTConfig{o.s, o.m, 2.0 * o.s}.validate();
    if (o.n < 1 || !(o.extent > 0.0)) throw InvalidArgument("plane grid needs n >= 1 and extent > 0");
    const std::size_t cells = static_cast<std::size_t>(o.n) * o.n;
    std::vector<cplx> img(cells);
    auto coord = [&](int i) { return -o.extent + 2.0 * o.extent * (i + 0.5) / o.n; };
    numerics::parallel_for(cells, threads, [&](std::size_t idx) {
      const double x = coord(static_cast<int>(idx % o.n));
      const double p = coord(static_cast<int>(idx / o.n)) / o.s;
      img[idx] = plane_cst_image(o.m, o.s, x, p);
    });
    std::ostringstream csv;
    csv << "x,p,re,im\n";
    for (std::size_t idx = 0; idx < cells; ++idx) {
      const double x = coord(static_cast<int>(idx % o.n));
      const double p = coord(static_cast<int>(idx / o.n)) / o.s;
      csv << fmt(x) << ',' << fmt(p) << ',' << fmt(img[idx].real()) << ',' << fmt(img[idx].imag()) << '\n';
    }
    write_file(c.out, csv.str());
    const auto exact = proposition_ratio_spread(o.m, o.s, PropositionForm::Exact);
    const auto literal = proposition_ratio_spread(o.m, o.s, PropositionForm::Literal);
    const cplx cm = proposition_constant(o.m, o.s);
    side["ratio_spread_hermite"] = exact.spread;
    side["ratio_spread_monomial"] = literal.spread;
    side["constant_measured"] = cli::format_complex(cm);
    side["constant_closed_form"] = proposition_constant_exact(o.m, o.s);
    side["output"] = c.out;
  });
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::vector<std::string> only;
  std::string tau = "0+1i";
  int n_phi = 2;
  std::uint64_t seed = 1;
};

int cmd_verify(const VerifyArgs& a, const Common& c) {
  json config = {{"only", a.only}, {"tau", a.tau}, {"n_phi", a.n_phi}, {"seed", a.seed}};
  return run("verify", c, config, [&](json& side, unsigned threads) {
    cli::VerifyOptions o;
    o.only = {a.only.begin(), a.only.end()};
    o.tau = ModularParam(cli::parse_complex(a.tau));
    o.n_phi = a.n_phi;
    if (o.n_phi < 1) throw InvalidArgument("n_phi must be >= 1");
    o.seed = a.seed;
    o.threads = threads;
    const auto checks = cli::run_verify(o);
    for (const auto& ch : checks) {
      std::cout << (ch.informational ? "INFO" : ch.passed ? "PASS" : "FAIL") << ' ' << ch.group << '.' << ch.name
                << " residual=" << fmt(ch.residual) << " tol=" << fmt(ch.tolerance) << '\n';
    }
    side["checks"] = cli::to_json(checks);
    side["all_passed"] = cli::all_passed(checks);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum Hall states on the torus: densities, curvature and checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(TORUS_HALL_GIT_DESCRIBE));

  Common density_c, sweep_c, geometry_c, plane_c, verify_c;

  DensityOpts dens;
  auto* density = app.add_subcommand("density", "density grid of a one-particle, filled-level or Laughlin state");
  add_density_options(density, dens);
  add_common(density, density_c, "density.csv");

  SweepOpts sweep;
  auto* sw = app.add_subcommand("sweep", "density summaries over products of N, tau and s");
  add_density_options(sw, sweep.base);
  sw->add_option("--n-list", sweep.ns, "particle or flux counts")->delimiter(',');
  sw->add_option("--tau-list", sweep.taus, "modular parameters")->delimiter(',');
  sw->add_option("--s-list", sweep.ss, "deformation times")->delimiter(',');
  sw->add_option("--grid-dir", sweep.grid_dir, "also write every grid into this directory");
  add_common(sw, sweep_c, "sweep.csv");

  GeometryOpts geo;
  auto* geometry = app.add_subcommand("geometry", "Gauss curvature of the deformed metric");
  geometry->add_option("--n-phi", geo.n_phi)->capture_default_str();
  geometry->add_option("--tau", geo.tau)->capture_default_str();
  geometry->add_option("--s", geo.ss, "deformation times")->delimiter(',');
  geometry->add_option("--ny", geo.ny)->capture_default_str();
  geometry->add_option("--mode", geo.mode, "literal | standard")->capture_default_str();
  add_common(geometry, geometry_c, "curvature.csv");

  PlaneOpts pl;
  auto* plane = app.add_subcommand("plane", "heat-kernel images of Hermite functions on the plane");
  plane->add_option("--m", pl.m)->capture_default_str();
  plane->add_option("--s", pl.s)->capture_default_str();
  plane->add_option("--n", pl.n, "grid points per axis")->capture_default_str();
  plane->add_option("--extent", pl.extent, "half-width of the x and s*p ranges")->capture_default_str();
  add_common(plane, plane_c, "plane.csv");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "run the invariant suite and write a JSON report");
  verify->add_option("--only", ver.only, "comma-separated groups: theta,norms,geometry,spectral,plane")->delimiter(',');
  verify->add_option("--tau", ver.tau)->capture_default_str();
  verify->add_option("--n-phi", ver.n_phi)->capture_default_str();
  verify->add_option("--seed", ver.seed)->capture_default_str();
  add_common(verify, verify_c, "verify.json");
  verify_c.sidecar.clear();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kValidation;
  }

  if (density->parsed()) return cmd_density(dens, density_c);
  if (sw->parsed()) return cmd_sweep(sweep, sweep_c);
  if (geometry->parsed()) return cmd_geometry(geo, geometry_c);
  if (plane->parsed()) return cmd_plane(pl, plane_c);
  // verify writes its report to --out; the sidecar and the report are the same file
  if (verify_c.sidecar.empty()) verify_c.sidecar = verify_c.out;
  return cmd_verify(ver, verify_c);
}
