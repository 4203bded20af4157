// Command-line runner: one subcommand per module, INI configs, JSON/CSV out.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"

#include "gsflow/bubbles.hpp"
#include "gsflow/config.hpp"
#include "gsflow/error.hpp"
#include "gsflow/field.hpp"
#include "gsflow/flow.hpp"
#include "gsflow/geometry.hpp"
#include "gsflow/ground_state.hpp"
#include "gsflow/io.hpp"
#include "gsflow/kernels.hpp"
#include "gsflow/spectral.hpp"
#include "gsflow/threshold.hpp"
#include "gsflow/verify.hpp"

namespace fs = std::filesystem;
using namespace gsflow;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct Context {
  Config cfg;
  fs::path out;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string hash;
};

struct Problem {
  Nonlinearity nl;
  int n = 3;
  bool radial = true;
  RadialProfile p;
};

Problem problem_from(const Context& ctx) {
  const Config& c = ctx.cfg;
  const Nonlinearity nl = nonlinearity_from(c);
  const int n = c.get("problem.dimension", 3);
  if (n < 1 || n > 3) throw ConfigError("problem.dimension must be 1, 2 or 3");
  const std::string geom = c.get("problem.geometry", std::string("radial"));
  if (geom != "radial" && geom != "cartesian") throw ConfigError("problem.geometry is radial or cartesian");
  const bool radial = geom == "radial";
  const double m = nl.decay_rate();
  const double R = c.get("grid.R", radial ? 30.0 : 15.0);
  const double r_max = c.get("shoot.r_max", std::max(40.0 / m, R + 5.0 / m));
  const double h = c.get("shoot.h", std::min(1e-3, 1.0 / (50.0 * m)));
  const double tol = c.get("shoot.tol", 1e-13);
  return Problem{nl, n, radial, shoot(nl, n, r_max, h, tol)};
}

RadialGrid radial_grid(const Context& ctx, const Problem& pr) {
  return RadialGrid::make(pr.n, ctx.cfg.get("grid.R", 30.0), ctx.cfg.get("grid.h", 1e-2));
}

CartesianGrid cartesian_grid(const Context& ctx, const Problem& pr) {
  return CartesianGrid::cube(pr.n, ctx.cfg.get("grid.R", 15.0), ctx.cfg.get("grid.h", 0.5));
}

RadialField radial_initial(const Context& ctx, const Problem& pr, const RadialGrid& g) {
  const Config& c = ctx.cfg;
  const std::string kind = c.get("initial.kind", std::string("ground_state"));
  const double scale = c.get("initial.scale", 1.0);
  RadialField u = RadialField::zeros(g);
  if (kind == "ground_state") {
    u = discrete_ground_state(pr.p, g);
  } else if (kind == "gaussian") {
    const double w = c.get("initial.width", 2.0);
    for (std::size_t i = 0; i < g.last; ++i) u.v[i] = std::exp(-g.r[i] * g.r[i] / (w * w));
  } else {
    throw ConfigError("initial.kind '" + kind + "' is not available on radial grids");
  }
  for (double& v : u.v) v *= scale;
  return u;
}

Field cartesian_initial(const Context& ctx, const Problem& pr, const CartesianGrid& g) {
  const Config& c = ctx.cfg;
  const std::string kind = c.get("initial.kind", std::string("ground_state"));
  const double scale = c.get("initial.scale", 1.0);
  if (kind == "ground_state") {
    return sample_bubble(pr.p, {Point(pr.n, 0.0)}, {scale}, g);
  }
  if (kind == "gaussian") {
    const double w = c.get("initial.width", 2.0);
    const Point origin(pr.n, 0.0);
    return sample_radial_function(g, origin, [&](double r) { return scale * std::exp(-r * r / (w * w)); });
  }
  if (kind == "bubbles") {
    auto centers = parse_points(c.get("initial.centers", std::string()));
    if (centers.empty()) throw ConfigError("initial.centers is required for kind = bubbles");
    for (const auto& x : centers) {
      if (static_cast<int>(x.size()) != pr.n) throw ConfigError("initial.centers has the wrong dimension");
    }
    std::vector<double> weights = parse_list(c.get("initial.weights", std::string()));
    if (weights.empty()) weights.assign(centers.size(), 1.0);
    if (weights.size() != centers.size()) throw ConfigError("initial.weights must match initial.centers");
    for (double& w : weights) w *= scale;
    return sample_bubble(pr.p, centers, weights, g);
  }
  throw ConfigError("initial.kind must be ground_state, gaussian or bubbles");
}

// 1D single-power reactions have a closed-form ground state.
std::optional<double> analytic_sup_error(const Problem& pr) {
  if (pr.n != 1 || pr.nl.terms().size() != 1) return std::nullopt;
  const double a0 = pr.nl.a0();
  const double a = pr.nl.terms()[0].coeff, q = pr.nl.terms()[0].exponent;
  const double amp = std::pow(a0 * (q + 1.0) / (2.0 * a), 1.0 / (q - 1.0));
  const double k = 0.5 * (q - 1.0) * std::sqrt(a0);
  double err = 0.0;
  for (std::size_t i = 0; i < pr.p.size() && pr.p.r[i] <= 20.0 / std::sqrt(a0); ++i) {
    const double exact = amp * std::pow(1.0 / std::cosh(k * pr.p.r[i]), 2.0 / (q - 1.0));
    err = std::max(err, std::abs(pr.p.xi[i] - exact));
  }
  return err;
}

int cmd_ground_state(const Context& ctx) {
  const Problem pr = problem_from(ctx);
  const double m = pr.p.m;
  Json rep{{"n", pr.n},
           {"xi0", pr.p.shoot_parameter},
           {"h", pr.p.h},
           {"r_end", pr.p.r_end()},
           {"match_radius", pr.p.match_radius},
           {"step_error_estimate", pr.p.step_error_estimate},
           {"max_ode_residual", pr.p.max_ode_residual()},
           {"hypotheses", to_json(check_hypotheses(pr.nl, pr.n, 2.0 * pr.p.shoot_parameter, 2000))}};
  if (pr.n >= 2) rep["emden_fowler_residual"] = emden_fowler_residual(pr.p);
  const double r_lo = 8.0 / m, r_hi = std::min(16.0 / m, pr.p.r_end());
  if (r_hi > r_lo) rep["decay"] = to_json(decay_report(pr.p, r_lo, r_hi));
  if (auto err = analytic_sup_error(pr)) rep["analytic_sup_error"] = *err;
  write_profile_csv(ctx.out / "profile.csv", pr.p, ctx.hash);
  write_json(ctx.out / "report.json", rep, ctx.hash);
  std::printf("xi(0) = %.12g, ode residual %.3g\n", pr.p.shoot_parameter, pr.p.max_ode_residual());
  return kPass;
}

template <class F>
struct FlowDriver {
  const Context& ctx;
  const Problem& pr;
  F u0;
  double reference_energy;  // J of one ground state on the same grid
  std::function<FitResult(const F&)> fit;

  int run_all() {
    const Config& c = ctx.cfg;
    FlowOptions fo = flow_options_from(c);
    std::vector<double> fit_times = parse_list(c.get("flow.fit_times", std::string()));
    std::sort(fit_times.begin(), fit_times.end());
    std::size_t next_fit = 0;
    Json fits = Json::array();
    const int M = c.get("fit.M", 1);
    auto monitor = [&](const FlowState<F>& s) {
      while (next_fit < fit_times.size() && s.t >= fit_times[next_fit] - 0.5 * fo.dt) {
        Json entry{{"t", s.t}};
        try {
          const FitResult fr = fit(s.u);
          const double dudt = s.history.empty() ? 0.0 : std::sqrt(s.history.back().rate);
          entry["fit"] = to_json(fr);
          entry["deficit"] = to_json(deficit_report(s.u, fr, pr.p, dudt));
        } catch (const Error& e) {
          entry["error"] = e.what();
        }
        write_json(ctx.out / ("fit_" + std::to_string(next_fit) + ".json"), entry, ctx.hash);
        fits.push_back(entry);
        ++next_fit;
      }
    };
    const FlowState<F> s = run(u0, pr.nl, fo, Monitor<F>(monitor));

    const auto window = parse_list(c.get("flow.rate_window", std::string()));
    const double t0 = window.size() == 2 ? window[0] : 0.5 * s.t;
    const double t1 = window.size() == 2 ? window[1] : s.t;
    std::vector<double> ts, logs;
    for (const auto& smp : s.history) {
      const double gap = smp.J - M * reference_energy;
      if (smp.t >= t0 && smp.t <= t1 && gap > 0.0) {
        ts.push_back(smp.t);
        logs.push_back(std::log(gap));
      }
    }
    Json rep{{"event", to_string(s.event)},
             {"event_time", s.event_time},
             {"t", s.t},
             {"steps", s.steps},
             {"scheme", to_string(fo.scheme)},
             {"dt", fo.dt},
             {"clamp_mass", s.clamp_mass},
             {"max_clamp_ratio", s.max_clamp_ratio},
             {"max_energy_increase", max_energy_increase(s.history)},
             {"reference_energy", reference_energy},
             {"fits", fits.size()}};
    if (s.history.size() >= 2 && s.history.back().t > s.history.front().t) {
      rep["dissipation_residual"] = dissipation_residual(s.history, s.history.front().t, s.history.back().t);
    }
    if (ts.size() >= 3) {
      Json rf = to_json(fit_line(ts, logs));
      rf["window"] = Json::array({t0, t1});
      rep["rate_fit"] = rf;
    }
    write_history_csv(ctx.out / "run.csv", s.history, ctx.hash);
    write_field_csv(ctx.out / "final.csv", s.u, ctx.hash);
    write_json(ctx.out / "report.json", rep, ctx.hash);
    std::printf("event %s at t = %.4g after %zu steps\n", to_string(s.event).c_str(), s.t, s.steps);
    return kPass;
  }
};

int cmd_flow(const Context& ctx) {
  const Problem pr = problem_from(ctx);
  const int M = ctx.cfg.get("fit.M", 1);
  if (pr.radial) {
    const RadialGrid g = radial_grid(ctx, pr);
    const double ref = energy(discrete_ground_state(pr.p, g), pr.nl);
    FlowDriver<RadialField> d{ctx, pr, radial_initial(ctx, pr, g), ref,
                              [&](const RadialField& u) { return best_match(u, pr.p); }};
    return d.run_all();
  }
  const CartesianGrid g = cartesian_grid(ctx, pr);
  const double ref = energy(sample_bubble(pr.p, {Point(pr.n, 0.0)}, {1.0}, g), pr.nl);
  MatchOptions mo;
  mo.seed = ctx.seed;
  mo.max_iter = ctx.cfg.get("fit.max_iter", mo.max_iter);
  mo.opt_tol = ctx.cfg.get("fit.opt_tol", mo.opt_tol);
  FlowDriver<Field> d{ctx, pr, cartesian_initial(ctx, pr, g), ref,
                      [&](const Field& u) { return best_match(u, pr.p, M, std::nullopt, mo); }};
  return d.run_all();
}

int cmd_fit(const Context& ctx) {
  const Problem pr = problem_from(ctx);
  Json doc;
  if (pr.radial) {
    const RadialGrid g = radial_grid(ctx, pr);
    doc["fit"] = to_json(best_match(radial_initial(ctx, pr, g), pr.p));
  } else {
    const CartesianGrid g = cartesian_grid(ctx, pr);
    MatchOptions mo;
    mo.seed = ctx.seed;
    mo.max_iter = ctx.cfg.get("fit.max_iter", mo.max_iter);
    mo.opt_tol = ctx.cfg.get("fit.opt_tol", mo.opt_tol);
    const Field u = cartesian_initial(ctx, pr, g);
    const FitResult fr = best_match(u, pr.p, ctx.cfg.get("fit.M", 1), std::nullopt, mo);
    doc["fit"] = to_json(fr);
    doc["boundary_ratio"] = boundary_ratio(u);
  }
  write_json(ctx.out / "fit.json", doc, ctx.hash);
  std::printf("gamma/|u| = %.4g\n", doc["fit"]["relative_gamma"].get<double>());
  return kPass;
}

int cmd_spectrum(const Context& ctx) {
  const Problem pr = problem_from(ctx);
  const int k = ctx.cfg.get("spectrum.k", pr.n + 5);
  const int trials = ctx.cfg.get("spectrum.trials", 120);
  SpectralReport rep;
  CoercivityReport co;
  if (pr.radial) {
    const RadialGrid g = radial_grid(ctx, pr);
    rep = spectrum(pr.p, g, k, ctx.seed, ctx.cfg.get("spectrum.max_ell", 2));
    co = constrained_coercivity(pr.p, g, trials, ctx.seed);
  } else {
    const CartesianQ q = assemble_Q(pr.p, cartesian_grid(ctx, pr));
    rep = spectrum(q, pr.p, k, ctx.seed);
    co = constrained_coercivity(q, pr.p, trials, ctx.seed);
  }
  rep.coercivity_constant = co.constant;
  rep.coercivity_computed = true;
  Json doc{{"spectrum", to_json(rep)}, {"coercivity", to_json(co)}, {"kernel", kernels::active().name}};
  write_json(ctx.out / "spectrum.json", doc, ctx.hash);
  std::printf("negative %d, kernel %d, coercivity %.4g\n", rep.n_negative, rep.kernel_dim, co.constant);
  return kPass;
}

template <class F>
int finish_threshold(const Context& ctx, const Problem& pr, const ThresholdResult<F>& res) {
  write_history_csv(ctx.out / "near_threshold_run.csv", res.near_threshold_run.history, ctx.hash);
  Json doc = threshold_json(res, "near_threshold_run.csv");
  try {
    doc["profile_check"] = to_json(near_threshold_profile_check(res, pr.p));
  } catch (const Error& e) {
    doc["profile_check_error"] = e.what();
  }
  write_json(ctx.out / "threshold.json", doc, ctx.hash);
  std::printf("alpha in [%.8g, %.8g] after %zu probes\n", res.alpha_lo, res.alpha_hi, res.probes.size());
  return kPass;
}

int cmd_threshold(const Context& ctx) {
  const Problem pr = problem_from(ctx);
  const Config& c = ctx.cfg;
  ThresholdOptions to;
  to.flow = flow_options_from(c);
  to.flow.T = c.get("threshold.T", 30.0);
  to.lo = c.get("threshold.lo", to.lo);
  to.hi = c.get("threshold.hi", to.hi);
  to.tol_alpha = c.get("threshold.tol", to.tol_alpha);
  to.relative = c.get("threshold.relative", to.relative);
  if (pr.radial) {
    const RadialGrid g = radial_grid(ctx, pr);
    return finish_threshold(ctx, pr, bisect_threshold(radial_initial(ctx, pr, g), pr.nl, to));
  }
  const CartesianGrid g = cartesian_grid(ctx, pr);
  return finish_threshold(ctx, pr, bisect_threshold(cartesian_initial(ctx, pr, g), pr.nl, to));
}

int cmd_separate(const Context& ctx) {
  const Config& c = ctx.cfg;
  const int instances = c.get("separate.instances", 100);
  const int max_points = c.get("separate.max_points", 6);
  const int max_dim = c.get("separate.max_dim", 4);
  const int directions = c.get("separate.directions", 10000);
  const int neighborhood = c.get("separate.neighborhood", 1000);
  if (instances < 1 || max_points < 2 || max_dim < 1 || directions < 1 || neighborhood < 0) {
    throw ConfigError("separate: counts must be positive and max_points >= 2");
  }
  std::mt19937_64 rng(ctx.seed);
  std::uniform_int_distribution<int> mdist(2, max_points), ndist(1, max_dim);
  std::uniform_real_distribution<double> coord(-10.0, 10.0), unit(0.0, 1.0);
  std::normal_distribution<double> gauss;
  Json certs = Json::array();
  int failures = 0;
  for (int k = 0; k < instances; ++k) {
    const int M = mdist(rng), n = ndist(rng);
    std::vector<Point> P(M, Point(n));
    for (auto& x : P)
      for (double& v : x) v = coord(rng);
    const SeparationCert cert = separate(P);
    int neigh_fail = 0;
    for (int j = 0; j < neighborhood; ++j) {
      Point dir(n);
      double len = 0.0;
      for (double& v : dir) {
        v = gauss(rng);
        len += v * v;
      }
      len = std::sqrt(len);
      const double rad = cert.Lprime * std::pow(unit(rng), 1.0 / n);
      Point z = cert.y;
      for (int a = 0; a < n; ++a) z[a] += rad * dir[a] / len;
      neigh_fail += neighborhood_cert(cert, z) ? 0 : 1;
    }
    Json j = to_json(cert);
    j["oracle_D"] = brute_force_D(P, directions, ctx.seed + k);
    j["neighborhood_failures"] = neigh_fail;
    if (!verify_cert(cert) || neigh_fail > 0) ++failures;
    certs.push_back(j);
  }
  write_json(ctx.out / "certificates.json", Json{{"certificates", certs}, {"failures", failures}}, ctx.hash);
  std::printf("%d instances, %d failing\n", instances, failures);
  return failures == 0 ? kPass : kFail;
}

int cmd_verify(const Context& ctx) {
  VerifyOptions vo;
  vo.criteria = parse_criteria(ctx.cfg.get("verify.criteria", std::string("all")));
  if (vo.criteria.empty()) throw ConfigError("verify: empty criteria list");
  vo.threads = ctx.threads;
  vo.seed = ctx.seed;
  vo.flow_h = ctx.cfg.get("verify.flow_h", vo.flow_h);
  if (!(vo.flow_h > 0.0)) throw ConfigError("verify.flow_h must be positive");
  const auto results = run_criteria(vo, [](const CriterionResult& r) {
    std::fprintf(stderr, "finished %d %s\n", r.id, r.name.c_str());
  });
  Json all = Json::array();
  std::ofstream summary;
  fs::create_directories(ctx.out);
  summary.open(ctx.out / "summary.txt");
  summary << "# config_hash=" << ctx.hash << '\n';
  bool ok = true;
  for (const auto& r : results) {
    const std::string line = summary_line(r);
    std::printf("%s\n", line.c_str());
    summary << line << '\n';
    all.push_back(to_json(r));
    ok = ok && r.pass;
  }
  write_json(ctx.out / "verify.json", Json{{"criteria", all}, {"pass", ok}}, ctx.hash);
  return ok ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gsflow: ground states, gradient flows and bubble decompositions"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "INI configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed (overrides [run] seed)");
  app.add_option("--threads", threads, "worker threads for verify")->check(CLI::PositiveNumber);

  using Cmd = int (*)(const Context&);
  const std::vector<std::tuple<std::string, std::string, Cmd>> commands = {
      {"ground-state", "shoot the radial ground state and report its tail", cmd_ground_state},
      {"flow", "run the gradient flow with bubble fits along the way", cmd_flow},
      {"fit", "fit M bubbles to the configured field", cmd_fit},
      {"spectrum", "spectrum and coercivity of the second variation", cmd_spectrum},
      {"threshold", "bisect the vanish/blow-up threshold of scaled data", cmd_threshold},
      {"separate", "separation certificates for random point sets", cmd_separate},
      {"verify", "run the acceptance criteria", cmd_verify},
  };
  Cmd chosen = nullptr;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    // Flags are accepted before or after the subcommand.
    sub->fallthrough();
    sub->callback([&chosen, fn = fn] { chosen = fn; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    Context ctx;
    ctx.cfg = config_path.empty() ? Config::parse("", "<defaults>") : Config::load(config_path);
    if (seed) ctx.cfg.set("run.seed", std::to_string(*seed));
    if (threads) ctx.cfg.set("run.threads", std::to_string(*threads));
    ctx.seed = ctx.cfg.get_u64("run.seed", 1);
    ctx.threads = ctx.cfg.get("run.threads", 1);
    if (ctx.threads < 1) throw ConfigError("run.threads must be >= 1");
    ctx.out = out_dir;
    ctx.hash = ctx.cfg.hash();
    const std::string task = ctx.cfg.get("task.name", std::string());
    if (!task.empty() && task != app.get_subcommands().front()->get_name()) {
      throw ConfigError("config is for task '" + task + "', not '" +
                        app.get_subcommands().front()->get_name() + "'");
    }
    fs::create_directories(ctx.out);
    return chosen(ctx);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsage;
  } catch (const PreconditionError& e) {
    std::fprintf(stderr, "invalid parameters: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFail;
  }
}
