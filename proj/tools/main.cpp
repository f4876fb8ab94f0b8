// avgtori: command-line front end.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <avgtori/bell.hpp>
#include <avgtori/errors.hpp>
#include <avgtori/example4d.hpp>
#include <avgtori/guiding.hpp>
#include <avgtori/melnikov.hpp>
#include <avgtori/system.hpp>
#include <avgtori/toruslab.hpp>

#include "output.hpp"

using namespace avgtori;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

// --system FILE | --builtin NAME with the example parameters.
struct SystemSource {
  std::string file;
  std::string builtin;
  int mu = 1;
  int bigN = 2;

  void add_to(CLI::App* app, const std::string& builtin_help) {
    auto* f = app->add_option("--system", file, "System definition file (JSON)")->check(CLI::ExistingFile);
    auto* b = app->add_option("--builtin", builtin, builtin_help);
    f->excludes(b);
    app->add_option("--mu", mu, "Sign mu of the example (+1 or -1)")->check(CLI::IsMember({1, -1}));
    app->add_option("--bigN", bigN, "Order N of the example's leading perturbation")->check(CLI::Range(2, 7));
  }

  bool is_builtin() const { return file.empty(); }

  void require(const std::vector<std::string>& names) const {
    if (file.empty() && builtin.empty()) throw cli::UsageError("one of --system or --builtin is required");
    if (!file.empty()) return;
    if (std::find(names.begin(), names.end(), builtin) == names.end()) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      throw cli::UsageError("unknown built-in '" + builtin + "' (available: " + list + ")");
    }
  }

  std::shared_ptr<const example4d::Model> model() const {
    return std::make_shared<const example4d::Model>(example4d::Config::standard(bigN, mu));
  }

  json describe() const {
    if (!file.empty()) return json{{"system", load_system(file).to_json_text()}};
    return json{{"builtin", builtin}, {"mu", mu}, {"bigN", bigN}};
  }
};

void emit(const json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
    return;
  }
  auto f = cli::open_out(out);
  f << text;
}

// ---------------------------------------------------------------- bell

struct BellArgs {
  int n = 0, k = 0;
  std::vector<std::string> args;
};

int run_bell(const BellArgs& a) {
  bool integral = true;
  std::vector<double> dx;
  std::vector<std::int64_t> ix;
  for (const auto& s : a.args) {
    const double v = cli::parse_number(s);
    dx.push_back(v);
    if (v != std::floor(v) || std::abs(v) > 1e15 || s.find('.') != std::string::npos) integral = false;
    ix.push_back(static_cast<std::int64_t>(v));
  }
  if (integral)
    std::cout << bell::bell_eval(a.n, a.k, std::span<const std::int64_t>(ix)) << "\n";
  else
    std::cout << cli::num(bell::bell_eval(a.n, a.k, std::span<const double>(dx))) << "\n";
  return cli::kOk;
}

// ---------------------------------------------------------------- melnikov

struct MelnikovArgs {
  SystemSource src;
  int order = 0;
  std::vector<std::string> points;
  double grid_lo = -1.0, grid_hi = 1.0;
  int grid_n = 5;
  bool averaged = false;
  int vanish_n = 32;
  double tol_vanish = 1e-8;
  double tol_quad = 1e-10;
  std::string out;
};

int run_melnikov(const MelnikovArgs& a) {
  a.src.require({"example4d"});
  std::shared_ptr<const example4d::Model> model;
  std::optional<SystemSpec> owned;
  if (a.src.is_builtin()) {
    model = a.src.model();
  } else {
    owned.emplace(load_system(a.src.file));
  }
  const SystemSpec& spec = model ? model->cylindrical_spec() : *owned;
  const int n = spec.dimension();
  const int order = a.order > 0 ? a.order : spec.order();
  if (order > spec.order()) throw cli::UsageError("--order exceeds the system's truncation order");
  if (a.grid_n < 1 || !(a.grid_hi >= a.grid_lo)) throw cli::UsageError("invalid grid");

  std::vector<Eigen::VectorXd> pts;
  for (const auto& p : a.points) pts.push_back(cli::parse_point(p, n, "--point"));
  if (pts.empty()) {
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      Eigen::VectorXd z(n);
      for (int c = 0; c < n; ++c)
        z(c) = a.grid_n == 1 ? a.grid_lo
                             : a.grid_lo + (a.grid_hi - a.grid_lo) * idx[static_cast<std::size_t>(c)] / (a.grid_n - 1);
      pts.push_back(z);
      int c = n - 1;
      while (c >= 0 && ++idx[static_cast<std::size_t>(c)] == a.grid_n) idx[static_cast<std::size_t>(c--)] = 0;
      if (c < 0) break;
    }
  }

  QuadConfig quad;
  quad.abs_tol = a.tol_quad;
  std::optional<AveragedField> g;
  if (a.averaged) {
    VanishingGrid grid;
    grid.lo = a.grid_lo;
    grid.hi = a.grid_hi;
    grid.per_dim = a.vanish_n;
    grid.threshold = a.tol_vanish;
    g.emplace(spec, order, grid, quad);
  }

  json cfg = a.src.describe();
  cfg["command"] = "melnikov";
  cfg["order"] = order;
  cfg["averaged"] = a.averaged;
  cfg["tol_quad"] = a.tol_quad;
  cfg["tol_vanish"] = a.tol_vanish;
  cfg["vanish_grid"] = a.vanish_n;
  json jp = json::array();
  for (const auto& p : pts) jp.push_back(cli::to_json(p));
  cfg["points"] = jp;

  std::ofstream file;
  if (!a.out.empty()) file = cli::open_out(a.out);
  std::ostream& os = a.out.empty() ? std::cout : file;
  os << "# avgtori melnikov fingerprint=" << cli::fingerprint(cfg) << " order=" << order << "\n";
  for (int c = 1; c <= n; ++c) os << (c > 1 ? "," : "") << "z" << c;
  for (int c = 1; c <= n; ++c) os << ",f" << c;
  if (g)
    for (int c = 1; c <= n; ++c) os << ",g" << c;
  os << "\n";
  for (const auto& z : pts) {
    const Eigen::VectorXd f = melnikov_f(spec, order, z, quad);
    for (int c = 0; c < n; ++c) os << (c ? "," : "") << cli::num(z(c));
    for (int c = 0; c < n; ++c) os << "," << cli::num(f(c));
    if (g) {
      const Eigen::VectorXd gv = f / spec.period();
      for (int c = 0; c < n; ++c) os << "," << cli::num(gv(c));
    }
    os << "\n";
  }
  return cli::kOk;
}

// ---------------------------------------------------------------- cycle

struct CycleArgs {
  SystemSource src;
  std::string guiding = "closed-form";
  int order = 0;
  std::string guess;
  double period_guess = 0.0;
  double tol_newton = 1e-10;
  int max_iter = 50;
  std::string out;
};

int run_cycle(const CycleArgs& a) {
  a.src.require({"example4d"});
  std::shared_ptr<const example4d::Model> model;
  std::optional<SystemSpec> owned;
  std::optional<AveragedField> avg;
  AutonomousField g;
  double period_guess = a.period_guess;
  Eigen::VectorXd guess;
  int order = a.order;
  if (a.src.is_builtin() && a.guiding == "closed-form") {
    g = example4d::guiding_system(a.src.mu);
    if (period_guess <= 0) period_guess = 8 * kPi * kPi;
  } else {
    if (a.src.is_builtin()) {
      model = a.src.model();
      if (order <= 0) order = a.src.bigN + 1;
      if (period_guess <= 0) period_guess = 4 * kPi;
    } else {
      owned.emplace(load_system(a.src.file));
      if (order <= 0) order = owned->order();
      if (period_guess <= 0) throw cli::UsageError("--period-guess is required with --system");
    }
    avg.emplace(model ? model->cylindrical_spec() : *owned, order);
    g = avg->autonomous();
  }
  if (!a.guess.empty())
    guess = cli::parse_point(a.guess, g.dim, "--guess");
  else if (a.src.is_builtin())
    guess = Eigen::Vector3d(1.0, 1.0, 0.0);
  else
    throw cli::UsageError("--guess is required with --system");

  CycleConfig cc;
  cc.tol = a.tol_newton;
  cc.max_iter = a.max_iter;
  const LimitCycle c = find_cycle(g, guess, period_guess, cc);
  const double det = c.monodromy.determinant();
  const double lv = liouville_det(g, c);
  const auto cls = classify_stability(c);

  json cfg = a.src.describe();
  cfg["command"] = "cycle";
  cfg["guiding"] = a.src.is_builtin() ? a.guiding : "recursion";
  cfg["order"] = order;
  cfg["guess"] = cli::to_json(guess);
  cfg["period_guess"] = period_guess;
  cfg["tol_newton"] = a.tol_newton;
  cfg["max_iter"] = a.max_iter;

  json mult = json::array();
  for (Eigen::Index i = 0; i < c.multipliers.size(); ++i)
    mult.push_back({{"re", c.multipliers(i).real()}, {"im", c.multipliers(i).imag()}});
  json j{{"schema", "avgtori.cycle/1"},
         {"fingerprint", cli::fingerprint(cfg)},
         {"config", cfg},
         {"z_star", cli::to_json(c.anchor)},
         {"omega", c.period},
         {"multipliers", mult},
         {"trivial_index", c.trivial_index},
         {"k", c.k},
         {"hyperbolic", c.hyperbolic},
         {"attracting", cls.attracting},
         {"unstable_directions", cls.unstable_directions},
         {"residual", c.residual},
         {"iterations", c.iterations},
         {"det_check", {{"det", det}, {"liouville", lv}, {"rel_diff", std::abs(det - lv) / std::max(std::abs(lv), 1e-300)}}}};
  if (c.hyperbolic) {
    try {
      const auto fl = floquet_log(c);
      j["floquet"] = {{"doubled", fl.doubled}, {"residual", fl.residual}};
    } catch (const SolverError& e) {
      j["floquet"] = {{"error", e.what()}};
    }
  }
  emit(j, a.out);
  return cli::kOk;
}

// ---------------------------------------------------------------- torus

struct TorusArgs {
  SystemSource src;
  std::string section = "cylindrical";
  std::vector<std::string> eps;
  std::string seeds;
  std::string transient = "auto";
  std::string iters = "auto";
  long fit_points = 4000;
  int harmonics = 16;
  int bins = 64;
  double rotation_turns = 1.0;
  int probe_trials = 0;
  double probe_radius = 0.1;
  long probe_horizon = 4000;
  std::uint64_t rng_seed = 20240607;
  double tol_integ = 1e-10;
  std::string out;
};

long count_option(const std::string& v, double automatic, long floor_value, const std::string& name) {
  if (v == "auto") return std::max(floor_value, std::lround(automatic));
  const double d = cli::parse_number(v);
  if (!(d >= 0) || d != std::floor(d)) throw cli::UsageError(name + " must be a non-negative integer or 'auto'");
  return static_cast<long>(d);
}

int run_torus(const TorusArgs& a) {
  a.src.require({"example4d"});
  if (a.eps.empty()) throw cli::UsageError("--eps-grid is required");
  if (a.out.empty()) throw cli::UsageError("--out is required");
  if (a.section != "cylindrical" && a.section != "cartesian") throw cli::UsageError("--section must be cylindrical or cartesian");
  std::vector<double> grid;
  for (const auto& e : a.eps)
    for (const auto& part : cli::split(e, ',')) {
      const double v = cli::parse_number(part);
      if (!(v > 0)) throw cli::UsageError("eps values must be positive");
      grid.push_back(v);
    }

  std::shared_ptr<const example4d::Model> model;
  std::shared_ptr<const SystemSpec> spec;
  int ell = 0, dim = 0;
  if (a.src.is_builtin()) {
    model = a.src.model();
    ell = a.src.bigN + 1;
    dim = 3;
  } else {
    spec = std::make_shared<const SystemSpec>(load_system(a.src.file));
    ell = leading_zero_orders(*spec) + 1;
    dim = spec->dimension();
  }
  std::vector<Eigen::VectorXd> seeds;
  if (!a.seeds.empty())
    for (const auto& s : cli::split(a.seeds, ';')) seeds.push_back(cli::parse_point(s, dim, "--seeds entry"));
  else if (model)
    seeds.push_back(Eigen::Vector3d(1.0, 1.0, 0.0));
  else
    throw cli::UsageError("--seeds is required with --system");

  json cfg = a.src.describe();
  cfg["command"] = "torus";
  cfg["section"] = model ? a.section : "stroboscopic";
  cfg["eps"] = grid;
  json js = json::array();
  for (const auto& s : seeds) js.push_back(cli::to_json(s));
  cfg["seeds"] = js;
  cfg["transient"] = a.transient;
  cfg["iters"] = a.iters;
  cfg["fit_points"] = a.fit_points;
  cfg["harmonics"] = a.harmonics;
  cfg["bins"] = a.bins;
  cfg["rotation_turns"] = a.rotation_turns;
  cfg["probe"] = {{"trials", a.probe_trials}, {"radius", a.probe_radius}, {"horizon", a.probe_horizon}};
  cfg["rng_seed"] = a.rng_seed;
  cfg["tol_integ"] = a.tol_integ;
  const std::string fp = cli::fingerprint(cfg);

  const IntegratorConfig integ = IntegratorConfig::adaptive(a.tol_integ, a.tol_integ);
  // build every map first so that an eps outside the valid range fails before any work
  std::vector<SectionMap> maps;
  for (double eps : grid) {
    if (model)
      maps.push_back(a.section == "cartesian" ? example4d::cartesian_map(model, eps, integ)
                                              : example4d::cylindrical_map(model, eps, integ));
    else
      maps.push_back(stroboscopic_map(spec, eps, integ));
  }

  fs::create_directories(a.out);
  auto csv = cli::open_out(fs::path(a.out) / "torus.csv");
  auto curves = cli::open_out(fs::path(a.out) / "curves.csv");
  csv << "# avgtori torus fingerprint=" << fp << " rng_seed=" << a.rng_seed << "\n";
  csv << "eps,transient,iterates_used,seeds_used,seeds_escaped,invariance_residual,tube,distance_to_unperturbed,rho,"
         "rho_error\n";
  curves << "# avgtori torus fingerprint=" << fp << "\n";
  curves << "eps,k";
  for (int c = 1; c <= dim; ++c) curves << ",c" << c;
  curves << "\n";

  json rows = json::array();
  std::vector<double> lx, ly, ls;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double eps = grid[i], scale = std::pow(eps, -ell);
    const long transient = count_option(a.transient, scale, 2000, "--transient");
    const long keep = count_option(a.iters, 2.2 * scale, 4000, "--iters");
    TorusOptions o;
    o.harmonics = a.harmonics;
    o.bins = a.bins;
    o.stride = std::max(1L, keep / std::max(1L, a.fit_points));
    if (model) o.reference = example4d::guiding_section_trace();
    TorusEstimate est = detect_torus(maps[i], seeds, transient, keep, o);
    json row{{"eps", eps},
             {"transient", transient},
             {"iterates_used", est.iterates_used},
             {"seeds_used", est.seeds_used},
             {"seeds_escaped", est.seeds_escaped},
             {"invariance_residual", est.invariance_residual},
             {"tube", est.tube},
             {"distance_to_unperturbed", est.distance_to_unperturbed}};
    double rho = -1, rho_err = 0;
    if (a.rotation_turns > 0) {
      const auto r = rotation_over_turns(maps[i], est, a.rotation_turns, std::max(100000L, std::lround(20 * a.rotation_turns * scale)));
      rho = r.rho;
      rho_err = r.error;
      row["rho"] = rho;
      row["rho_error"] = rho_err;
      row["rho_iterates"] = r.iterates;
      if (rho > 0 && rho_err > 0) {
        lx.push_back(std::log(eps));
        ly.push_back(std::log(rho));
        ls.push_back(rho_err / rho);
      }
    }
    if (a.probe_trials > 0) {
      const auto p = stability_probe(maps[i], est, a.probe_radius, a.probe_trials, a.probe_horizon, a.rng_seed);
      row["stability"] = {{"fraction_attracted", p.fraction_attracted},
                          {"fraction_escaped", p.fraction_escaped},
                          {"fraction_undecided", p.fraction_undecided},
                          {"classification", p.classification},
                          {"rng_seed", p.rng_seed},
                          {"trials", p.trials}};
    }
    rows.push_back(row);
    csv << cli::num(eps) << "," << transient << "," << est.iterates_used << "," << est.seeds_used << ","
        << est.seeds_escaped << "," << cli::num(est.invariance_residual) << "," << cli::num(est.tube) << ","
        << cli::num(est.distance_to_unperturbed) << "," << cli::num(rho) << "," << cli::num(rho_err) << "\n";
    const auto samples = est.curve.sample(256);
    for (std::size_t k = 0; k < samples.size(); ++k) {
      curves << cli::num(eps) << "," << k;
      for (int c = 0; c < dim; ++c) curves << "," << cli::num(samples[k](c));
      curves << "\n";
    }
  }

  json summary{{"schema", "avgtori.torus/1"}, {"fingerprint", fp}, {"config", cfg}, {"rows", rows}, {"rng_seed", a.rng_seed}};
  if (lx.size() >= 2) {
    // log rho against log eps: inverse-variance weighted and plain least squares
    auto fit = [&](bool weighted) {
      double sw = 0, mx = 0, my = 0, sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        const double w = weighted ? 1 / (ls[i] * ls[i]) : 1.0;
        sw += w;
        mx += w * lx[i];
        my += w * ly[i];
      }
      mx /= sw;
      my /= sw;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        const double w = weighted ? 1 / (ls[i] * ls[i]) : 1.0;
        sxy += w * (lx[i] - mx) * (ly[i] - my);
        sxx += w * (lx[i] - mx) * (lx[i] - mx);
      }
      return sxy / sxx;
    };
    summary["rotation_slope"] = {{"weighted", fit(true)}, {"unweighted", fit(false)}, {"expected", ell}};
  }
  auto jf = cli::open_out(fs::path(a.out) / "torus.json");
  jf << summary.dump(2) << "\n";
  return cli::kOk;
}

// ---------------------------------------------------------------- fig1

struct Fig1Args {
  std::string out;
  std::string eps = "1/15";
  long iters = 10345;
  double tol_integ = 1e-10;
};

int run_fig1(const Fig1Args& a) {
  example4d::Fig1Options o;
  o.eps = cli::parse_number(a.eps);
  o.iterations = a.iters;
  o.integ = IntegratorConfig::adaptive(a.tol_integ, a.tol_integ);
  if (!(o.eps > 0)) throw cli::UsageError("--eps must be positive");
  if (o.iterations <= o.fit_transient) throw cli::UsageError("--iters must exceed " + std::to_string(o.fit_transient));
  json cfg{{"command", "fig1"}, {"eps", o.eps}, {"iters", o.iterations}, {"tol_integ", a.tol_integ},
           {"tail", o.tail}, {"fit_transient", o.fit_transient}, {"N", 2}, {"mu", 1}};
  const std::string fp = cli::fingerprint(cfg);
  auto model = std::make_shared<const example4d::Model>(example4d::Config::standard(2, 1));
  model->check_eps(o.eps);

  const auto r = example4d::reproduce_fig1(o);
  fs::create_directories(a.out);
  for (std::size_t s = 0; s < r.orbits.size(); ++s) {
    auto f = cli::open_out(fs::path(a.out) / ("fig1_seed" + std::to_string(s + 1) + ".csv"));
    const auto& seed = r.seeds[s];
    f << "# avgtori fig1 fingerprint=" << fp << " seed=(" << cli::num(seed(0)) << "," << cli::num(seed(1)) << ","
      << cli::num(seed(2)) << "," << cli::num(seed(3)) << ")\n";
    f << "seed,iter,x,u,v\n";
    f << s + 1 << ",0," << cli::num(seed(0)) << "," << cli::num(seed(2)) << "," << cli::num(seed(3)) << "\n";
    for (std::size_t i = 0; i < r.orbits[s].size(); ++i) {
      const auto& p = r.orbits[s][i];
      f << s + 1 << "," << i + 1 << "," << cli::num(p(0)) << "," << cli::num(p(1)) << "," << cli::num(p(2)) << "\n";
    }
  }
  json verdict{{"schema", "avgtori.fig1/1"},
               {"fingerprint", fp},
               {"config", cfg},
               {"bounded", r.bounded},
               {"residual", r.bounded ? json(r.torus.invariance_residual) : json(nullptr)},
               {"tube", r.bounded ? json(r.tube) : json(nullptr)},
               {"hausdorff_uv", r.bounded ? json(r.hausdorff_uv) : json(nullptr)},
               {"hausdorff_x", r.bounded ? json(r.hausdorff_x) : json(nullptr)}};
  if (!r.bounded) verdict["failure"] = r.failure;
  auto f = cli::open_out(fs::path(a.out) / "verdict.json");
  f << verdict.dump(2) << "\n";
  return r.bounded ? cli::kOk : cli::kSolver;
}

int fail(int code, const std::string& what) {
  std::cerr << "avgtori: " << what << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Averaging, Melnikov functions, guiding cycles and invariant tori"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);

  BellArgs bell_args;
  auto* bell = app.add_subcommand("bell", "Evaluate a partial Bell polynomial B_{n,k}(x_1, ...)");
  bell->add_option("n", bell_args.n)->required();
  bell->add_option("k", bell_args.k)->required();
  bell->add_option("args", bell_args.args, "x_1 .. x_{n-k+1}")->required();

  MelnikovArgs mel;
  auto* melnikov = app.add_subcommand("melnikov", "Tabulate the Melnikov function f_i on points or a grid (CSV)");
  mel.src.add_to(melnikov, "Built-in system: example4d (cylindrical form)");
  melnikov->add_option("--order", mel.order, "Order i (default: the system's N)")->check(CLI::PositiveNumber);
  melnikov->add_option("--point", mel.points, "Evaluation point 'z1,...,zn' (repeatable)");
  melnikov->add_option("--grid-lo", mel.grid_lo, "Grid lower bound per dimension");
  melnikov->add_option("--grid-hi", mel.grid_hi, "Grid upper bound per dimension");
  melnikov->add_option("--grid-n", mel.grid_n, "Grid points per dimension")->check(CLI::PositiveNumber);
  melnikov->add_flag("--averaged", mel.averaged, "Also emit g_i = f_i / T after checking lower orders vanish");
  melnikov->add_option("--vanish-grid", mel.vanish_n, "Points per dimension for the vanishing check")->check(CLI::PositiveNumber);
  melnikov->add_option("--tol-vanish", mel.tol_vanish, "Vanishing threshold")->check(CLI::PositiveNumber);
  melnikov->add_option("--tol-quad", mel.tol_quad, "Quadrature absolute tolerance")->check(CLI::PositiveNumber);
  melnikov->add_option("--out", mel.out, "Output CSV (default: stdout)");

  CycleArgs cyc;
  auto* cycle = app.add_subcommand("cycle", "Find a limit cycle of the guiding system (JSON report)");
  cyc.src.add_to(cycle, "Built-in system: example4d");
  cycle->add_option("--guiding", cyc.guiding, "Built-in guiding field: closed-form or recursion")
      ->check(CLI::IsMember({"closed-form", "recursion"}));
  cycle->add_option("--order", cyc.order, "Averaging order l (default: first nonvanishing)")->check(CLI::PositiveNumber);
  cycle->add_option("--guess", cyc.guess, "Initial point 'z1,...,zn'");
  cycle->add_option("--period-guess", cyc.period_guess, "Initial period")->check(CLI::PositiveNumber);
  cycle->add_option("--tol-newton", cyc.tol_newton, "Newton residual tolerance")->check(CLI::PositiveNumber);
  cycle->add_option("--max-iter", cyc.max_iter, "Newton iteration cap")->check(CLI::PositiveNumber);
  cycle->add_option("--out", cyc.out, "Output JSON (default: stdout)");

  TorusArgs tor;
  auto* torus = app.add_subcommand("torus", "Detect invariant curves over an eps grid (CSV + JSON)");
  tor.src.add_to(torus, "Built-in system: example4d");
  torus->add_option("--section", tor.section, "Section of the built-in example: cylindrical or cartesian");
  torus->add_option("--eps-grid,--eps", tor.eps, "Values of eps, comma separated; fractions like 1/15 allowed");
  torus->add_option("--seeds", tor.seeds, "Seeds 'a,b,c;d,e,f' on the section");
  torus->add_option("--transient", tor.transient, "Discarded iterates per seed, or 'auto' (1/eps^l)");
  torus->add_option("--iters", tor.iters, "Kept iterates per seed, or 'auto' (2.2/eps^l)");
  torus->add_option("--fit-points", tor.fit_points, "Approximate number of kept points per seed")->check(CLI::PositiveNumber);
  torus->add_option("--harmonics", tor.harmonics, "Fourier harmonics of the fitted curve")->check(CLI::PositiveNumber);
  torus->add_option("--bins", tor.bins, "Angular bins")->check(CLI::PositiveNumber);
  torus->add_option("--rotation-turns", tor.rotation_turns, "Turns used for the rotation number (0 disables)")
      ->check(CLI::NonNegativeNumber);
  torus->add_option("--probe-trials", tor.probe_trials, "Stability probe trials (0 disables)")->check(CLI::NonNegativeNumber);
  torus->add_option("--probe-radius", tor.probe_radius, "Stability probe radius")->check(CLI::PositiveNumber);
  torus->add_option("--probe-horizon", tor.probe_horizon, "Stability probe iterates")->check(CLI::PositiveNumber);
  torus->add_option("--rng-seed", tor.rng_seed, "Seed of the stability probe");
  torus->add_option("--tol-integ", tor.tol_integ, "Integrator tolerance")->check(CLI::PositiveNumber);
  torus->add_option("--out", tor.out, "Output directory")->required();

  Fig1Args f1;
  auto* fig1 = app.add_subcommand("fig1", "Iterate the four-seed Poincare experiment (4 CSV + verdict JSON)");
  fig1->add_option("--out", f1.out, "Output directory")->required();
  fig1->add_option("--eps", f1.eps, "eps (default 1/15)");
  fig1->add_option("--iters", f1.iters, "Iterates per seed")->check(CLI::PositiveNumber);
  fig1->add_option("--tol-integ", f1.tol_integ, "Integrator tolerance")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  try {
    if (*bell) return run_bell(bell_args);
    if (*melnikov) return run_melnikov(mel);
    if (*cycle) return run_cycle(cyc);
    if (*torus) return run_torus(tor);
    if (*fig1) return run_fig1(f1);
    return cli::kUsage;
  } catch (const cli::UsageError& e) {
    return fail(cli::kUsage, e.what());
  } catch (const avgtori::ParseError& e) {
    return fail(cli::kUsage, e.what());
  } catch (const HypothesisError& e) {
    return fail(cli::kHypothesis, std::string("hypothesis violated: ") + e.what());
  } catch (const SolverError& e) {
    return fail(cli::kSolver, std::string("solver failure: ") + e.what());
  } catch (const ValidityError& e) {
    return fail(cli::kGuard, std::string("validity guard: ") + e.what());
  } catch (const IntegrationError& e) {
    return fail(cli::kSolver, std::string("integration failure: ") + e.what());
  } catch (const std::logic_error& e) {
    return fail(cli::kUsage, e.what());
  } catch (const std::exception& e) {
    return fail(cli::kInternal, std::string("internal error: ") + e.what());
  }
}
