// Command-line frontend: ingest monodromy JSON, construct gradings and the
// model metric, run the diagnostic and solver suites, emit JSON reports plus
// CSV side files.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include "nilflow/flow.hpp"
#include "nilflow/h0.hpp"
#include "nilflow/io.hpp"
#include "nilflow/lie.hpp"

namespace fs = std::filesystem;
using namespace nilflow;
using io::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct JobConfig {
  std::string command;
  std::string input;
  std::string out = ".";
  std::string grid = "64,64";
  double alpha = 2.0;
  double ymax = 2.0 + kTwoPi;
  double tol = 1e-8;
  bool serial = true;
  double omega = 0.8;
  long max_sweeps = 100000;
  std::string order = "redblack";
  double perturb = 0.0;
  std::string schedule;  // e.g. "8,16,32" switches solve to exhaustion mode
  int nx = 64, ny = 64;
};

std::pair<int, int> parse_grid(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ValidationError("--grid expects nx,ny");
  try {
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ValidationError("--grid expects nx,ny");
  }
}

std::vector<double> parse_schedule(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ValidationError("--schedule expects a comma-separated list of heights");
    }
  }
  if (out.empty()) throw ValidationError("--schedule expects a comma-separated list of heights");
  return out;
}

int worker_threads(const JobConfig& cfg) {
  if (cfg.serial) return 1;
  int n = int(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NILFLOW_THREADS")) {
    try {
      n = std::min(n, std::stoi(env));
    } catch (const std::exception&) {
      throw ValidationError("NILFLOW_THREADS must be an integer");
    }
  }
  return std::max(1, n);
}

flow::SweepOrder parse_order(const std::string& s) {
  if (s == "redblack") return flow::SweepOrder::RedBlack;
  if (s == "lex") return flow::SweepOrder::Lexicographic;
  if (s == "revlex") return flow::SweepOrder::ReverseLexicographic;
  throw ValidationError("--order must be redblack, lex or revlex");
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open input file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

lie::CommutingGrading load_grading(const JobConfig& cfg) {
  if (cfg.input.empty()) throw ValidationError("--input is required for this command");
  auto gammas = io::parse_generators_json(read_file(cfg.input));
  auto fam = lie::validate_family(gammas);
  return lie::commuting_grading(fam.nilpotents);
}

void write_report(const JobConfig& cfg, json& report) {
  report["conventions"] = io::conventions_block();
  fs::create_directories(cfg.out);
  const std::string path = (fs::path(cfg.out) / "report.json").string();
  io::write_text_file(path, io::dump_json(report));
  std::cout << path << "\n";
}

// ---------------------------------------------------------------------------

int cmd_triples(const JobConfig& cfg) {
  if (cfg.input.empty()) throw ValidationError("--input is required for triples");
  auto gammas = io::parse_generators_json(read_file(cfg.input));
  auto fam = lie::validate_family(gammas);
  auto grading = lie::commuting_grading(fam.nilpotents);

  json rep;
  rep["command"] = "triples";
  rep["r"] = fam.monodromy.r;
  rep["k"] = fam.monodromy.k;
  json gs = json::array();
  for (const auto& g : fam.monodromy.gammas) gs.push_back(io::ratmat_to_json(g));
  rep["generators"] = std::move(gs);
  json logs = json::array();
  for (const auto& n : fam.nilpotents.N) logs.push_back(io::ratmat_to_json(n));
  rep["N_input_basis"] = std::move(logs);
  rep["grading"] = io::grading_to_json(grading);

  // brackets are exact by construction; report the literal residuals
  json res = json::array();
  for (size_t i = 0; i < grading.N.size(); ++i) {
    json ri;
    if (grading.N[i].is_zero()) {
      ri["zero_member"] = true;
    } else {
      lie::Sl2Triple t{grading.N[i], grading.Y[i], grading.Nminus[i]};
      ri["brackets_exact"] = lie::triple_brackets_exact(t);
      ri["residual"] = 0;
    }
    res.push_back(std::move(ri));
  }
  rep["bracket_residuals"] = std::move(res);
  write_report(cfg, rep);
  return 0;
}

int cmd_h0_eval(const JobConfig& cfg) {
  auto grading = load_grading(cfg);
  auto model = h0::ChartModel::from_grading(grading);
  if (model.k != 1)
    throw ValidationError("h0-eval grid dumps require k = 1 (a transversal disk model)");
  if (!(cfg.alpha > 1.0))
    throw ValidationError("h0-eval: the chart needs alpha > 1");
  flow::HalfCylinderGrid grid(cfg.alpha, cfg.ymax, cfg.nx, cfg.ny);
  // chart-gauge samples of the model itself
  flow::EquivariantField field(grid, model.gamma[0], model.r);
  std::vector<h0::ChartPoint> pts;
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      h0::ChartPoint p;
      p.theta = {grid.x(ix)};
      p.L = {grid.y(iy)};
      field.value(ix, iy) = h0::eval_h0(model, p).mat();
      if (ix == 0) pts.push_back(std::move(p));
    }
  fs::create_directories(cfg.out);
  const std::string csv = (fs::path(cfg.out) / "h0_grid.csv").string();
  io::write_field_csv(csv, field);

  json rep;
  rep["command"] = "h0-eval";
  rep["r"] = model.r;
  rep["grid"] = {{"nx", grid.nx}, {"ny", grid.ny}, {"alpha", grid.alpha}, {"ymax", grid.ymax}};
  rep["csv"] = csv;
  rep["equivariance_residual"] = h0::equivariance_residual(model, pts);
  write_report(cfg, rep);
  return 0;
}

int cmd_verify(const JobConfig& cfg) {
  auto grading = load_grading(cfg);
  auto model = h0::ChartModel::from_grading(grading);

  json rep;
  rep["command"] = "verify";
  rep["r"] = model.r;
  rep["k"] = model.k;
  rep["grading_tier"] = grading.tier;

  // equivariance over a deterministic sample set
  std::vector<h0::ChartPoint> pts;
  for (int i = 0; i < model.k; ++i)
    for (double th : {0.0, 1.1, 2.9, 4.4, 5.8})
      for (double l : {10.0, 31.6, 1000.0}) {
        h0::ChartPoint p;
        p.theta.assign(model.k, 0.4);
        p.L.assign(model.k, 12.0);
        p.theta[i] = th;
        p.L[i] = l;
        pts.push_back(std::move(p));
      }
  const double equiv = h0::equivariance_residual(model, pts);
  rep["equivariance_residual"] = equiv;
  rep["equivariance_exact_spotcheck"] =
      h0::exact_equivariance_check(model, {rat(0), rat(1, 2), rat(1, 3)});

  bool pass = equiv <= 1e-10;

  json dirs = json::array();
  for (int i = 0; i < model.k; ++i) {
    json d;
    d["direction"] = i;
    auto stats = h0::density_sweep(model, i);
    d["density"] = {{"mean", stats.mean},
                    {"stddev", stats.stddev},
                    {"min", stats.min},
                    {"max", stats.max},
                    {"relative_stddev", stats.mean > 0 ? stats.stddev / stats.mean : 0.0}};
    const bool density_const = stats.mean <= 0 || stats.stddev / stats.mean < 1e-6;
    d["density_constant"] = density_const;
    pass = pass && density_const;

    json expo = json::array();
    bool expo_ok = true;
    for (int j = 0; j < model.r; ++j) {
      CVec v = CVec::Zero(model.r);
      v[j] = 1.0;
      const double slope = h0::asymptotic_exponent(model, i, v);
      const double expected = model.Yw[i][j];
      expo.push_back({{"basis_vector", j}, {"slope", slope}, {"expected", expected}});
      expo_ok = expo_ok && std::abs(slope - expected) <= 0.01;
    }
    d["section_norm_exponents"] = std::move(expo);
    d["exponents_match"] = expo_ok;
    pass = pass && expo_ok;

    d["nilpotent_decay_sup"] = h0::nilpotent_decay(model, i, h0::decay_samples(model, i));

    // dH0 split at a few chart points
    double ymax_part = 0, nmax_part = 0, recomb = 0;
    for (double l : {10.0, 100.0, 10000.0}) {
      h0::ChartPoint p;
      p.theta.assign(model.k, 0.7);
      p.L.assign(model.k, 12.0);
      p.L[i] = l;
      auto parts = h0::dh0_parts(model, i, p);
      ymax_part = std::max(ymax_part, parts.y_part);
      nmax_part = std::max(nmax_part, parts.n_part);
      recomb = std::max(recomb, parts.recomb_residual);
    }
    d["dh0"] = {{"y_part_max", ymax_part}, {"n_part_max", nmax_part},
                {"recombination_residual", recomb}};
    const bool recomb_ok = recomb < 1e-6;
    d["recombination_ok"] = recomb_ok;
    pass = pass && recomb_ok;

    json law = json::array();
    bool law_ok = true;
    for (int j = 0; j < model.r; ++j) {
      CVec v = CVec::Zero(model.r);
      v[j] = 1.0;
      auto verdict = h0::section_norm_law(model, i, v);
      law.push_back({{"basis_vector", j},
                     {"vacuous", verdict.vacuous},
                     {"slope", verdict.slope},
                     {"weight", verdict.weight},
                     {"pass", verdict.pass}});
      law_ok = law_ok && verdict.pass;
    }
    d["norm_law"] = std::move(law);
    d["norm_law_ok"] = law_ok;
    pass = pass && law_ok;

    dirs.push_back(std::move(d));
  }
  rep["directions"] = std::move(dirs);
  rep["pass"] = pass;
  write_report(cfg, rep);
  return pass ? 0 : 2;
}

int cmd_solve(const JobConfig& cfg) {
  auto grading = load_grading(cfg);
  auto model = h0::ChartModel::from_grading(grading);
  if (model.k != 1) throw ValidationError("solve requires k = 1 (a transversal disk model)");

  flow::RelaxOptions ropt;
  ropt.tol = cfg.tol;
  ropt.omega = cfg.omega;
  ropt.max_sweeps = cfg.max_sweeps;
  ropt.order = parse_order(cfg.order);
  ropt.threads = worker_threads(cfg);
  ropt.energy_every = 50;

  fs::create_directories(cfg.out);
  json rep;
  rep["command"] = "solve";
  rep["serial"] = cfg.serial;

  if (!cfg.schedule.empty()) {
    flow::ExhaustionOptions eopt;
    eopt.alpha = cfg.alpha;
    eopt.nx = cfg.nx;
    eopt.hy = (cfg.ymax - cfg.alpha) / (cfg.ny - 1);
    eopt.relax = ropt;
    auto stages = flow::exhaustion_solve(model, parse_schedule(cfg.schedule), eopt);
    json js = json::array();
    bool all_converged = true;
    for (const auto& st : stages) {
      js.push_back({{"ymax", st.ymax},
                    {"ny", st.ny},
                    {"converged", st.result.converged},
                    {"sweeps", st.result.sweeps},
                    {"final_movement", st.result.final_movement},
                    {"energy", st.energy},
                    {"init_energy", st.init_energy},
                    {"gap_prev_band", st.gap_prev_band}});
      all_converged = all_converged && st.result.converged;
    }
    rep["stages"] = std::move(js);
    write_report(cfg, rep);
    return all_converged ? 0 : 2;
  }

  flow::HalfCylinderGrid grid(cfg.alpha, cfg.ymax, cfg.nx, cfg.ny);
  auto field = flow::init_field(model, grid);
  const std::string init_csv = (fs::path(cfg.out) / "field_init.csv").string();
  io::write_field_csv(init_csv, field);
  if (cfg.perturb != 0.0) flow::bump_bottom_row(field, model, cfg.perturb);

  auto res = flow::relax(field, ropt);
  const std::string relaxed_csv = (fs::path(cfg.out) / "field_relaxed.csv").string();
  io::write_field_csv(relaxed_csv, field);

  auto sup = flow::sup_dist_to_model(field, model);
  rep["grid"] = {{"nx", grid.nx}, {"ny", grid.ny}, {"alpha", grid.alpha}, {"ymax", grid.ymax}};
  rep["perturb"] = cfg.perturb;
  rep["csv_init"] = init_csv;
  rep["csv_relaxed"] = relaxed_csv;
  rep["converged"] = res.converged;
  rep["sweeps"] = res.sweeps;
  rep["final_movement"] = res.final_movement;
  rep["energy_history"] = res.energy_history;
  rep["tension_residual"] = flow::tension_residual(field);
  rep["seam_residual"] = flow::seam_residual(field, model);
  rep["sup_dist"] = {{"interior", sup.interior_sup},
                     {"boundary", sup.boundary_sup},
                     {"arg_ix", sup.arg_ix},
                     {"arg_iy", sup.arg_iy},
                     {"max_principle", sup.max_principle}};
  write_report(cfg, rep);
  return res.converged ? 0 : 2;
}

int cmd_scalar(const JobConfig& cfg) {
  flow::HalfCylinderGrid grid(cfg.alpha, cfg.ymax, cfg.nx, cfg.ny);
  std::vector<double> g0(grid.nx, 0.0), g1(grid.nx);
  for (int ix = 0; ix < grid.nx; ++ix) g1[ix] = std::sin(grid.x(ix));
  auto u = flow::scalar_harmonic_solve(grid, g0, g1);

  double err = 0, umax = 0, bmax = 0;
  const double denom = std::sinh(grid.ymax - grid.alpha);
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double exact = std::sin(grid.x(ix)) * std::sinh(grid.y(iy) - grid.alpha) / denom;
      err = std::max(err, std::abs(u.at(ix, iy) - exact));
      umax = std::max(umax, u.at(ix, iy));
    }
  for (int ix = 0; ix < grid.nx; ++ix)
    bmax = std::max({bmax, std::abs(g0[ix]), std::abs(g1[ix])});

  const double span = grid.ymax - grid.alpha;
  const double rcut = grid.alpha + 0.375 * span;
  const double rho = 0.5 * span;
  auto cut = flow::cutoff_inequality_check(u, rcut, rho);

  // vanishing study: same bottom/top data on growing truncations
  json vanish = json::array();
  for (int stage = 0; stage < 3; ++stage) {
    const double ym = grid.alpha + span * std::pow(2.0, stage);
    const int ny = int(std::lround((ym - grid.alpha) / grid.hy())) + 1;
    flow::HalfCylinderGrid gs(grid.alpha, grid.alpha + (ny - 1) * grid.hy(), grid.nx, ny);
    auto us = flow::scalar_harmonic_solve(gs, g0, g1);
    vanish.push_back({{"ymax", gs.ymax},
                      {"band_sup", flow::scalar_band_sup(us, grid.alpha, grid.alpha + 2.0)}});
  }

  fs::create_directories(cfg.out);
  const std::string csv = (fs::path(cfg.out) / "scalar_grid.csv").string();
  io::write_scalar_csv(csv, u);

  json rep;
  rep["command"] = "scalar";
  rep["grid"] = {{"nx", grid.nx}, {"ny", grid.ny}, {"alpha", grid.alpha}, {"ymax", grid.ymax}};
  rep["csv"] = csv;
  rep["closed_form_max_error"] = err;
  rep["max_principle"] = {{"interior_max", umax}, {"boundary_max", bmax},
                          {"holds", umax <= bmax + 1e-10}};
  rep["cutoff"] = {{"r", rcut}, {"rho", rho}, {"lhs", cut.lhs}, {"rhs", cut.rhs},
                   {"ratio", cut.ratio}, {"bound_holds", cut.ratio <= 4.05}};
  rep["vanishing_study"] = std::move(vanish);
  write_report(cfg, rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  JobConfig cfg;
  CLI::App app{"model metrics for unipotent bundles over punctured disks and "
               "an equivariant harmonic relaxation toolkit"};
  app.add_option("--command", cfg.command, "triples | h0-eval | verify | solve | scalar")
      ->required()
      ->check(CLI::IsMember({"triples", "h0-eval", "verify", "solve", "scalar"}));
  app.add_option("--input", cfg.input, "monodromy JSON {r, k, generators}");
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--grid", cfg.grid, "grid as nx,ny");
  app.add_option("--alpha", cfg.alpha, "inner edge y = alpha (> 1 for model grids)");
  app.add_option("--ymax", cfg.ymax, "outer edge");
  app.add_option("--tol", cfg.tol, "relaxation stop tolerance");
  app.add_option("--serial", cfg.serial, "serial deterministic mode (default true)");
  app.add_option("--omega", cfg.omega, "relaxation damping in (0, 1]");
  app.add_option("--max-sweeps", cfg.max_sweeps, "relaxation sweep budget");
  app.add_option("--order", cfg.order, "sweep order: redblack | lex | revlex");
  app.add_option("--perturb", cfg.perturb, "bottom-row geodesic bump size for solve");
  app.add_option("--schedule", cfg.schedule, "exhaustion heights, e.g. 8,16,32");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    json body;
    body["error"] = "cli";
    body["message"] = e.what();
    std::cout << io::dump_json(body);
    return 1;
  }

  try {
    auto [nx, ny] = parse_grid(cfg.grid);
    cfg.nx = nx;
    cfg.ny = ny;
    if (cfg.tol <= 0) throw ValidationError("--tol must be positive");
    if (!(cfg.omega > 0) || cfg.omega > 1) throw ValidationError("--omega must be in (0, 1]");

    if (cfg.command == "triples") return cmd_triples(cfg);
    if (cfg.command == "h0-eval") return cmd_h0_eval(cfg);
    if (cfg.command == "verify") return cmd_verify(cfg);
    if (cfg.command == "solve") return cmd_solve(cfg);
    if (cfg.command == "scalar") return cmd_scalar(cfg);
    throw ValidationError("unknown command");
  } catch (const ValidationError& e) {
    json body;
    body["error"] = "validation";
    body["message"] = e.what();
    std::cout << io::dump_json(body);
    return 1;
  } catch (const NonCommutingError& e) {
    json body;
    body["error"] = "validation";
    body["message"] = e.what();
    body["witness_pair"] = {e.i, e.j};
    std::cout << io::dump_json(body);
    return 1;
  } catch (const DetNotOneError& e) {
    json body;
    body["error"] = "validation";
    body["message"] = e.what();
    std::cout << io::dump_json(body);
    return 1;
  } catch (const NotUnipotentError& e) {
    json body;
    body["error"] = "validation";
    body["message"] = e.what();
    std::cout << io::dump_json(body);
    return 1;
  } catch (const GradingNotFoundError& e) {
    json body;
    body["error"] = "numerical";
    body["message"] = e.what();
    std::cout << io::dump_json(body);
    return 2;
  } catch (const Error& e) {
    json body;
    body["error"] = "numerical";
    body["message"] = e.what();
    std::cout << io::dump_json(body);
    return 2;
  }
}
