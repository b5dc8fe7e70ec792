// Command-line front end: benchmark reconstructions, table sweeps, and
// solver self-checks (gradient, duality, convergence order).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <glinv/glinv.hpp>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace glinv;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;
constexpr int kExitLineSearch = 3;

struct RunConfig {
  ExperimentSpec spec;
  std::string out_dir = "glinv_out";
  std::string scale;  // "", "desk", "paper"
};

std::string canonical_example(const std::string& s) {
  if (s == "ex1" || s == "example1") return "ex1";
  if (s == "ex2" || s == "example2") return "ex2";
  if (s == "ex3" || s == "example3") return "ex3";
  if (s == "ex4" || s == "example4") return "ex4";
  throw std::invalid_argument("example: expected example1..example4 (or ex1..ex4), got '" + s +
                              "'");
}

ForcingRule parse_forcing(const std::string& s) {
  if (s == "left") return ForcingRule::left;
  if (s == "trapezoid") return ForcingRule::trapezoid;
  throw std::invalid_argument("forcing: expected 'left' or 'trapezoid', got '" + s + "'");
}

GradientMode parse_grad_mode(const std::string& s) {
  if (s == "exact") return GradientMode::exact;
  if (s == "paper") return GradientMode::paper;
  throw std::invalid_argument("grad-mode: expected 'exact' or 'paper', got '" + s + "'");
}

void apply_json_config(RunConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path.string() + "'");
  ordered_json j = ordered_json::parse(in);
  ExperimentSpec& s = cfg.spec;
  if (j.contains("example")) s.example_id = canonical_example(j["example"]);
  if (j.contains("lx")) s.Lx = j["lx"];
  if (j.contains("ly")) s.Ly = j["ly"];
  if (j.contains("t_final")) s.T = j["t_final"];
  if (j.contains("nx")) s.Nx = j["nx"];
  if (j.contains("ny")) s.Ny = j["ny"];
  if (j.contains("nt")) s.Nt = j["nt"];
  if (j.contains("a")) s.a = j["a"];
  if (j.contains("b")) s.b = j["b"];
  if (j.contains("p_re")) s.p = Complex(j["p_re"], s.p.imag());
  if (j.contains("p_im")) s.p = Complex(s.p.real(), j["p_im"]);
  if (j.contains("eps")) s.eps = j["eps"];
  if (j.contains("tau")) s.tau = j["tau"];
  if (j.contains("delta")) s.noise_delta = j["delta"];
  if (j.contains("seed")) s.seed = j["seed"];
  if (j.contains("g_const")) s.g_const = j["g_const"];
  if (j.contains("forcing")) s.forcing = parse_forcing(j["forcing"]);
  if (j.contains("grad_mode")) s.grad_mode = parse_grad_mode(j["grad_mode"]);
  if (j.contains("k_max")) s.k_max = j["k_max"];
  if (j.contains("alpha0")) s.alpha0 = j["alpha0"];
  if (j.contains("rho")) s.rho = j["rho"].get<double>();
  if (j.contains("fine_data_grid")) s.fine_data_grid = j["fine_data_grid"];
  if (j.contains("out")) cfg.out_dir = j["out"];
  if (j.contains("scale")) cfg.scale = j["scale"];
}

void validate_spec(const ExperimentSpec& s) {
  canonical_example(s.example_id);
  if (!(s.Lx > 0)) throw std::invalid_argument("lx must be positive");
  if (!(s.Ly > 0)) throw std::invalid_argument("ly must be positive");
  if (!(s.T > 0)) throw std::invalid_argument("t_final must be positive");
  if (s.Nx < 2) throw std::invalid_argument("nx must be >= 2");
  if (s.Ny < 2) throw std::invalid_argument("ny must be >= 2");
  if (s.Nt < 1) throw std::invalid_argument("nt must be >= 1");
  if (!(s.a > 0)) throw std::invalid_argument("a must be positive");
  if (s.eps < 0) throw std::invalid_argument("eps must be >= 0");
  if (!(s.tau > 0)) throw std::invalid_argument("tau must be positive");
  if (s.noise_delta < 0) throw std::invalid_argument("delta must be >= 0");
  if (s.k_max < 0) throw std::invalid_argument("k_max must be >= 0");
  if (!(s.alpha0 > 0)) throw std::invalid_argument("alpha0 must be positive");
  if (s.rho && !(*s.rho > 0)) throw std::invalid_argument("rho must be positive");
}

/// Scientific fields only: the hash must not change with the output
/// directory, so reruns into different directories stay byte-identical.
ordered_json spec_json(const ExperimentSpec& s) {
  ordered_json j;
  j["example"] = s.example_id;
  j["lx"] = s.Lx;
  j["ly"] = s.Ly;
  j["t_final"] = s.T;
  j["nx"] = s.Nx;
  j["ny"] = s.Ny;
  j["nt"] = s.Nt;
  j["a"] = s.a;
  j["b"] = s.b;
  j["p_re"] = s.p.real();
  j["p_im"] = s.p.imag();
  j["eps"] = s.eps;
  j["tau"] = s.tau;
  j["delta"] = s.noise_delta;
  j["seed"] = s.seed;
  j["g_const"] = s.g_const;
  j["forcing"] = (s.forcing == ForcingRule::left) ? "left" : "trapezoid";
  j["grad_mode"] = (s.grad_mode == GradientMode::exact) ? "exact" : "paper";
  j["k_max"] = s.k_max;
  j["alpha0"] = s.alpha0;
  if (s.rho)
    j["rho"] = *s.rho;
  else
    j["rho"] = nullptr;
  j["fine_data_grid"] = s.fine_data_grid;
  return j;
}

ArtifactStamp make_stamp(const ExperimentSpec& s) {
  ArtifactStamp stamp;
  stamp.config_hash = hex64(fnv1a64(spec_json(s).dump()));
  stamp.seed = s.seed;
  return stamp;
}

void write_config_snapshot(const fs::path& path, const RunConfig& cfg,
                           const ArtifactStamp& stamp) {
  ordered_json j;
  j["header"] = stamp.header_line().substr(2);  // same stamp, no comment marker
  ordered_json spec = spec_json(cfg.spec);
  for (auto& [key, value] : spec.items()) j[key] = value;
  j["out"] = cfg.out_dir;
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

void print_progress(const IterationRecord& rec) {
  std::cerr << "k=" << rec.k << " J=" << num_str(rec.J, "%.6e")
            << " misfit=" << num_str(rec.misfit, "%.6e")
            << " r=" << num_str(rec.grad_norm, "%.6e") << " alpha=" << num_str(rec.alpha, "%.3e")
            << " bt=" << rec.backtracks << "\n";
}

int cmd_run(RunConfig cfg, bool quiet) {
  validate_spec(cfg.spec);
  const ArtifactStamp stamp = make_stamp(cfg.spec);
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  write_config_snapshot(dir / "config.json", cfg, stamp);

  RunOutcome outcome;
  try {
    outcome = run_experiment(cfg.spec, quiet ? std::function<void(const IterationRecord&)>{}
                                             : print_progress);
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }

  write_history_csv(dir / "history.csv", outcome.report, stamp);
  write_metrics_csv(dir / "metrics.csv", outcome.metrics, outcome.report.stop_reason, stamp);
  write_field_csv(dir / "final_state.csv", outcome.grid, outcome.report.final_state, stamp);
  write_field_glf1(dir / "final_state.glf1", outcome.grid, outcome.report.final_state);
  if (outcome.report.final_control.mode == ControlMode::separable) {
    write_field_csv(dir / "q_rec.csv", outcome.grid, outcome.report.final_control.q, stamp);
    write_field_glf1(dir / "q_rec.glf1", outcome.grid, outcome.report.final_control.q);
    write_field_csv(dir / "q_true.csv", outcome.grid, outcome.truth.q, stamp);
  } else {
    const Field& f_last = outcome.report.final_control.levels.back();
    write_field_csv(dir / "f_rec_final.csv", outcome.grid, f_last, stamp);
    write_field_glf1(dir / "f_rec_final.glf1", outcome.grid, f_last);
  }

  std::cout << "example=" << cfg.spec.example_id << " iterations=" << outcome.metrics.iterations
            << " stop=" << to_string(outcome.report.stop_reason)
            << " misfit_sq_ratio=" << num_str(outcome.metrics.misfit_sq_ratio, "%.6e");
  if (outcome.metrics.q_err_sq_ratio)
    std::cout << " q_err_sq_ratio=" << num_str(*outcome.metrics.q_err_sq_ratio, "%.6e");
  if (outcome.metrics.f_err_sq_ratio)
    std::cout << " f_err_sq_ratio=" << num_str(*outcome.metrics.f_err_sq_ratio, "%.6e");
  std::cout << "\n";
  return outcome.report.stop_reason == StopReason::line_search_failure ? kExitLineSearch : 0;
}

int cmd_table(const std::string& table_id, const std::string& scale_str, std::uint64_t seed,
              const std::string& out_dir) {
  const TableId id = parse_table_id(table_id);
  Scale scale;
  if (scale_str == "desk")
    scale = Scale::desk;
  else if (scale_str == "paper")
    scale = Scale::paper;
  else
    throw std::invalid_argument("scale: expected 'desk' or 'paper', got '" + scale_str + "'");

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  std::vector<TableRow> rows;
  try {
    rows = run_table(id, scale, seed, [](const TableRow& row) {
      std::cerr << row.label << ": iterations=" << row.metrics.iterations
                << " misfit_sq_ratio=" << num_str(row.metrics.misfit_sq_ratio, "%.4e") << "\n";
    });
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }

  ExperimentSpec hash_spec = rows.front().spec;
  ArtifactStamp stamp = make_stamp(hash_spec);
  stamp.seed = seed;
  const std::string name = "table_" + table_id + ".csv";
  write_table_csv(dir / name, rows, stamp);
  std::cout << "wrote " << (dir / name).string() << " (" << rows.size() << " rows)\n";
  return 0;
}

/// Shared small benchmark instance for the gradient and duality checks.
struct CheckInstance {
  Grid2D grid;
  CnOperators ops;
  Field y0;
  Field data;
};

CheckInstance make_check_instance() {
  Grid2D grid = build_grid(1, 1, 1, 9, 9, 8);
  CnOperators ops = assemble_cn(grid, 36e-4, 15e-4, Complex(0.2, 0.1));
  Field y0 = sample_interior(grid, [](double x, double y) {
    return Complex(std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y), 0.0);
  });
  const auto src = make_source("ex1", grid);
  Field data = observe(forward(ops, y0, src.control.materialize(grid)));
  return {std::move(grid), std::move(ops), std::move(y0), std::move(data)};
}

int cmd_check_gradient(std::uint64_t seed) {
  CheckInstance inst = make_check_instance();
  const InverseProblem P =
      make_problem(inst.ops, inst.y0, inst.data, 1e-5, ForcingRule::left, GradientMode::exact);

  SpaceTimeField f(static_cast<std::size_t>(inst.grid.Nt));
  for (int n = 0; n < inst.grid.Nt; ++n)
    f[n] = complex_gaussian_field(inst.grid.m, seed + 100 + n);
  const Control c = Control::make_full(std::move(f));

  const GradientCalibration cal = calibrate_gradient(P, c, 20, 1e-6, seed);
  const double err = fd_check(P, c, 20, 1e-6, seed);
  std::cout << "gradient check on (9,9,8), 20 probes, step 1e-6\n";
  std::cout << "  candidate errors: plain=" << num_str(cal.err_plain, "%.3e")
            << " plain_dt=" << num_str(cal.err_plain_dt, "%.3e")
            << " corrected=" << num_str(cal.err_corrected, "%.3e") << " (best: " << cal.best
            << ")\n";
  std::cout << "  max relative error (exact mode): " << num_str(err, "%.3e") << "\n";
  const bool pass = err <= 1e-6;
  std::cout << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

int cmd_check_duality(std::uint64_t seed) {
  CheckInstance inst = make_check_instance();
  const Grid2D& g = inst.grid;
  SpaceTimeField f(static_cast<std::size_t>(g.Nt));
  for (int n = 0; n < g.Nt; ++n) f[n] = complex_gaussian_field(g.m, seed + 200 + n);
  const Field v = complex_gaussian_field(g.m, seed + 999);

  const auto traj = forward(inst.ops, zero_field(g), f);
  const Complex lhs = inner_c(g, v, traj.back());
  const auto phi = adjoint(inst.ops, inst.ops.fact_minus_h.solve(v));
  Complex rhs(0.0, 0.0);
  for (int n = 0; n < g.Nt; ++n) rhs += inner_c(g, phi[n + 1], f[n]) * g.dt;

  const double mismatch = std::abs(lhs - rhs) / std::abs(lhs);
  std::cout << "duality check on (9,9,8): |<v,y_T> - <<phi,f>>| / |<v,y_T>| = "
            << num_str(mismatch, "%.3e") << "\n";
  const bool pass = mismatch <= 1e-9;
  std::cout << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

void print_convergence(const ConvergenceResult& res, ForcingRule rule) {
  std::cout << "spatial sweep (trapezoid forcing, Nt=256):\n";
  for (std::size_t i = 0; i < res.spatial.resolutions.size(); ++i)
    std::cout << "  N=" << res.spatial.resolutions[i]
              << " err=" << num_str(res.spatial.errors[i], "%.6e") << "\n";
  std::cout << "  observed spatial order: " << num_str(res.spatial.observed_order, "%.3f")
            << "\n";
  std::cout << "temporal sweep (" << (rule == ForcingRule::left ? "left" : "trapezoid")
            << " forcing, N=48):\n";
  for (std::size_t i = 0; i < res.temporal.resolutions.size(); ++i)
    std::cout << "  Nt=" << res.temporal.resolutions[i]
              << " err=" << num_str(res.temporal.errors[i], "%.6e") << "\n";
  std::cout << "  observed temporal order: " << num_str(res.temporal.observed_order, "%.3f")
            << "\n";
}

int cmd_check_convergence(const std::string& rule_str) {
  const ForcingRule rule = parse_forcing(rule_str);
  const ConvergenceResult res = convergence_study(rule);
  print_convergence(res, rule);
  const bool spatial_ok = res.spatial.observed_order >= 1.8 && res.spatial.observed_order <= 2.2;
  const double lo = (rule == ForcingRule::left) ? 0.8 : 1.8;
  const double hi = (rule == ForcingRule::left) ? 1.3 : 2.2;
  const bool temporal_ok =
      res.temporal.observed_order >= lo && res.temporal.observed_order <= hi;
  std::cout << (spatial_ok && temporal_ok ? "PASS" : "FAIL") << "\n";
  return (spatial_ok && temporal_ok) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source reconstruction for the 2-D linear Ginzburg-Landau equation"};
  app.require_subcommand(1);

  // ---- run ----
  auto* run = app.add_subcommand("run", "reconstruct one benchmark example");
  std::string run_target = "example1";
  run->add_option("target", run_target, "example1..example4 or a JSON config file");
  std::vector<int> grid_opt;
  run->add_option("--grid", grid_opt, "NX,NY,NT")->delimiter(',')->expected(1, 3);
  double eps_opt = -1, tau_opt = -1, delta_opt = -1, alpha0_opt = -1, rho_opt = -1, g_opt = 0;
  std::int64_t seed_opt = -1;
  int kmax_opt = -1;
  std::string forcing_opt, grad_mode_opt, out_opt, scale_opt;
  bool quiet = false, fine_data = false;
  auto* eps_o = run->add_option("--eps", eps_opt, "Tikhonov weight");
  auto* tau_o = run->add_option("--tau", tau_opt, "gradient-norm stopping tolerance");
  auto* delta_o = run->add_option("--delta", delta_opt, "relative noise level");
  auto* seed_o = run->add_option("--seed", seed_opt, "noise RNG seed");
  auto* alpha0_o = run->add_option("--alpha0", alpha0_opt, "initial line-search step");
  auto* rho_o = run->add_option("--rho", rho_opt, "projection radius (||f||_{h,t} ball)");
  auto* g_o = run->add_option("--g-const", g_opt, "constant temporal modulation g");
  auto* kmax_o = run->add_option("--kmax", kmax_opt, "iteration cap");
  run->add_option("--forcing", forcing_opt, "left|trapezoid");
  run->add_option("--grad-mode", grad_mode_opt, "exact|paper");
  run->add_option("--out", out_opt, "output directory");
  run->add_option("--scale", scale_opt, "paper|desk grid preset");
  auto* fine_o = run->add_flag("--fine-data-grid", fine_data, "synthesize data on a 2x finer grid");
  run->add_flag("--quiet", quiet, "suppress per-iteration progress");

  // ---- table ----
  auto* table = app.add_subcommand("table", "run one benchmark table sweep");
  std::string table_id, table_scale = "desk", table_out = "glinv_out";
  std::uint64_t table_seed = 0;
  table->add_option("id", table_id, "T1|T2|T3|T4")->required();
  table->add_option("--scale", table_scale, "paper|desk");
  table->add_option("--seed", table_seed, "noise RNG seed");
  table->add_option("--out", table_out, "output directory");

  // ---- check ----
  auto* check = app.add_subcommand("check", "solver self-checks");
  std::string check_what, check_rule = "left";
  std::uint64_t check_seed = 7;
  check->add_option("what", check_what, "gradient|convergence|duality")->required();
  check->add_option("--rule", check_rule, "left|trapezoid (convergence check)");
  check->add_option("--seed", check_seed, "probe RNG seed");

  // ---- convergence ----
  auto* conv = app.add_subcommand("convergence", "manufactured-solution order study");
  std::string conv_rule = "left", conv_out;
  conv->add_option("--rule", conv_rule, "left|trapezoid");
  conv->add_option("--out", conv_out, "optional CSV output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) {
      RunConfig cfg;
      cfg.spec.Nx = cfg.spec.Ny = 100;
      cfg.spec.Nt = 70;
      if (run_target.size() > 5 && run_target.substr(run_target.size() - 5) == ".json")
        apply_json_config(cfg, run_target);
      else
        cfg.spec.example_id = canonical_example(run_target);
      if (!scale_opt.empty()) cfg.scale = scale_opt;
      if (cfg.scale == "desk") {
        cfg.spec.Nx = cfg.spec.Ny = 50;
        cfg.spec.Nt = 70;
        cfg.spec.k_max = 300;
      } else if (cfg.scale == "paper") {
        cfg.spec.Nx = cfg.spec.Ny = 100;
        cfg.spec.Nt = 70;
        cfg.spec.k_max = 10000;
      } else if (!cfg.scale.empty()) {
        throw std::invalid_argument("scale: expected 'desk' or 'paper', got '" + cfg.scale + "'");
      }
      if (!grid_opt.empty()) {
        if (grid_opt.size() != 3) throw std::invalid_argument("grid: expected NX,NY,NT");
        cfg.spec.Nx = grid_opt[0];
        cfg.spec.Ny = grid_opt[1];
        cfg.spec.Nt = grid_opt[2];
      }
      if (*eps_o) cfg.spec.eps = eps_opt;
      if (*tau_o) cfg.spec.tau = tau_opt;
      if (*delta_o) cfg.spec.noise_delta = delta_opt;
      if (*seed_o) cfg.spec.seed = static_cast<std::uint64_t>(seed_opt);
      if (*alpha0_o) cfg.spec.alpha0 = alpha0_opt;
      if (*rho_o) cfg.spec.rho = rho_opt;
      if (*g_o) cfg.spec.g_const = g_opt;
      if (*kmax_o) cfg.spec.k_max = kmax_opt;
      if (*fine_o) cfg.spec.fine_data_grid = true;
      if (!forcing_opt.empty()) cfg.spec.forcing = parse_forcing(forcing_opt);
      if (!grad_mode_opt.empty()) cfg.spec.grad_mode = parse_grad_mode(grad_mode_opt);
      if (!out_opt.empty()) cfg.out_dir = out_opt;
      return cmd_run(std::move(cfg), quiet);
    }
    if (table->parsed()) return cmd_table(table_id, table_scale, table_seed, table_out);
    if (check->parsed()) {
      if (check_what == "gradient") return cmd_check_gradient(check_seed);
      if (check_what == "duality") return cmd_check_duality(check_seed);
      if (check_what == "convergence") return cmd_check_convergence(check_rule);
      throw std::invalid_argument("check: expected gradient|convergence|duality, got '" +
                                  check_what + "'");
    }
    if (conv->parsed()) {
      const ForcingRule rule = parse_forcing(conv_rule);
      const ConvergenceResult res = convergence_study(rule);
      print_convergence(res, rule);
      if (!conv_out.empty()) {
        fs::create_directories(conv_out);
        ArtifactStamp stamp;
        std::ofstream out = open_out(fs::path(conv_out) / ("convergence_" + conv_rule + ".csv"));
        out << stamp.header_line() << "\n";
        out << "sweep,resolution,error\n";
        for (std::size_t i = 0; i < res.spatial.resolutions.size(); ++i)
          out << "spatial," << res.spatial.resolutions[i] << ','
              << num_full(res.spatial.errors[i]) << "\n";
        for (std::size_t i = 0; i < res.temporal.resolutions.size(); ++i)
          out << "temporal," << res.temporal.resolutions[i] << ','
              << num_full(res.temporal.errors[i]) << "\n";
      }
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
