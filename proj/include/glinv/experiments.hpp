#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>

#include "glinv/ncg.hpp"

namespace glinv {

/// Shortest round-trippable decimal form of a double ("%g"-style).
inline std::string num_str(double v, const char* fmt = "%g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

/// Seeded standard-normal stream: raw mt19937_64 bits are mapped to doubles
/// in (0,1] and transformed by Box-Muller. The generator and transform are
/// fixed so a seed reproduces the same stream on any platform with the same
/// libm roundings.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform_open() {  // (0,1]: 53-bit mantissa, never zero
    return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
  }
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Field with independent standard-normal real and imaginary parts per
/// component (circularly symmetric complex Gaussian up to scaling).
inline Field complex_gaussian_field(int m, std::uint64_t seed) {
  NormalStream stream(seed);
  Field xi(m);
  for (int k = 0; k < m; ++k) {
    const double re = stream.next();
    const double im = stream.next();
    xi[k] = Complex(re, im);
  }
  return xi;
}

/// Noisy measurement u_T + delta * (||u_T||_h / ||xi||_h) * xi, so the
/// relative perturbation ||u_T^d - u_T||_h / ||u_T||_h equals delta by
/// construction. delta = 0 returns the data unchanged bitwise.
inline Field add_noise(const Grid2D& grid, const Field& u_T, double delta, std::uint64_t seed) {
  if (delta < 0.0) throw std::invalid_argument("add_noise: delta must be >= 0");
  if (delta == 0.0) return u_T;
  const double data_norm = norm_h(grid, u_T);
  if (!(data_norm > 0.0))
    throw std::invalid_argument("add_noise: cannot scale noise relative to zero data");
  const Field xi = complex_gaussian_field(grid.m, seed);
  return u_T + (delta * data_norm / norm_h(grid, xi)) * xi;
}

struct SourceDescription {
  Control control;
  std::string description;
};

/// Ground-truth sources for the four benchmark examples. ex1-ex3 are
/// separable q(x,y) * g(t) with the prescribed modulation g (constant by
/// default); ex4 is a genuinely space-time forcing sampled at the left time
/// endpoints.
inline SourceDescription make_source(const std::string& example_id, const Grid2D& grid,
                                     double g_const = 1.0) {
  using std::numbers::pi;
  const double sigma = 0.12;
  const std::vector<Complex> g(static_cast<std::size_t>(grid.Nt), Complex(g_const, 0.0));

  if (example_id == "ex1") {
    Field q = sample_interior(grid, [&](double x, double y) {
      return Complex(std::sin(2.0 * pi * x) * std::sin(2.0 * pi * y), 0.0);
    });
    return {Control::make_separable(std::move(q), g), "smooth real source sin(2 pi x) sin(2 pi y)"};
  }
  if (example_id == "ex2") {
    Field q = sample_interior(grid, [&](double x, double y) {
      const double r2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5);
      const double env = std::exp(-r2 / (2.0 * sigma * sigma));
      return Complex(0.0, env * std::sin(pi * x) * std::sin(pi * y));
    });
    return {Control::make_separable(std::move(q), g), "imaginary Gaussian-localized source"};
  }
  if (example_id == "ex3") {
    Field q = sample_interior(grid, [&](double x, double y) {
      return Complex(std::sin(2.0 * pi * x) * std::sin(2.0 * pi * y),
                     0.7 * std::sin(3.0 * pi * x) * std::sin(2.0 * pi * y));
    });
    return {Control::make_separable(std::move(q), g), "complex source with mixed frequencies"};
  }
  if (example_id == "ex4") {
    SpaceTimeField f(static_cast<std::size_t>(grid.Nt));
    for (int n = 0; n < grid.Nt; ++n) {
      const double t = grid.t(n);
      f[n] = sample_interior(grid, [&](double x, double y) {
        const double r2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5);
        const double env = std::exp(-r2 * t / (2.0 * sigma * sigma));
        return Complex(0.0, env * std::sin(pi * x) * std::sin(pi * y));
      });
    }
    return {Control::make_full(std::move(f)), "time-decaying imaginary space-time forcing"};
  }
  throw std::invalid_argument("make_source: unknown example id '" + example_id + "'");
}

/// One benchmark configuration. Defaults are the common setup of the four
/// examples: unit square and horizon, (a,b) = (36e-4, 15e-4), p = 0.2+0.1i,
/// grid (100,100,70), y0 = sin(pi x) sin(pi y).
struct ExperimentSpec {
  std::string example_id = "ex1";
  double Lx = 1.0, Ly = 1.0, T = 1.0;
  int Nx = 100, Ny = 100, Nt = 70;
  double a = 36e-4, b = 15e-4;
  Complex p{0.2, 0.1};
  double eps = 1e-5;
  double tau = 1e-5;
  double noise_delta = 0.0;
  std::uint64_t seed = 0;
  double g_const = 1.0;
  ForcingRule forcing = ForcingRule::left;
  GradientMode grad_mode = GradientMode::exact;
  int k_max = 500;
  double alpha0 = 1.0;
  std::optional<double> rho;
  bool fine_data_grid = false;  // synthesize data on a 2x finer grid

  Grid2D grid() const { return build_grid(Lx, Ly, T, Nx, Ny, Nt); }
  Field initial_condition(const Grid2D& g) const {
    using std::numbers::pi;
    return sample_interior(g, [](double x, double y) {
      return Complex(std::sin(pi * x) * std::sin(pi * y), 0.0);
    });
  }
  NcgConfig ncg() const {
    NcgConfig cfg;
    cfg.tau = tau;
    cfg.k_max = k_max;
    cfg.alpha0 = alpha0;
    cfg.rho = rho;
    return cfg;
  }
};

struct SyntheticData {
  Field u_T;      // noise-free terminal state of the true source
  Control truth;  // true source on the reconstruction grid
};

/// Forward-simulates the true source and returns the terminal state. By
/// default data are generated on the reconstruction grid itself; with
/// fine_data_grid the simulation runs on a 2x finer grid (space and time)
/// and the final state is restricted to the coincident coarse nodes.
inline SyntheticData synthesize_data(const ExperimentSpec& spec) {
  const Grid2D grid = spec.grid();
  SyntheticData out;
  out.truth = make_source(spec.example_id, grid, spec.g_const).control;
  if (!spec.fine_data_grid) {
    const CnOperators ops = assemble_cn(grid, spec.a, spec.b, spec.p);
    out.u_T = observe(forward(ops, spec.initial_condition(grid), out.truth.materialize(grid),
                              spec.forcing));
    return out;
  }
  const Grid2D fine = build_grid(spec.Lx, spec.Ly, spec.T, 2 * spec.Nx, 2 * spec.Ny, 2 * spec.Nt);
  const CnOperators fine_ops = assemble_cn(fine, spec.a, spec.b, spec.p);
  const Control fine_truth = make_source(spec.example_id, fine, spec.g_const).control;
  const Field fine_final = observe(
      forward(fine_ops, spec.initial_condition(fine), fine_truth.materialize(fine), spec.forcing));
  Field coarse(grid.m);
  for (int j = 1; j < grid.Ny; ++j)
    for (int i = 1; i < grid.Nx; ++i) coarse[grid.index(i, j)] = fine_final[fine.index(2 * i, 2 * j)];
  out.u_T = std::move(coarse);
  return out;
}

/// Squared relative errors in the conventions of the benchmark tables.
struct Metrics {
  double misfit_sq_ratio = 0.0;                // ||y^{Nt}-data||_h^2 / ||data||_h^2
  std::optional<double> q_err_sq_ratio;        // separable truth only
  std::optional<double> f_err_sq_ratio;        // full-mode truth only
  int iterations = 0;
};

inline Metrics compute_metrics(const Grid2D& grid, const RunReport& report, const Control& truth,
                               const Field& data) {
  Metrics m;
  m.iterations = report.iterations;
  const double data_norm = norm_h(grid, data);
  if (!(data_norm > 0.0)) throw std::invalid_argument("compute_metrics: zero-norm data");
  const double misfit = norm_h(grid, Field(report.final_state - data));
  m.misfit_sq_ratio = (misfit * misfit) / (data_norm * data_norm);

  if (truth.mode == ControlMode::separable) {
    if (report.final_control.mode != ControlMode::separable)
      throw std::invalid_argument("compute_metrics: control mode mismatch");
    const double truth_norm = norm_h(grid, truth.q);
    if (!(truth_norm > 0.0)) throw std::invalid_argument("compute_metrics: zero-norm truth");
    const double err = norm_h(grid, Field(report.final_control.q - truth.q));
    m.q_err_sq_ratio = (err * err) / (truth_norm * truth_norm);
  } else {
    if (report.final_control.mode != ControlMode::full)
      throw std::invalid_argument("compute_metrics: control mode mismatch");
    const double truth_norm = norm_ht(grid, truth.levels);
    if (!(truth_norm > 0.0)) throw std::invalid_argument("compute_metrics: zero-norm truth");
    SpaceTimeField diff = report.final_control.levels;
    for (int n = 0; n < grid.Nt; ++n) diff[n] -= truth.levels[n];
    const double err = norm_ht(grid, diff);
    m.f_err_sq_ratio = (err * err) / (truth_norm * truth_norm);
  }
  return m;
}

struct RunOutcome {
  Grid2D grid;
  RunReport report;
  Metrics metrics;
  Control truth;
  Field data;      // the tracking target (noisy when delta > 0)
  Field u_T;       // noise-free terminal state of the truth
};

/// End-to-end benchmark run: synthesize data, add noise, reconstruct from a
/// zero initial control, and evaluate the error metrics.
inline RunOutcome run_experiment(const ExperimentSpec& spec,
                                 const std::function<void(const IterationRecord&)>& on_iteration = {}) {
  RunOutcome out;
  out.grid = spec.grid();
  const CnOperators ops = assemble_cn(out.grid, spec.a, spec.b, spec.p);
  SyntheticData synth = synthesize_data(spec);
  out.truth = std::move(synth.truth);
  out.u_T = std::move(synth.u_T);
  out.data = add_noise(out.grid, out.u_T, spec.noise_delta, spec.seed);

  const InverseProblem problem = make_problem(ops, spec.initial_condition(out.grid), out.data,
                                              spec.eps, spec.forcing, spec.grad_mode);
  Control c0 = (out.truth.mode == ControlMode::separable)
                   ? Control::zeros_separable(out.grid, out.truth.g)
                   : Control::zeros_full(out.grid);
  out.report = ncg_minimize(problem, std::move(c0), spec.ncg(), on_iteration);
  out.metrics = compute_metrics(out.grid, out.report, out.truth, out.data);
  return out;
}

enum class TableId { T1, T2, T3, T4 };
enum class Scale { paper, desk };

inline TableId parse_table_id(const std::string& s) {
  if (s == "T1" || s == "t1") return TableId::T1;
  if (s == "T2" || s == "t2") return TableId::T2;
  if (s == "T3" || s == "t3") return TableId::T3;
  if (s == "T4" || s == "t4") return TableId::T4;
  throw std::invalid_argument("unknown table id '" + s + "' (expected T1..T4)");
}

struct TableRow {
  std::string label;  // the varied quantity, e.g. "tau=1e-05"
  ExperimentSpec spec;
  Metrics metrics;
  StopReason stop = StopReason::k_max;
  double wall_s = 0.0;
};

/// Benchmark sweeps.
///  T1: stopping tolerance tau in {1e-3..1e-6}, example 1, eps = 1e-5
///  T2: grid triples, example 1, eps = tau = 1e-5
///  T3: regularization eps in {1e-3..1e-6}, example 1, tau = 1e-5
///  T4: noise level delta in {0, 1e-3, 5e-3}, example 3, eps = tau = 1e-5
/// Desk scale runs on (50,50,70) with capped iterations (300 noise-free,
/// 1500 under noise) and keeps only the two affordable grids of T2.
inline std::vector<TableRow> run_table(TableId id, Scale scale, std::uint64_t seed = 0,
                                       const std::function<void(const TableRow&)>& on_row = {}) {
  ExperimentSpec base;
  base.seed = seed;
  if (scale == Scale::desk) {
    base.Nx = base.Ny = 50;
    base.Nt = 70;
    base.k_max = 300;
  } else {
    base.k_max = 10000;
  }

  std::vector<TableRow> rows;
  auto run_row = [&](const std::string& label, const ExperimentSpec& spec) {
    TableRow row;
    row.label = label;
    row.spec = spec;
    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome outcome = run_experiment(spec);
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.metrics = outcome.metrics;
    row.stop = outcome.report.stop_reason;
    rows.push_back(row);
    if (on_row) on_row(rows.back());
  };

  switch (id) {
    case TableId::T1:
      for (double tau : {1e-3, 1e-4, 1e-5, 1e-6}) {
        ExperimentSpec spec = base;
        spec.example_id = "ex1";
        spec.eps = 1e-5;
        spec.tau = tau;
        run_row("tau=" + num_str(tau), spec);
      }
      break;
    case TableId::T2: {
      std::vector<std::array<int, 3>> grids = {{35, 35, 70}, {50, 50, 70}};
      if (scale == Scale::paper) {
        grids.push_back({100, 100, 70});
        grids.push_back({100, 100, 150});
      }
      for (const auto& gr : grids) {
        ExperimentSpec spec = base;
        spec.example_id = "ex1";
        spec.eps = 1e-5;
        spec.tau = 1e-5;
        spec.Nx = gr[0];
        spec.Ny = gr[1];
        spec.Nt = gr[2];
        run_row("grid=" + std::to_string(gr[0]) + "x" + std::to_string(gr[1]) + "x" +
                    std::to_string(gr[2]),
                spec);
      }
      break;
    }
    case TableId::T3:
      for (double eps : {1e-3, 1e-4, 1e-5, 1e-6}) {
        ExperimentSpec spec = base;
        spec.example_id = "ex1";
        spec.eps = eps;
        spec.tau = 1e-5;
        run_row("eps=" + num_str(eps), spec);
      }
      break;
    case TableId::T4:
      for (double delta : {0.0, 1e-3, 5e-3}) {
        ExperimentSpec spec = base;
        spec.example_id = "ex3";
        spec.eps = 1e-5;
        spec.tau = 1e-5;
        spec.noise_delta = delta;
        if (delta > 0.0) spec.k_max = (scale == Scale::desk) ? 1500 : 10000;
        run_row("delta=" + num_str(delta), spec);
      }
      break;
  }
  return rows;
}

/// Closed-form benchmark solution y*(x,y,t) = exp(-t) sin(pi x) sin(pi y)
/// and the forcing that makes it solve the model equation exactly.
struct ManufacturedSolution {
  double a, b;
  Complex p;

  Complex coefficient() const {
    using std::numbers::pi;
    return Complex(-1.0, 0.0) + 2.0 * pi * pi * Complex(a, b) + p;
  }
  Field state(const Grid2D& g, double t) const {
    using std::numbers::pi;
    const double decay = std::exp(-t);
    return sample_interior(g, [&](double x, double y) {
      return Complex(decay * std::sin(pi * x) * std::sin(pi * y), 0.0);
    });
  }
  SpaceTimeField forcing(const Grid2D& g) const {
    const Complex c = coefficient();
    SpaceTimeField f(static_cast<std::size_t>(g.Nt));
    for (int n = 0; n < g.Nt; ++n) f[n] = c * state(g, g.t(n));
    return f;
  }
  /// Discrete L2 error of the computed final state.
  double final_error(const Grid2D& g, ForcingRule rule) const {
    const CnOperators ops = assemble_cn(g, a, b, p);
    const auto traj = forward(ops, state(g, 0.0), forcing(g), rule);
    return norm_h(g, Field(traj.back() - state(g, g.T)));
  }
};

struct OrderStudy {
  std::vector<int> resolutions;
  std::vector<double> errors;
  double observed_order = 0.0;  // mean of log2 error ratios across refinements
};

struct ConvergenceResult {
  OrderStudy spatial;
  OrderStudy temporal;
};

/// Manufactured-solution convergence study with the default model
/// coefficients. The temporal sweep uses the requested forcing rule; the
/// spatial sweep always uses trapezoidal forcing so the temporal error stays
/// negligible at the fixed Nt.
inline ConvergenceResult convergence_study(ForcingRule rule) {
  ManufacturedSolution mms{36e-4, 15e-4, Complex(0.2, 0.1)};
  ConvergenceResult res;

  res.spatial.resolutions = {8, 16, 32};
  for (int N : res.spatial.resolutions) {
    const Grid2D g = build_grid(1.0, 1.0, 1.0, N, N, 256);
    res.spatial.errors.push_back(mms.final_error(g, ForcingRule::trapezoid));
  }

  res.temporal.resolutions = {4, 8, 16, 32};
  for (int Nt : res.temporal.resolutions) {
    const Grid2D g = build_grid(1.0, 1.0, 1.0, 48, 48, Nt);
    res.temporal.errors.push_back(mms.final_error(g, rule));
  }

  auto fit_order = [](OrderStudy& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < s.errors.size(); ++i)
      acc += std::log2(s.errors[i] / s.errors[i + 1]);
    s.observed_order = acc / static_cast<double>(s.errors.size() - 1);
  };
  fit_order(res.spatial);
  fit_order(res.temporal);
  return res;
}

}  // namespace glinv
