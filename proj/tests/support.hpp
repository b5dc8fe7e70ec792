#pragma once

// Shared test utilities: dense oracles that stay independent of the library's
// sparse solve path, randomized-instance builders, and the property checks
// exercised by both the unit suite and the acceptance suite.

#include <glinv/glinv.hpp>

namespace testsupport {

using namespace glinv;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// Dense complex LU with partial pivoting (oracle; hand-rolled on purpose).
// ---------------------------------------------------------------------------

class DenseLu {
 public:
  explicit DenseLu(MatrixXcd A) : lu_(std::move(A)), perm_(lu_.rows()) {
    const int n = static_cast<int>(lu_.rows());
    for (int i = 0; i < n; ++i) perm_[i] = i;
    for (int col = 0; col < n; ++col) {
      int pivot = col;
      double best = std::abs(lu_(col, col));
      for (int r = col + 1; r < n; ++r) {
        const double mag = std::abs(lu_(r, col));
        if (mag > best) {
          best = mag;
          pivot = r;
        }
      }
      if (best == 0.0) throw std::runtime_error("DenseLu: singular matrix");
      if (pivot != col) {
        lu_.row(pivot).swap(lu_.row(col));
        std::swap(perm_[pivot], perm_[col]);
      }
      for (int r = col + 1; r < n; ++r) {
        const Complex factor = lu_(r, col) / lu_(col, col);
        lu_(r, col) = factor;
        for (int c = col + 1; c < n; ++c) lu_(r, c) -= factor * lu_(col, c);
      }
    }
  }

  VectorXcd solve(const VectorXcd& b) const {
    const int n = static_cast<int>(lu_.rows());
    VectorXcd x(n);
    for (int i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < i; ++c) x[i] -= lu_(i, c) * x[c];
    for (int i = n - 1; i >= 0; --i) {
      for (int c = i + 1; c < n; ++c) x[i] -= lu_(i, c) * x[c];
      x[i] /= lu_(i, i);
    }
    return x;
  }

 private:
  MatrixXcd lu_;
  std::vector<int> perm_;
};

/// Dense trajectory oracle: repeats the CN recursion with dense algebra.
inline std::vector<Field> dense_forward(const CnOperators& ops, const Field& y0,
                                        const SpaceTimeField& f, ForcingRule rule) {
  const Grid2D& g = ops.grid;
  const MatrixXcd Mminus = MatrixXcd(ops.Mminus);
  const MatrixXcd Mplus = MatrixXcd(ops.Mplus);
  const DenseLu lu(Mminus);
  std::vector<Field> y(static_cast<std::size_t>(g.Nt) + 1);
  y[0] = y0;
  for (int n = 0; n < g.Nt; ++n) {
    Field rhs = Mplus * y[n];
    if (rule == ForcingRule::left) {
      rhs += g.dt * f[n];
    } else {
      const Field& fnext = (n + 1 < g.Nt) ? f[n + 1] : f[g.Nt - 1];
      rhs += (0.5 * g.dt) * (f[n] + fnext);
    }
    y[n + 1] = lu.solve(rhs);
  }
  return y;
}

// ---------------------------------------------------------------------------
// Extended-precision re-summation oracles (reversed index order).
// ---------------------------------------------------------------------------

inline double inner_h_oracle(const Grid2D& g, const Field& x, const Field& y) {
  long double acc = 0.0L;
  for (int k = g.m - 1; k >= 0; --k) {
    acc += static_cast<long double>(x[k].real()) * y[k].real();
    acc += static_cast<long double>(x[k].imag()) * y[k].imag();
  }
  return static_cast<double>(acc * g.dx * g.dy);
}

inline double inner_ht_oracle(const Grid2D& g, const SpaceTimeField& X, const SpaceTimeField& Y) {
  long double acc = 0.0L;
  for (int n = g.Nt - 1; n >= 0; --n)
    acc += static_cast<long double>(inner_h_oracle(g, X[n], Y[n]));
  return static_cast<double>(acc * g.dt);
}

// ---------------------------------------------------------------------------
// Instance builders.
// ---------------------------------------------------------------------------

inline Field default_initial_condition(const Grid2D& g) {
  using std::numbers::pi;
  return sample_interior(
      g, [](double x, double y) { return Complex(std::sin(pi * x) * std::sin(pi * y), 0.0); });
}

/// Small benchmark-flavoured inverse problem: default coefficients, smooth
/// initial condition, data synthesized from the example-1 source.
struct TestInstance {
  Grid2D grid;
  CnOperators ops;
  Field y0;
  Field data;
  Control truth;

  TestInstance(int Nx, int Ny, int Nt, double g_const = 1.0)
      : grid(build_grid(1.0, 1.0, 1.0, Nx, Ny, Nt)),
        ops(assemble_cn(grid, 36e-4, 15e-4, Complex(0.2, 0.1))),
        y0(default_initial_condition(grid)),
        truth(make_source("ex1", grid, g_const).control) {
    data = observe(forward(ops, y0, truth.materialize(grid)));
  }

  InverseProblem problem(double eps, ForcingRule rule = ForcingRule::left,
                         GradientMode mode = GradientMode::exact) const {
    return make_problem(ops, y0, data, eps, rule, mode);
  }
};

inline Control random_full_control(const Grid2D& g, std::uint64_t seed, double amplitude = 1.0) {
  SpaceTimeField f(static_cast<std::size_t>(g.Nt));
  for (int n = 0; n < g.Nt; ++n)
    f[n] = amplitude * complex_gaussian_field(g.m, seed * 1315423911ull + n);
  return Control::make_full(std::move(f));
}

inline Control random_separable_control(const Grid2D& g, std::uint64_t seed,
                                        const std::vector<Complex>& gmod,
                                        double amplitude = 1.0) {
  return Control::make_separable(Field(amplitude * complex_gaussian_field(g.m, seed)), gmod);
}

// ---------------------------------------------------------------------------
// Property checks (return the worst violation; callers assert thresholds).
// ---------------------------------------------------------------------------

/// J((f1+f2)/2) - (J(f1)+J(f2))/2, maximized over random pairs; convexity
/// demands it stay below the roundoff allowance.
inline double worst_convexity_gap(const InverseProblem& P, int trials, std::uint64_t seed) {
  double worst = -1e300;
  for (int t = 0; t < trials; ++t) {
    const Control f1 = random_full_control(P.grid, seed + 2 * t);
    const Control f2 = random_full_control(P.grid, seed + 2 * t + 1);
    const Control mid = control_add_scaled(control_scaled(f1, 0.5), 0.5, f2);
    const double J1 = objective(P, f1).value;
    const double J2 = objective(P, f2).value;
    const double Jm = objective(P, mid).value;
    const double slack = 1e-12 * (1.0 + std::abs(J1) + std::abs(J2));
    worst = std::max(worst, Jm - 0.5 * (J1 + J2) - slack);
  }
  return worst;
}

/// <<grad J(f1) - grad J(f2), f1 - f2>>, minimized over random pairs
/// (monotone operator: should never drop below -1e-10).
inline double worst_monotonicity(const InverseProblem& P, int trials, std::uint64_t seed) {
  double worst = 1e300;
  for (int t = 0; t < trials; ++t) {
    const Control f1 = random_full_control(P.grid, seed + 2 * t);
    const Control f2 = random_full_control(P.grid, seed + 2 * t + 1);
    const Control g1 = gradient(P, f1, objective(P, f1).trajectory);
    const Control g2 = gradient(P, f2, objective(P, f2).trajectory);
    const Control dg = control_add_scaled(g1, -1.0, g2);
    const Control df = control_add_scaled(f1, -1.0, f2);
    worst = std::min(worst, control_inner(P.grid, dg, df));
  }
  return worst;
}

/// Fits the Lipschitz ratio ||grad J(f+df) - grad J(f)|| / ||df|| on one set
/// of random pairs.
inline double fit_lipschitz_constant(const InverseProblem& P, int trials, std::uint64_t seed) {
  double M = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Control f = random_full_control(P.grid, seed + 2 * t);
    const Control df = random_full_control(P.grid, seed + 2 * t + 1, 0.3);
    const Control fp = control_add_scaled(f, 1.0, df);
    const Control g1 = gradient(P, f, objective(P, f).trajectory);
    const Control g2 = gradient(P, fp, objective(P, fp).trajectory);
    const double num = control_norm(P.grid, control_add_scaled(g2, -1.0, g1));
    M = std::max(M, num / control_norm(P.grid, df));
  }
  return M;
}

/// Worst deviation of grad J_eps - grad J_0 from eps*f, relative to the level
/// scale (exact up to one rounding of the final addition).
inline double worst_eps_shift(const TestInstance& inst, double eps, int trials,
                              std::uint64_t seed) {
  const InverseProblem P0 = inst.problem(0.0);
  const InverseProblem Pe = inst.problem(eps);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Control f = random_full_control(inst.grid, seed + t);
    const auto traj = objective(P0, f).trajectory;
    const SpaceTimeField g0 = gradient_full(P0, f, traj);
    const SpaceTimeField ge = gradient_full(Pe, f, traj);
    for (int n = 0; n < inst.grid.Nt; ++n) {
      for (int k = 0; k < inst.grid.m; ++k) {
        const Complex diff = ge[n][k] - g0[n][k] - eps * f.levels[n][k];
        const double scale = std::abs(g0[n][k]) + std::abs(eps * f.levels[n][k]) + 1e-300;
        worst = std::max(worst, std::abs(diff) / scale);
      }
    }
  }
  return worst;
}

/// Level-wise relative defect of forward(y0, a f1 + b f2) - forward(y0, 0)
/// against the superposition of the homogeneous-start responses.
inline double worst_affine_defect(const CnOperators& ops, const Field& y0, int trials,
                                  std::uint64_t seed) {
  const Grid2D& g = ops.grid;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Control c1 = random_full_control(g, seed + 3 * t);
    const Control c2 = random_full_control(g, seed + 3 * t + 1);
    const double alpha = 0.7, beta = -1.3;
    SpaceTimeField combo(static_cast<std::size_t>(g.Nt));
    for (int n = 0; n < g.Nt; ++n)
      combo[n] = alpha * c1.levels[n] + beta * c2.levels[n];
    const auto y_combo = forward(ops, y0, combo);
    const auto y_hom = forward(ops, y0, zero_levels(g));
    const auto y1 = forward(ops, zero_field(g), c1.levels);
    const auto y2 = forward(ops, zero_field(g), c2.levels);
    for (int n = 1; n <= g.Nt; ++n) {
      const Field lhs = y_combo[n] - y_hom[n];
      const Field rhs = alpha * y1[n] + beta * y2[n];
      const double denom = std::max(norm_h(g, rhs), 1e-300);
      worst = std::max(worst, norm_h(g, Field(lhs - rhs)) / denom);
    }
  }
  return worst;
}

/// Worst |achieved relative perturbation - delta| / delta over random
/// (delta, seed) pairs.
inline double worst_noise_defect(const Grid2D& g, const Field& u_T, int trials,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pick_delta(1e-6, 0.5);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double delta = pick_delta(rng);
    const Field noisy = add_noise(g, u_T, delta, rng());
    const double achieved = norm_h(g, Field(noisy - u_T)) / norm_h(g, u_T);
    worst = std::max(worst, std::abs(achieved - delta) / delta);
  }
  return worst;
}

/// Worst ||P(P(c))-P(c)|| / rho over random controls (projection idempotence).
inline double worst_projection_defect(const Grid2D& g, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pick_rho(0.1, 3.0);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double rho = pick_rho(rng);
    const Control c = random_full_control(g, rng(), 2.0);
    const Control p1 = project_ball(g, c, rho);
    const Control p2 = project_ball(g, p1, rho);
    const Control diff = control_add_scaled(p2, -1.0, p1);
    worst = std::max(worst, control_norm_ht(g, diff) / rho);
  }
  return worst;
}

}  // namespace testsupport
