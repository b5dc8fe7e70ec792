#pragma once

#include <cstdint>
#include <random>

#include "glinv/pde.hpp"

namespace glinv {

/// The unknown source is either a full space-time array {f^n} (one field per
/// control level) or a separable product f^n = q * g^n with the temporal
/// modulation g known, prescribed, and never optimized.
enum class ControlMode { full, separable };

/// Gradient assembly variant.
/// exact: adjoint of the discrete forward map; the terminal residual gets one
///        extra Mminus^{-*} solve before the time-reversed sweep, which makes
///        the gradient agree with finite differences to roundoff.
/// paper: compatibility mode without that terminal solve (gradient levels are
///        phi^{n+1} + eps f^n with phi^{Nt} set to the raw residual).
enum class GradientMode { exact, paper };

struct Control {
  ControlMode mode = ControlMode::full;
  SpaceTimeField levels;    // full mode: Nt fields
  Field q;                  // separable mode: spatial factor
  std::vector<Complex> g;   // separable mode: Nt prescribed samples

  static Control make_full(SpaceTimeField f) {
    Control c;
    c.mode = ControlMode::full;
    c.levels = std::move(f);
    return c;
  }
  static Control make_separable(Field q, std::vector<Complex> g) {
    Control c;
    c.mode = ControlMode::separable;
    c.q = std::move(q);
    c.g = std::move(g);
    return c;
  }
  static Control zeros_full(const Grid2D& grid) { return make_full(zero_levels(grid)); }
  static Control zeros_separable(const Grid2D& grid, std::vector<Complex> g) {
    return make_separable(zero_field(grid), std::move(g));
  }

  /// Materializes the Nt forcing levels regardless of mode.
  SpaceTimeField materialize(const Grid2D& grid) const {
    if (mode == ControlMode::full) {
      detail::require_levels(grid, levels, "Control::materialize");
      return levels;
    }
    detail::require_length(grid, q, "Control::materialize");
    if (static_cast<int>(g.size()) != grid.Nt)
      throw std::invalid_argument("Control::materialize: g must have Nt samples");
    SpaceTimeField f(static_cast<std::size_t>(grid.Nt));
    for (int n = 0; n < grid.Nt; ++n) f[n] = g[n] * q;
    return f;
  }
};

namespace detail {
inline void require_same_shape(const Control& x, const Control& y, const char* where) {
  if (x.mode != y.mode) throw std::invalid_argument(std::string(where) + ": control mode mismatch");
  if (x.mode == ControlMode::full) {
    if (x.levels.size() != y.levels.size())
      throw std::invalid_argument(std::string(where) + ": level count mismatch");
  } else if (x.q.size() != y.q.size()) {
    throw std::invalid_argument(std::string(where) + ": q length mismatch");
  }
}
/// Rectangle-rule weight sum_n |g^n|^2 dt of the temporal modulation.
inline double g_weight(const Grid2D& grid, const std::vector<Complex>& g) {
  double s = 0.0;
  for (const Complex& v : g) s += std::norm(v);
  return s * grid.dt;
}
}  // namespace detail

/// Inner product on the control space. Full mode uses <<.,.>>_{h,t};
/// separable mode optimizes over q directly and uses <.,.>_h on q.
inline double control_inner(const Grid2D& grid, const Control& x, const Control& y) {
  detail::require_same_shape(x, y, "control_inner");
  if (x.mode == ControlMode::full) return inner_ht(grid, x.levels, y.levels);
  return inner_h(grid, x.q, y.q);
}

inline double control_norm(const Grid2D& grid, const Control& x) {
  if (x.mode == ControlMode::full) return norm_ht(grid, x.levels);
  return norm_h(grid, x.q);
}

/// Space-time norm ||f||_{h,t} of the materialized control. For separable
/// controls this is ||q||_h * sqrt(sum_n |g^n|^2 dt), evaluated without
/// materializing the levels. Used by the regularization term and by the
/// projection ball.
inline double control_norm_ht(const Grid2D& grid, const Control& x) {
  if (x.mode == ControlMode::full) return norm_ht(grid, x.levels);
  return norm_h(grid, x.q) * std::sqrt(detail::g_weight(grid, x.g));
}

/// x + alpha*d, preserving mode (separable controls share the prescribed g).
inline Control control_add_scaled(const Control& x, double alpha, const Control& d) {
  detail::require_same_shape(x, d, "control_add_scaled");
  Control out = x;
  if (x.mode == ControlMode::full) {
    for (std::size_t n = 0; n < out.levels.size(); ++n) out.levels[n] += alpha * d.levels[n];
  } else {
    out.q += alpha * d.q;
  }
  return out;
}

inline Control control_scaled(const Control& x, double alpha) {
  Control out = x;
  if (x.mode == ControlMode::full) {
    for (Field& level : out.levels) level *= alpha;
  } else {
    out.q *= alpha;
  }
  return out;
}

/// Terminal-tracking inverse problem: minimize over the control
///   J(f) = 1/2 ||y^{Nt}(f) - data||_h^2 + (eps/2) ||f||_{h,t}^2.
/// Holds non-owning references to the grid's assembled operators; callers
/// keep `ops` alive for the lifetime of the problem.
struct InverseProblem {
  Grid2D grid;
  const CnOperators& ops;
  Field y0;
  Field data;
  double eps = 0.0;
  ForcingRule forcing = ForcingRule::left;
  GradientMode grad_mode = GradientMode::exact;
};

inline InverseProblem make_problem(const CnOperators& ops, Field y0, Field data, double eps,
                                   ForcingRule forcing = ForcingRule::left,
                                   GradientMode grad_mode = GradientMode::exact) {
  if (eps < 0.0) throw std::invalid_argument("make_problem: eps must be >= 0");
  detail::require_length(ops.grid, y0, "make_problem");
  detail::require_length(ops.grid, data, "make_problem");
  return InverseProblem{ops.grid, ops, std::move(y0), std::move(data), eps, forcing, grad_mode};
}

namespace detail {
inline void require_finite_control(const Grid2D& grid, const Control& c) {
  if (c.mode == ControlMode::separable) {
    if (!c.q.allFinite())
      for (int k = 0; k < c.q.size(); ++k)
        if (!std::isfinite(c.q[k].real()) || !std::isfinite(c.q[k].imag()))
          throw std::domain_error("objective: non-finite control entry q[" + std::to_string(k) +
                                  "]");
    return;
  }
  require_levels(grid, c.levels, "objective");
  for (std::size_t n = 0; n < c.levels.size(); ++n)
    if (!c.levels[n].allFinite())
      for (int k = 0; k < c.levels[n].size(); ++k)
        if (!std::isfinite(c.levels[n][k].real()) || !std::isfinite(c.levels[n][k].imag()))
          throw std::domain_error("objective: non-finite control entry f[" + std::to_string(n) +
                                  "][" + std::to_string(k) + "]");
}
}  // namespace detail

struct ObjectiveResult {
  double value = 0.0;   // J
  double misfit = 0.0;  // 1/2 ||y^{Nt} - data||_h^2
  std::vector<Field> trajectory;
};

inline ObjectiveResult objective(const InverseProblem& P, const Control& c) {
  detail::require_finite_control(P.grid, c);
  const SpaceTimeField f = c.materialize(P.grid);
  ObjectiveResult out;
  out.trajectory = forward(P.ops, P.y0, f, P.forcing);
  const Field residual = out.trajectory.back() - P.data;
  out.misfit = 0.5 * residual.squaredNorm() * P.grid.dx * P.grid.dy;
  const double reg = control_norm_ht(P.grid, c);
  out.value = out.misfit + 0.5 * P.eps * reg * reg;
  if (!std::isfinite(out.value)) throw std::domain_error("objective: non-finite value");
  return out;
}

namespace detail {

/// Misfit gradient levels with respect to <<.,.>>_{h,t}, i.e. the adjoint of
/// the forward map applied to the terminal residual. `corrected` selects the
/// exact discrete adjoint (terminal residual premultiplied by Mminus^{-*});
/// `scale` is a diagnostic multiplier used by the gradient calibration.
inline SpaceTimeField misfit_gradient_levels(const InverseProblem& P,
                                             const std::vector<Field>& traj, bool corrected,
                                             double scale) {
  const Grid2D& g = P.grid;
  Field residual = traj.back() - P.data;
  const Field terminal = corrected ? P.ops.fact_minus_h.solve(residual) : std::move(residual);
  const std::vector<Field> phi = adjoint(P.ops, terminal);
  SpaceTimeField grad(static_cast<std::size_t>(g.Nt));
  if (P.forcing == ForcingRule::left) {
    for (int n = 0; n < g.Nt; ++n) grad[n] = scale * phi[n + 1];
    return grad;
  }
  // Trapezoid forcing spreads f^n over neighbouring steps; its adjoint
  // averages adjacent phi levels. The end extension f^{Nt} := f^{Nt-1} puts
  // a full phi^{Nt} weight on the last control level.
  if (g.Nt == 1) {
    grad[0] = scale * phi[1];
    return grad;
  }
  grad[0] = (0.5 * scale) * phi[1];
  for (int n = 1; n <= g.Nt - 2; ++n) grad[n] = (0.5 * scale) * (phi[n] + phi[n + 1]);
  grad[g.Nt - 1] = (0.5 * scale) * phi[g.Nt - 1] + scale * phi[g.Nt];
  return grad;
}

}  // namespace detail

/// Gradient of J with respect to a full space-time control, represented in
/// the <<.,.>>_{h,t} inner product: level n is phi^{n+1} + eps f^n, with phi
/// the (mode-dependent) adjoint sweep.
inline SpaceTimeField gradient_full(const InverseProblem& P, const Control& c,
                                    const std::vector<Field>& traj) {
  if (c.mode != ControlMode::full)
    throw std::invalid_argument("gradient_full: control is not in full mode");
  if (static_cast<int>(traj.size()) != P.grid.Nt + 1)
    throw std::invalid_argument("gradient_full: trajectory does not match grid");
  SpaceTimeField grad =
      detail::misfit_gradient_levels(P, traj, P.grad_mode == GradientMode::exact, 1.0);
  if (P.eps != 0.0)
    for (int n = 0; n < P.grid.Nt; ++n) grad[n] += P.eps * c.levels[n];
  return grad;
}

/// Gradient of J with respect to the spatial factor q of a separable control,
/// represented in <.,.>_h: the adjoint of the embedding q -> {q g^n} applied
/// to the full gradient, sum_n conj(g^n) (phi^{n+1} + eps q g^n) dt.
inline Field gradient_separable(const InverseProblem& P, const Control& c,
                                const std::vector<Field>& traj) {
  if (c.mode != ControlMode::separable)
    throw std::invalid_argument("gradient_separable: control is not in separable mode");
  if (static_cast<int>(traj.size()) != P.grid.Nt + 1)
    throw std::invalid_argument("gradient_separable: trajectory does not match grid");
  const SpaceTimeField misfit_grad =
      detail::misfit_gradient_levels(P, traj, P.grad_mode == GradientMode::exact, 1.0);
  Field grad = Field::Zero(P.grid.m);
  for (int n = 0; n < P.grid.Nt; ++n) grad += std::conj(c.g[n]) * misfit_grad[n];
  grad *= P.grid.dt;
  if (P.eps != 0.0) grad += (P.eps * detail::g_weight(P.grid, c.g)) * c.q;
  return grad;
}

/// Mode dispatch used by the optimizer: the gradient as a control-shaped
/// object in the control-space inner product.
inline Control gradient(const InverseProblem& P, const Control& c,
                        const std::vector<Field>& traj) {
  if (c.mode == ControlMode::full) return Control::make_full(gradient_full(P, c, traj));
  return Control::make_separable(gradient_separable(P, c, traj), c.g);
}

namespace detail {

/// Euclidean partial derivative of the objective with respect to one real
/// coordinate of the control (re or im part of one entry), by central
/// differences.
struct ProbeCoordinate {
  int level;  // full mode only
  int index;
  bool imag_part;
};

inline double fd_partial(const InverseProblem& P, const Control& c, const ProbeCoordinate& pc,
                         double h) {
  auto shifted = [&](double delta) {
    Control cc = c;
    const Complex bump = pc.imag_part ? Complex(0.0, delta) : Complex(delta, 0.0);
    if (c.mode == ControlMode::full)
      cc.levels[pc.level][pc.index] += bump;
    else
      cc.q[pc.index] += bump;
    return objective(P, cc).value;
  };
  return (shifted(h) - shifted(-h)) / (2.0 * h);
}

/// The analytic counterpart: the control-space gradient component times the
/// quadrature weight of that coordinate.
inline double analytic_partial(const Grid2D& g, const Control& grad, const ProbeCoordinate& pc) {
  if (grad.mode == ControlMode::full) {
    const Complex v = grad.levels[pc.level][pc.index];
    return (pc.imag_part ? v.imag() : v.real()) * g.dx * g.dy * g.dt;
  }
  const Complex v = grad.q[pc.index];
  return (pc.imag_part ? v.imag() : v.real()) * g.dx * g.dy;
}

inline std::vector<ProbeCoordinate> draw_probes(const Grid2D& g, const Control& c, int n_probes,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ProbeCoordinate> probes;
  probes.reserve(n_probes);
  std::uniform_int_distribution<int> pick_index(0, g.m - 1);
  std::uniform_int_distribution<int> pick_level(0, g.Nt - 1);
  std::uniform_int_distribution<int> pick_part(0, 1);
  for (int k = 0; k < n_probes; ++k) {
    ProbeCoordinate pc;
    pc.level = (c.mode == ControlMode::full) ? pick_level(rng) : 0;
    pc.index = pick_index(rng);
    pc.imag_part = pick_part(rng) == 1;
    probes.push_back(pc);
  }
  return probes;
}

inline double worst_relative_error(const std::vector<double>& analytic,
                                   const std::vector<double>& fd) {
  double scale = 0.0;
  for (double v : analytic) scale = std::max(scale, std::abs(v));
  for (double v : fd) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;  // all-zero gradient and differences agree exactly
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-12 * scale});
    worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
  }
  return worst;
}

}  // namespace detail

/// Compares the analytic gradient against central finite differences of the
/// objective on n_probes randomly drawn real coordinates; returns the worst
/// relative error. The objective is exactly quadratic in the control, so the
/// central differences are exact up to roundoff.
inline double fd_check(const InverseProblem& P, const Control& c, int n_probes, double h_fd,
                       std::uint64_t seed = 0) {
  if (n_probes < 1) throw std::invalid_argument("fd_check: n_probes must be >= 1");
  if (!(h_fd > 0.0)) throw std::invalid_argument("fd_check: h_fd must be positive");
  const ObjectiveResult obj = objective(P, c);
  const Control grad = gradient(P, c, obj.trajectory);
  const auto probes = detail::draw_probes(P.grid, c, n_probes, seed);
  std::vector<double> an, fd;
  an.reserve(probes.size());
  fd.reserve(probes.size());
  for (const auto& pc : probes) {
    an.push_back(detail::analytic_partial(P.grid, grad, pc));
    fd.push_back(detail::fd_partial(P, c, pc, h_fd));
  }
  return detail::worst_relative_error(an, fd);
}

/// One-time calibration of the adjoint-gradient convention: compares three
/// candidate misfit-gradient assemblies against finite differences and
/// reports the error of each. "corrected" applies the Mminus^{-*} terminal
/// solve (the exact discrete adjoint); "plain" is the uncorrected recursion;
/// "plain_dt" additionally scales the adjoint levels by dt.
struct GradientCalibration {
  double err_plain = 0.0;
  double err_plain_dt = 0.0;
  double err_corrected = 0.0;
  const char* best = "";
};

inline GradientCalibration calibrate_gradient(const InverseProblem& P, const Control& c,
                                              int n_probes, double h_fd,
                                              std::uint64_t seed = 0) {
  const ObjectiveResult obj = objective(P, c);
  const auto probes = detail::draw_probes(P.grid, c, n_probes, seed);
  std::vector<double> fd;
  fd.reserve(probes.size());
  for (const auto& pc : probes) fd.push_back(detail::fd_partial(P, c, pc, h_fd));

  auto error_for = [&](bool corrected, double scale) {
    SpaceTimeField levels = detail::misfit_gradient_levels(P, obj.trajectory, corrected, scale);
    if (P.eps != 0.0) {
      const SpaceTimeField f = c.materialize(P.grid);
      for (int n = 0; n < P.grid.Nt; ++n) levels[n] += P.eps * f[n];
    }
    Control grad;
    if (c.mode == ControlMode::full) {
      grad = Control::make_full(std::move(levels));
    } else {
      Field gq = Field::Zero(P.grid.m);
      for (int n = 0; n < P.grid.Nt; ++n) gq += std::conj(c.g[n]) * levels[n];
      gq *= P.grid.dt;
      grad = Control::make_separable(std::move(gq), c.g);
    }
    std::vector<double> an;
    an.reserve(probes.size());
    for (const auto& pc : probes) an.push_back(detail::analytic_partial(P.grid, grad, pc));
    return detail::worst_relative_error(an, fd);
  };

  GradientCalibration cal;
  cal.err_plain = error_for(false, 1.0);
  cal.err_plain_dt = error_for(false, P.grid.dt);
  cal.err_corrected = error_for(true, 1.0);
  cal.best = "corrected";
  double best_err = cal.err_corrected;
  if (cal.err_plain < best_err) {
    cal.best = "plain";
    best_err = cal.err_plain;
  }
  if (cal.err_plain_dt < best_err) cal.best = "plain_dt";
  return cal;
}

}  // namespace glinv
