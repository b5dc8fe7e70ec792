#pragma once

#include <functional>
#include <optional>

#include "glinv/inverse.hpp"

namespace glinv {

struct NcgConfig {
  double tau = 1e-5;              // stopping tolerance on the control-space gradient norm
  int k_max = 500;                // iteration cap
  double armijo_c = 1e-3;         // sufficient-decrease parameter
  double backtrack_factor = 0.5;  // step shrink factor
  double alpha0 = 1.0;            // initial trial step at k=0
  int restart_period = 5;         // steepest-descent restart every this many iterations
  std::optional<double> rho;      // projection radius ||f||_{h,t} <= rho; unset = unconstrained
  int max_backtracks = 60;

  void validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("NcgConfig: tau must be positive");
    if (k_max < 0) throw std::invalid_argument("NcgConfig: k_max must be >= 0");
    if (!(armijo_c > 0.0 && armijo_c < 1.0))
      throw std::invalid_argument("NcgConfig: armijo_c must lie in (0,1)");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
      throw std::invalid_argument("NcgConfig: backtrack_factor must lie in (0,1)");
    if (!(alpha0 > 0.0)) throw std::invalid_argument("NcgConfig: alpha0 must be positive");
    if (restart_period < 1) throw std::invalid_argument("NcgConfig: restart_period must be >= 1");
    if (rho && !(*rho > 0.0)) throw std::invalid_argument("NcgConfig: rho must be positive");
    if (max_backtracks < 0) throw std::invalid_argument("NcgConfig: max_backtracks must be >= 0");
  }
};

enum class StopReason { tolerance, k_max, line_search_failure };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::k_max: return "k_max";
    case StopReason::line_search_failure: return "line_search_failure";
  }
  return "unknown";
}

/// One accepted NCG step. J, misfit, and grad_norm describe the iterate the
/// step produced; alpha, beta, and backtracks describe the step itself.
struct IterationRecord {
  int k = 0;
  double J = 0.0;
  double misfit = 0.0;
  double grad_norm = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  int backtracks = 0;
};

struct RunReport {
  int iterations = 0;
  std::vector<IterationRecord> history;
  Control final_control;
  Field final_state;
  StopReason stop_reason = StopReason::k_max;
  double final_J = 0.0;
  double final_misfit = 0.0;
  double final_grad_norm = 0.0;
};

/// Polak-Ribiere+ coefficient
///   beta = max{0, <<r_k - r_{k-1}, r_k>> / (<<r_{k-1}, r_{k-1}>> + 1e-30)}.
inline double pr_plus_beta(const Grid2D& grid, const Control& r_k, const Control& r_km1) {
  detail::require_same_shape(r_k, r_km1, "pr_plus_beta");
  const Control diff = control_add_scaled(r_k, -1.0, r_km1);
  const double num = control_inner(grid, diff, r_k);
  const double den = control_inner(grid, r_km1, r_km1) + 1e-30;
  return std::max(0.0, num / den);
}

struct ArmijoResult {
  bool success = false;
  double alpha = 0.0;
  double J_new = 0.0;
  int backtracks = 0;
};

/// Armijo backtracking: returns the first alpha in {alpha0 * bf^j} with
/// J(alpha) <= J0 + c * alpha * slope, where slope = <<r,d>> must be
/// negative. eval_J evaluates the (projected) trial point.
template <class EvalJ>
ArmijoResult armijo(EvalJ&& eval_J, double J0, double slope, const NcgConfig& cfg,
                    double alpha0) {
  if (!(slope < 0.0))
    throw std::invalid_argument("armijo: <<r,d>> must be negative (not a descent direction)");
  ArmijoResult res;
  double alpha = alpha0;
  for (int j = 0; j <= cfg.max_backtracks; ++j) {
    const double J_trial = eval_J(alpha);
    if (J_trial <= J0 + cfg.armijo_c * alpha * slope) {
      res.success = true;
      res.alpha = alpha;
      res.J_new = J_trial;
      res.backtracks = j;
      return res;
    }
    alpha *= cfg.backtrack_factor;
  }
  res.backtracks = cfg.max_backtracks + 1;
  return res;
}

/// Radial projection onto the ball {f : ||f||_{h,t} <= rho}. Separable
/// controls scale q (the prescribed g is untouched).
inline Control project_ball(const Grid2D& grid, const Control& c, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("project_ball: rho must be positive");
  const double norm = control_norm_ht(grid, c);
  if (norm <= rho) return c;
  return control_scaled(c, rho / norm);
}

/// Polak-Ribiere+ nonlinear conjugate gradient with Armijo backtracking,
/// generic over the objective. `prob` must provide
///   ObjectiveResult evaluate(const Control&) const;
///   Control gradient_at(const Control&, const ObjectiveResult&) const;
/// Directions restart to steepest descent at k=0, every restart_period
/// iterations, and whenever the conjugate direction fails the descent test.
/// Stops when the control-space gradient norm drops below tau, the iteration
/// cap is reached, or the line search fails (partial report returned).
template <class Problem>
RunReport ncg_minimize_with(const Problem& prob, const Grid2D& grid, Control c0,
                            const NcgConfig& cfg,
                            const std::function<void(const IterationRecord&)>& on_iteration = {}) {
  cfg.validate();
  if (cfg.rho) c0 = project_ball(grid, c0, *cfg.rho);

  Control f = std::move(c0);
  ObjectiveResult obj = prob.evaluate(f);
  Control r = prob.gradient_at(f, obj);
  double r_norm = control_norm(grid, r);

  RunReport rep;
  rep.stop_reason = StopReason::k_max;
  Control d = r;            // shaped like r; overwritten before first use
  Control r_prev = r;       // valid only when have_prev
  bool have_prev = false;
  double alpha_prev = cfg.alpha0;

  Control trial = f;
  ObjectiveResult trial_obj;
  int k = 0;
  for (; k < cfg.k_max; ++k) {
    if (r_norm < cfg.tau) {
      rep.stop_reason = StopReason::tolerance;
      break;
    }

    double beta = 0.0;
    const bool periodic_restart = (k % cfg.restart_period == 0);
    if (!have_prev || periodic_restart || control_inner(grid, r, d) >= 0.0) {
      d = control_scaled(r, -1.0);
    } else {
      beta = pr_plus_beta(grid, r, r_prev);
      d = control_add_scaled(control_scaled(r, -1.0), beta, d);
      if (control_inner(grid, r, d) >= 0.0) {
        d = control_scaled(r, -1.0);
        beta = 0.0;
      }
    }
    const double slope = control_inner(grid, r, d);

    auto eval_trial = [&](double alpha) {
      trial = control_add_scaled(f, alpha, d);
      if (cfg.rho) trial = project_ball(grid, trial, *cfg.rho);
      trial_obj = prob.evaluate(trial);
      return trial_obj.value;
    };
    const double alpha_start = have_prev ? alpha_prev / cfg.backtrack_factor : cfg.alpha0;
    const ArmijoResult ls = armijo(eval_trial, obj.value, slope, cfg, alpha_start);
    if (!ls.success) {
      rep.stop_reason = StopReason::line_search_failure;
      break;
    }

    f = std::move(trial);
    obj = std::move(trial_obj);
    r_prev = std::move(r);
    r = prob.gradient_at(f, obj);
    r_norm = control_norm(grid, r);
    have_prev = true;
    alpha_prev = ls.alpha;

    IterationRecord rec;
    rec.k = k;
    rec.J = obj.value;
    rec.misfit = obj.misfit;
    rec.grad_norm = r_norm;
    rec.alpha = ls.alpha;
    rec.beta = beta;
    rec.backtracks = ls.backtracks;
    rep.history.push_back(rec);
    if (on_iteration) on_iteration(rec);
  }
  if (k == cfg.k_max && r_norm < cfg.tau) rep.stop_reason = StopReason::tolerance;

  rep.iterations = static_cast<int>(rep.history.size());
  rep.final_control = std::move(f);
  if (!obj.trajectory.empty()) rep.final_state = obj.trajectory.back();
  rep.final_J = obj.value;
  rep.final_misfit = obj.misfit;
  rep.final_grad_norm = r_norm;
  return rep;
}

/// The terminal-tracking problem fed to the generic driver.
inline RunReport ncg_minimize(const InverseProblem& P, Control c0, const NcgConfig& cfg,
                              const std::function<void(const IterationRecord&)>& on_iteration = {}) {
  struct Adapter {
    const InverseProblem& P;
    ObjectiveResult evaluate(const Control& c) const { return objective(P, c); }
    Control gradient_at(const Control& c, const ObjectiveResult& obj) const {
      return gradient(P, c, obj.trajectory);
    }
  };
  return ncg_minimize_with(Adapter{P}, P.grid, std::move(c0), cfg, on_iteration);
}

}  // namespace glinv
