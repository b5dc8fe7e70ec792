#pragma once

#include "glinv/linsolve.hpp"
#include "glinv/mesh.hpp"

namespace glinv {

/// Time quadrature for the forcing term of the Crank-Nicolson step.
/// left:      Mminus y^{n+1} = Mplus y^n + dt f^n          (first order in t)
/// trapezoid: Mminus y^{n+1} = Mplus y^n + (dt/2)(f^n + f^{n+1})
///            with the end extension f^{Nt} := f^{Nt-1}    (second order in t)
enum class ForcingRule { left, trapezoid };

/// Runs the forward Crank-Nicolson sweep and returns all Nt+1 states
/// y^0..y^{Nt}. The control f has Nt levels sampled at the left endpoints of
/// the time intervals.
inline std::vector<Field> forward(const CnOperators& ops, const Field& y0,
                                  const SpaceTimeField& f,
                                  ForcingRule rule = ForcingRule::left) {
  const Grid2D& g = ops.grid;
  detail::require_length(g, y0, "forward");
  detail::require_levels(g, f, "forward");
  if (!y0.allFinite()) throw std::domain_error("forward: non-finite initial condition");
  for (const Field& level : f)
    if (!level.allFinite()) throw std::domain_error("forward: non-finite forcing level");

  std::vector<Field> y(static_cast<std::size_t>(g.Nt) + 1);
  y[0] = y0;
  Field rhs(g.m);
  for (int n = 0; n < g.Nt; ++n) {
    if (rule == ForcingRule::left) {
      rhs = ops.Mplus * y[n] + g.dt * f[n];
    } else {
      const Field& fnext = (n + 1 < g.Nt) ? f[n + 1] : f[g.Nt - 1];
      rhs = ops.Mplus * y[n] + (0.5 * g.dt) * (f[n] + fnext);
    }
    y[n + 1] = ops.fact_minus.solve(rhs);
  }
  return y;
}

/// Final-time observation y^{Nt} (the discrete realization of f -> y(.,T)).
inline Field observe(const std::vector<Field>& traj) {
  if (traj.empty()) throw std::invalid_argument("observe: empty trajectory");
  return traj.back();
}

/// Time-reversed adjoint sweep: phi^{Nt} = terminal and
/// Mminus^* phi^n = Mplus^* phi^{n+1} for n = Nt-1..0. Returns all Nt+1
/// levels phi^0..phi^{Nt}.
inline std::vector<Field> adjoint(const CnOperators& ops, const Field& terminal) {
  const Grid2D& g = ops.grid;
  detail::require_length(g, terminal, "adjoint");
  std::vector<Field> phi(static_cast<std::size_t>(g.Nt) + 1);
  phi[g.Nt] = terminal;
  for (int n = g.Nt - 1; n >= 0; --n) phi[n] = ops.fact_minus_h.solve(ops.MplusH * phi[n + 1]);
  return phi;
}

}  // namespace glinv
