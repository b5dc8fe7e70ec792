#pragma once

#include <memory>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include <Eigen/SparseLU>

#include "glinv/mesh.hpp"

namespace glinv {

/// Reusable direct factorization of a complex sparse matrix (SparseLU with
/// threshold partial pivoting). Immutable after construction; solves take
/// shared read access only, so one factorization may serve many callers.
class Factorization {
 public:
  explicit Factorization(const SparseMatrixC& M)
      : lu_(std::make_unique<Eigen::SparseLU<SparseMatrixC>>()) {
    lu_->compute(M);
    if (lu_->info() != Eigen::Success)
      throw std::runtime_error("Factorization: matrix is singular or structurally deficient");
    nnz_ = lu_->nnzL() + lu_->nnzU();
  }

  Field solve(const Field& rhs) const {
    if (!rhs.allFinite())
      throw std::domain_error("Factorization::solve: right-hand side has non-finite entries");
    return lu_->solve(rhs);
  }

  /// Fill-in of the computed factors (nnz of L plus U).
  Eigen::Index fill_nnz() const { return nnz_; }
  std::string_view pivot_strategy() const { return "threshold-partial"; }

 private:
  std::unique_ptr<Eigen::SparseLU<SparseMatrixC>> lu_;
  Eigen::Index nnz_ = 0;
};

/// Assembled Crank-Nicolson operators for the constant-coefficient model:
///   A approximates the evolution operator (a+ib)*Laplacian - p*Id,
///   Mminus = I - (dt/2) A,  Mplus = I + (dt/2) A,
/// so that Mminus y^{n+1} = Mplus y^n + dt f^n advances
///   dy/dt - (a+ib) Lap y + p y = f.
/// Both Mminus and its Hermitian transpose are factorized eagerly and reused
/// at every time step of the forward and adjoint sweeps.
struct CnOperators {
  Grid2D grid;
  double a = 0.0;
  double b = 0.0;
  Complex p{0.0, 0.0};
  SparseMatrixC A;
  SparseMatrixC Mminus;
  SparseMatrixC Mplus;
  SparseMatrixC MplusH;  // Hermitian transpose of Mplus, used by the adjoint sweep
  Factorization fact_minus;
  Factorization fact_minus_h;
};

inline CnOperators assemble_cn(const Grid2D& g, double a, double b, Complex p) {
  if (!(a > 0.0)) throw std::invalid_argument("assemble_cn: diffusion coefficient a must be positive");

  const SparseMatrixR lap = laplacian_2d(g);
  SparseMatrixC A = (Complex(a, b) * lap.cast<Complex>()).pruned();
  // Identity shift enters with -p: A is the right-hand-side operator of the
  // evolution equation written with +p y on the left.
  SparseMatrixC id(g.m, g.m);
  id.setIdentity();
  A = A - p * id;
  A.makeCompressed();

  SparseMatrixC Mminus = (id - Complex(0.5 * g.dt) * A).pruned();
  SparseMatrixC Mplus = (id + Complex(0.5 * g.dt) * A).pruned();
  Mminus.makeCompressed();
  Mplus.makeCompressed();
  SparseMatrixC MminusH = Mminus.adjoint();
  SparseMatrixC MplusH = Mplus.adjoint();
  MminusH.makeCompressed();
  MplusH.makeCompressed();

  try {
    Factorization fact_minus(Mminus);
    Factorization fact_minus_h(MminusH);
    return CnOperators{g,
                       a,
                       b,
                       p,
                       std::move(A),
                       std::move(Mminus),
                       std::move(Mplus),
                       std::move(MplusH),
                       std::move(fact_minus),
                       std::move(fact_minus_h)};
  } catch (const std::runtime_error&) {
    std::ostringstream msg;
    msg << "assemble_cn: singular M- for a=" << a << " b=" << b << " p=(" << p.real() << ","
        << p.imag() << ") dt=" << g.dt;
    throw std::runtime_error(msg.str());
  }
}

}  // namespace glinv
