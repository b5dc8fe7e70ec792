#pragma once

// Reconstruction of complex-valued source terms in the 2-D linear
// Ginzburg-Landau equation from final-time measurements: Crank-Nicolson
// forward/adjoint solvers, a Tikhonov-regularized tracking objective with
// adjoint gradients, and a Polak-Ribiere+ conjugate-gradient reconstructor.

#include "glinv/experiments.hpp"
#include "glinv/inverse.hpp"
#include "glinv/io.hpp"
#include "glinv/linsolve.hpp"
#include "glinv/mesh.hpp"
#include "glinv/ncg.hpp"
#include "glinv/pde.hpp"
