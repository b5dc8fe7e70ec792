#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace glinv {

using Complex = std::complex<double>;
using Field = Eigen::VectorXcd;
using SpaceTimeField = std::vector<Field>;
using SparseMatrixR = Eigen::SparseMatrix<double>;
using SparseMatrixC = Eigen::SparseMatrix<Complex>;

/// Uniform tensor grid on (0,Lx) x (0,Ly) x (0,T) with homogeneous Dirichlet
/// boundaries. Unknowns live on the (Nx-1)*(Ny-1) interior nodes, ordered
/// lexicographically with the x index varying fastest.
struct Grid2D {
  double Lx = 1.0;
  double Ly = 1.0;
  double T = 1.0;
  int Nx = 2;
  int Ny = 2;
  int Nt = 1;
  double dx = 0.5;
  double dy = 0.5;
  double dt = 1.0;
  int m = 1;

  /// Flat index of interior node (i,j), i in [1,Nx-1], j in [1,Ny-1].
  int index(int i, int j) const { return (j - 1) * (Nx - 1) + (i - 1); }

  /// Inverse of index(): flat k -> (i,j).
  std::pair<int, int> node(int k) const {
    return {k % (Nx - 1) + 1, k / (Nx - 1) + 1};
  }

  double x(int i) const { return i * dx; }
  double y(int j) const { return j * dy; }
  double t(int n) const { return n * dt; }
};

inline Grid2D build_grid(double Lx, double Ly, double T, int Nx, int Ny, int Nt) {
  if (!(Lx > 0.0) || !(Ly > 0.0) || !(T > 0.0))
    throw std::invalid_argument("build_grid: domain lengths Lx, Ly, T must be positive");
  if (Nx < 2 || Ny < 2)
    throw std::invalid_argument(
        "build_grid: Nx and Ny must be >= 2 (grid has no interior nodes otherwise)");
  if (Nt < 1) throw std::invalid_argument("build_grid: Nt must be >= 1");
  Grid2D g;
  g.Lx = Lx;
  g.Ly = Ly;
  g.T = T;
  g.Nx = Nx;
  g.Ny = Ny;
  g.Nt = Nt;
  g.dx = Lx / Nx;
  g.dy = Ly / Ny;
  g.dt = T / Nt;
  g.m = (Nx - 1) * (Ny - 1);
  return g;
}

/// 1-D discrete Dirichlet Laplacian, (1/h^2) tridiag(1,-2,1), size (N-1).
inline SparseMatrixR laplacian_1d(int N, double h) {
  if (N < 2) throw std::invalid_argument("laplacian_1d: N must be >= 2");
  if (!(h > 0.0)) throw std::invalid_argument("laplacian_1d: h must be positive");
  const int n = N - 1;
  const double w = 1.0 / (h * h);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(3 * n);
  for (int i = 0; i < n; ++i) {
    if (i > 0) trips.emplace_back(i, i - 1, w);
    trips.emplace_back(i, i, -2.0 * w);
    if (i + 1 < n) trips.emplace_back(i, i + 1, w);
  }
  SparseMatrixR L(n, n);
  L.setFromTriplets(trips.begin(), trips.end());
  L.makeCompressed();
  return L;
}

/// 2-D discrete Dirichlet Laplacian as the Kronecker sum
/// I_y (x) Lap_x + Lap_y (x) I_x under the x-fastest lexicographic ordering.
/// Five-point stencil, symmetric, at most 5 nonzeros per row.
inline SparseMatrixR laplacian_2d(const Grid2D& g) {
  const int nx = g.Nx - 1;
  const int ny = g.Ny - 1;
  const double wx = 1.0 / (g.dx * g.dx);
  const double wy = 1.0 / (g.dy * g.dy);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(5 * static_cast<std::size_t>(g.m));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int k = j * nx + i;
      if (j > 0) trips.emplace_back(k, k - nx, wy);
      if (i > 0) trips.emplace_back(k, k - 1, wx);
      trips.emplace_back(k, k, -2.0 * wx - 2.0 * wy);
      if (i + 1 < nx) trips.emplace_back(k, k + 1, wx);
      if (j + 1 < ny) trips.emplace_back(k, k + nx, wy);
    }
  }
  SparseMatrixR L(g.m, g.m);
  L.setFromTriplets(trips.begin(), trips.end());
  L.makeCompressed();
  return L;
}

namespace detail {
inline void require_length(const Grid2D& g, const Field& v, const char* where) {
  if (v.size() != g.m)
    throw std::invalid_argument(std::string(where) + ": field length " +
                                std::to_string(v.size()) + " does not match grid m=" +
                                std::to_string(g.m));
}
inline void require_levels(const Grid2D& g, const SpaceTimeField& X, const char* where) {
  if (static_cast<int>(X.size()) != g.Nt)
    throw std::invalid_argument(std::string(where) + ": expected " + std::to_string(g.Nt) +
                                " time levels, got " + std::to_string(X.size()));
  for (const Field& level : X) require_length(g, level, where);
}
}  // namespace detail

/// Mass-lumped spatial inner product <x,y>_h = Re(x^* y) dx dy.
inline double inner_h(const Grid2D& g, const Field& x, const Field& y) {
  detail::require_length(g, x, "inner_h");
  detail::require_length(g, y, "inner_h");
  return x.dot(y).real() * g.dx * g.dy;
}

inline double norm_h(const Grid2D& g, const Field& x) {
  detail::require_length(g, x, "norm_h");
  return x.norm() * std::sqrt(g.dx * g.dy);
}

/// Sesquilinear spatial pairing x^* y dx dy (no real part). Used by duality
/// checks; distinct from inner_h.
inline Complex inner_c(const Grid2D& g, const Field& x, const Field& y) {
  detail::require_length(g, x, "inner_c");
  detail::require_length(g, y, "inner_c");
  return x.dot(y) * (g.dx * g.dy);
}

/// Space-time inner product: left-endpoint rectangle rule over the Nt control
/// levels, <<X,Y>>_{h,t} = sum_n <X^n,Y^n>_h dt.
inline double inner_ht(const Grid2D& g, const SpaceTimeField& X, const SpaceTimeField& Y) {
  detail::require_levels(g, X, "inner_ht");
  detail::require_levels(g, Y, "inner_ht");
  double s = 0.0;
  for (int n = 0; n < g.Nt; ++n) s += X[n].dot(Y[n]).real();
  return s * g.dx * g.dy * g.dt;
}

inline double norm_ht(const Grid2D& g, const SpaceTimeField& X) {
  detail::require_levels(g, X, "norm_ht");
  double s = 0.0;
  for (const Field& level : X) s += level.squaredNorm();
  return std::sqrt(s * g.dx * g.dy * g.dt);
}

/// Nt zero fields of length m (a zero control / forcing).
inline SpaceTimeField zero_levels(const Grid2D& g) {
  return SpaceTimeField(static_cast<std::size_t>(g.Nt), Field::Zero(g.m));
}

inline Field zero_field(const Grid2D& g) { return Field::Zero(g.m); }

/// Samples a scalar function of (x,y) on the interior nodes.
template <class F>
Field sample_interior(const Grid2D& g, F&& fn) {
  Field v(g.m);
  for (int j = 1; j < g.Ny; ++j)
    for (int i = 1; i < g.Nx; ++i) v[g.index(i, j)] = fn(g.x(i), g.y(j));
  return v;
}

}  // namespace glinv
