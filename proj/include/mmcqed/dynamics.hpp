#pragma once

// Lindblad master equation: superoperator assembly, steady states and
// adaptive time propagation.
//
// Density matrices are vectorized column-stacked: vec(rho)[i + j*n] = rho(i, j),
// so vec(A X B) = (B^T kron A) vec(X).

#include <cstddef>
#include <functional>
#include <vector>

#include "mmcqed/hilbert.hpp"
#include "mmcqed/model.hpp"

namespace mmcqed {

using SuperMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor>;

struct SolverSettings {
  /// Largest n^2 for which the superoperator is assembled at all.
  std::size_t max_superoperator_dim = 400'000;
  /// Largest n^2 solved by sparse LU; above it steady states come from propagation.
  std::size_t direct_solve_limit = 120'000;
  /// Steady-state acceptance: ||L rho|| <= tol * ||L||_F * ||rho||.
  double steady_residual_tol = 1e-10;
  /// Propagation fallback: stop when ||d rho/dt|| < tol over `steady_window`.
  double steady_rate_tol = 1e-9;
  double steady_window = 1.0;
  double steady_max_time = 2'000.0;
  double rtol = 1e-9;
  double atol = 1e-12;
  double trace_drift_tol = 1e-8;
  double min_step = 1e-14;
  double max_step = 0.0;  // 0: unbounded
  /// Smallest allowed eigenvalue of an accepted density matrix.
  double positivity_tol = 1e-9;
  /// Regression input check: ||L rho|| <= tol * ||L||_F * ||rho||.
  double stationarity_tol = 1e-8;
};

class DensityMatrix {
 public:
  DensityMatrix() = default;
  DensityMatrix(HilbertSpace space, DenseMatrix rho);

  const HilbertSpace& space() const { return space_; }
  const DenseMatrix& matrix() const { return rho_; }
  Complex trace() const { return rho_.trace(); }
  double min_eigenvalue() const;
  /// Throws SolverError unless trace == 1 and rho >= 0 within tolerance.
  void check_valid(double tol = 1e-9) const;

  static DensityMatrix pure(const HilbertSpace& space, const Vector& psi);
  static DensityMatrix basis(const HilbertSpace& space, const BasisState& s);

 private:
  HilbertSpace space_;
  DenseMatrix rho_;
};

/// 0.5 * trace norm of the difference.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

class Liouvillian {
 public:
  /// Throws SolverError when n^2 exceeds settings.max_superoperator_dim.
  Liouvillian(Operator hamiltonian, std::vector<Operator> collapse_ops,
              const SolverSettings& settings = {});

  const HilbertSpace& space() const { return hamiltonian_.space(); }
  const Operator& hamiltonian() const { return hamiltonian_; }
  const std::vector<Operator>& collapse_ops() const { return collapse_; }
  const SuperMatrix& matrix() const { return super_; }
  std::size_t dim() const { return static_cast<std::size_t>(super_.rows()); }
  double norm() const { return norm_; }

  Vector apply(const Vector& vec_rho) const { return super_ * vec_rho; }
  DenseMatrix apply(const DenseMatrix& rho) const;

 private:
  Operator hamiltonian_;
  std::vector<Operator> collapse_;
  SuperMatrix super_;
  double norm_ = 0.0;
};

Vector vectorize(const DenseMatrix& rho);
DenseMatrix unvectorize(const Vector& v, std::size_t n);

/// Liouvillian for the config's frame (Hamiltonian + sqrt(kappa_m) a_m, sqrt(gamma) s-).
Liouvillian build_liouvillian(const SystemConfig& config, const SolverSettings& settings = {});

/// Unique stationary state. Direct sparse LU with the first row replaced by the
/// trace condition; above settings.direct_solve_limit, propagation from the
/// vacuum until the rate of change stays below tolerance. Throws
/// NonUniqueSteadyState if the kernel is degenerate.
DensityMatrix steady_state(const Liouvillian& liouvillian, const SolverSettings& settings = {});

/// Adaptive Dormand-Prince 5(4) integration of d(vec X)/dt = L vec X, sampled
/// at every entry of t_grid (non-decreasing, first entry is the start time).
/// Works for arbitrary (non-state) matrices as needed by regression.
std::vector<DenseMatrix> propagate_matrix(const Liouvillian& liouvillian, const DenseMatrix& x0,
                                          const std::vector<double>& t_grid,
                                          const SolverSettings& settings = {});

/// Streaming form: observe(k, vec X(t_k)) is called for every grid point and
/// nothing is stored.
void propagate_matrix(const Liouvillian& liouvillian, const DenseMatrix& x0,
                      const std::vector<double>& t_grid,
                      const std::function<void(std::size_t, const Vector&)>& observe,
                      const SolverSettings& settings = {});

std::vector<DensityMatrix> propagate(const Liouvillian& liouvillian, const DensityMatrix& rho0,
                                     const std::vector<double>& t_grid,
                                     const SolverSettings& settings = {});

Complex expectation(const DensityMatrix& rho, const Operator& op);
Complex expectation(const Vector& psi, const Operator& op);

}  // namespace mmcqed
