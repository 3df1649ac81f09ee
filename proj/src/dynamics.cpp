#include "mmcqed/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SparseLU>
#ifdef MMCQED_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif
#include <unsupported/Eigen/KroneckerProduct>

#include "mmcqed/errors.hpp"

namespace mmcqed {

DensityMatrix::DensityMatrix(HilbertSpace space, DenseMatrix rho)
    : space_(std::move(space)), rho_(std::move(rho)) {
  const auto n = static_cast<Eigen::Index>(space_.total_dim());
  if (rho_.rows() != n || rho_.cols() != n) throw SpaceMismatch("density matrix shape mismatch");
}

double DensityMatrix::min_eigenvalue() const {
  const DenseMatrix herm = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void DensityMatrix::check_valid(double tol) const {
  const Complex tr = trace();
  if (std::abs(tr - 1.0) > tol) {
    std::ostringstream msg;
    msg << "density matrix trace " << tr << " differs from 1";
    throw SolverError(msg.str());
  }
  const double herm = (rho_ - rho_.adjoint()).norm();
  if (herm > tol * std::max(1.0, rho_.norm())) throw SolverError("density matrix not Hermitian");
  const double lo = min_eigenvalue();
  if (lo < -tol) {
    throw SolverError("density matrix has negative eigenvalue " + std::to_string(lo));
  }
}

DensityMatrix DensityMatrix::pure(const HilbertSpace& space, const Vector& psi) {
  const Vector v = psi / psi.norm();
  return DensityMatrix(space, v * v.adjoint());
}

DensityMatrix DensityMatrix::basis(const HilbertSpace& space, const BasisState& s) {
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(space.total_dim()));
  psi(static_cast<Eigen::Index>(space.index(s))) = 1.0;
  return pure(space, psi);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (!(a.space() == b.space())) throw SpaceMismatch("trace distance across spaces");
  const DenseMatrix d = a.matrix() - b.matrix();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Vector vectorize(const DenseMatrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

DenseMatrix unvectorize(const Vector& v, std::size_t n) {
  const auto nn = static_cast<Eigen::Index>(n);
  return Eigen::Map<const DenseMatrix>(v.data(), nn, nn);
}

Liouvillian::Liouvillian(Operator hamiltonian, std::vector<Operator> collapse_ops,
                         const SolverSettings& settings)
    : hamiltonian_(std::move(hamiltonian)), collapse_(std::move(collapse_ops)) {
  const std::size_t n = hamiltonian_.dim();
  if (n * n > settings.max_superoperator_dim) {
    throw SolverError("superoperator dimension " + std::to_string(n * n) + " exceeds limit " +
                      std::to_string(settings.max_superoperator_dim) +
                      "; use the trajectory (mcwf) method for this size");
  }
  for (const auto& c : collapse_) {
    if (!(c.space() == hamiltonian_.space())) throw SpaceMismatch("collapse operator space");
  }
  const auto nn = static_cast<Eigen::Index>(n);
  SuperMatrix id(nn, nn);
  id.setIdentity();
  const SuperMatrix h = hamiltonian_.matrix();
  SuperMatrix l = -kI * (SuperMatrix(Eigen::kroneckerProduct(id, h)) -
                         SuperMatrix(Eigen::kroneckerProduct(SuperMatrix(h.transpose()), id)));
  for (const auto& op : collapse_) {
    const SuperMatrix c = op.matrix();
    const SuperMatrix cdc = SuperMatrix(c.adjoint()) * c;
    l += SuperMatrix(Eigen::kroneckerProduct(SuperMatrix(c.conjugate()), c));
    l -= 0.5 * SuperMatrix(Eigen::kroneckerProduct(id, cdc));
    l -= 0.5 * SuperMatrix(Eigen::kroneckerProduct(SuperMatrix(cdc.transpose()), id));
  }
  l.prune(Complex(0.0), 0.0);
  l.makeCompressed();
  super_ = std::move(l);
  norm_ = super_.norm();
}

DenseMatrix Liouvillian::apply(const DenseMatrix& rho) const {
  return unvectorize(apply(vectorize(rho)), hamiltonian_.dim());
}

Liouvillian build_liouvillian(const SystemConfig& config, const SolverSettings& settings) {
  return Liouvillian(frame_hamiltonian(config), frame_collapse_operators(config), settings);
}

namespace {

// Dormand-Prince 5(4) tableau (autonomous system, so no c_i nodes).
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class DormandPrince {
 public:
  DormandPrince(const SuperMatrix& l, const SolverSettings& s) : l_(l), s_(s) {}

  // Advance y from t to t_end. `h` carries the step size between calls.
  void advance(Vector& y, double& t, double t_end, double& h) {
    if (t_end <= t) return;
    if (!have_k1_) {
      k1_ = l_ * y;
      have_k1_ = true;
    }
    if (h <= 0.0) h = initial_step(y, t_end - t);
    while (t < t_end) {
      double step = std::min(h, t_end - t);
      if (s_.max_step > 0.0) step = std::min(step, s_.max_step);
      const bool last = step >= t_end - t;
      k2_ = l_ * (y + step * a21 * k1_);
      k3_ = l_ * (y + step * (a31 * k1_ + a32 * k2_));
      k4_ = l_ * (y + step * (a41 * k1_ + a42 * k2_ + a43 * k3_));
      k5_ = l_ * (y + step * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_));
      k6_ = l_ * (y + step * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_));
      y_new_ = y + step * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
      k7_ = l_ * y_new_;
      err_ = step * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
      const double scale = s_.atol + s_.rtol * std::max(y.cwiseAbs().maxCoeff(),
                                                        y_new_.cwiseAbs().maxCoeff());
      const double err = err_.cwiseAbs().maxCoeff() / scale;
      if (!std::isfinite(err)) {
        h = 0.25 * step;
      } else if (err <= 1.0) {
        t = last ? t_end : t + step;
        y.swap(y_new_);
        k1_.swap(k7_);
        ++accepted_;
        const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
        // keep the proposal for the next interval unless this was a clipped final step
        if (!last || step >= h) h = step * grow;
      } else {
        ++rejected_;
        h = step * std::max(0.2, 0.9 * std::pow(err, -0.2));
      }
      if (h < s_.min_step) {
        std::ostringstream msg;
        msg << "step size underflow at t = " << t << " (h = " << h << ", accepted " << accepted_
            << ", rejected " << rejected_ << "); the system is too stiff for explicit integration";
        throw SolverError(msg.str());
      }
    }
  }

  std::size_t accepted() const { return accepted_; }

 private:
  double initial_step(const Vector& y, double span) const {
    const double d0 = y.cwiseAbs().maxCoeff();
    const double d1 = k1_.cwiseAbs().maxCoeff();
    double h = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 : 0.01 * d0 / d1;
    return std::min(h, span);
  }

  const SuperMatrix& l_;
  const SolverSettings& s_;
  bool have_k1_ = false;
  Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_, y_new_, err_;
  std::size_t accepted_ = 0, rejected_ = 0;
};

Complex vec_trace(const Vector& v, std::size_t n) {
  Complex tr = 0.0;
  for (std::size_t i = 0; i < n; ++i) tr += v(static_cast<Eigen::Index>(i + i * n));
  return tr;
}

DensityMatrix hermitize(const HilbertSpace& space, const DenseMatrix& m) {
  DenseMatrix h = 0.5 * (m + m.adjoint());
  h /= h.trace().real();
  return DensityMatrix(space, std::move(h));
}

DensityMatrix steady_state_direct(const Liouvillian& liouv, const SolverSettings& settings) {
  const std::size_t n = liouv.space().total_dim();
  const auto nn = static_cast<Eigen::Index>(n * n);
  // Replace row 0 (the d rho_00/dt equation, implied by trace preservation) with Tr rho = 1.
  SuperMatrix a = liouv.matrix();
  SuperMatrix rowmask(nn, nn);
  {
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      trip.emplace_back(0, static_cast<Eigen::Index>(i + i * n), 1.0);
    }
    rowmask.setFromTriplets(trip.begin(), trip.end());
  }
  a.prune([](Eigen::Index row, Eigen::Index, const Complex&) { return row != 0; });
  a += rowmask;
  a.makeCompressed();

#ifdef MMCQED_HAVE_UMFPACK
  // 64-bit indices select umfpack_zl_*, which is not capped at 2 GB of workspace.
  using LongMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, long>;
  Eigen::UmfPackLU<LongMatrix> lu;
  const LongMatrix a_long = a;
  lu.compute(a_long);
#else
  Eigen::SparseLU<SuperMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
#endif
  if (lu.info() != Eigen::Success) {
#ifdef MMCQED_HAVE_UMFPACK
    // UMFPACK reports a numerically singular matrix as warning code 1; anything
    // else (out of memory, invalid input) is a solver failure.
    const int code = lu.info() == Eigen::NumericalIssue ? lu.umfpackFactorizeReturncode() : -999;
    if (code != 1) {
      throw SolverError("steady state: sparse LU failed (UMFPACK status " + std::to_string(code) +
                        "); lower the cutoffs or raise direct_solve_limit's alternative");
    }
#endif
    throw NonUniqueSteadyState(
        "steady state: Liouvillian with trace constraint is singular; the stationary kernel "
        "has dimension > 1");
  }
  Vector b = Vector::Zero(nn);
  b(0) = 1.0;
  Vector x = lu.solve(b);
  if (!x.allFinite()) throw NonUniqueSteadyState("steady state: solution is not finite");

  // One step of iterative refinement on the constrained system.
  const Vector r = b - a * x;
  x += lu.solve(r);

  DensityMatrix rho = hermitize(liouv.space(), unvectorize(x, n));
  const double resid = liouv.apply(vectorize(rho.matrix())).norm();
  const double bound = settings.steady_residual_tol * liouv.norm() * rho.matrix().norm();
  if (!(resid <= bound)) {
    std::ostringstream msg;
    msg << "steady state residual " << resid << " exceeds " << bound;
    throw SolverError(msg.str());
  }
  const double lo = rho.min_eigenvalue();
  if (lo < -settings.positivity_tol) {
    throw NonUniqueSteadyState("steady state is not positive (min eigenvalue " +
                               std::to_string(lo) + "); the kernel is likely degenerate");
  }
  return rho;
}

DensityMatrix steady_state_propagated(const Liouvillian& liouv, const SolverSettings& settings) {
  const HilbertSpace& space = liouv.space();
  const std::size_t n = space.total_dim();
  BasisState vac{0, std::vector<int>(space.mode_count(), 0)};
  Vector y = vectorize(DensityMatrix::basis(space, vac).matrix());
  DormandPrince dp(liouv.matrix(), settings);
  double t = 0.0, h = 0.0;
  double quiet_since = -1.0;
  const double check = settings.steady_window / 10.0;
  while (t < settings.steady_max_time) {
    dp.advance(y, t, t + check, h);
    const double rate = (liouv.matrix() * y).norm() / y.norm();
    if (rate < settings.steady_rate_tol) {
      if (quiet_since < 0.0) quiet_since = t;
      if (t - quiet_since >= settings.steady_window) {
        return hermitize(space, unvectorize(y, n));
      }
    } else {
      quiet_since = -1.0;
    }
  }
  throw SolverError("steady state: propagation did not converge within steady_max_time");
}

}  // namespace

DensityMatrix steady_state(const Liouvillian& liouvillian, const SolverSettings& settings) {
  const std::size_t n = liouvillian.space().total_dim();
  if (n * n <= settings.direct_solve_limit) return steady_state_direct(liouvillian, settings);
  return steady_state_propagated(liouvillian, settings);
}

void propagate_matrix(const Liouvillian& liouvillian, const DenseMatrix& x0,
                      const std::vector<double>& t_grid,
                      const std::function<void(std::size_t, const Vector&)>& observe,
                      const SolverSettings& settings) {
  const std::size_t n = liouvillian.space().total_dim();
  if (x0.rows() != static_cast<Eigen::Index>(n) || x0.cols() != x0.rows()) {
    throw SpaceMismatch("propagate: initial matrix does not match the Liouvillian");
  }
  if (t_grid.empty()) return;
  if (!std::is_sorted(t_grid.begin(), t_grid.end())) {
    throw ConfigError("propagate: time grid must be non-decreasing");
  }
  Vector y = vectorize(x0);
  const Complex tr0 = vec_trace(y, n);
  const double scale = std::max(1.0, x0.norm());
  DormandPrince dp(liouvillian.matrix(), settings);
  double t = t_grid.front(), h = 0.0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    dp.advance(y, t, t_grid[k], h);
    const double drift = std::abs(vec_trace(y, n) - tr0);
    if (drift > settings.trace_drift_tol * scale) {
      std::ostringstream msg;
      msg << "propagate: trace drift " << drift << " at t = " << t << " exceeds tolerance";
      throw SolverError(msg.str());
    }
    observe(k, y);
  }
}

std::vector<DenseMatrix> propagate_matrix(const Liouvillian& liouvillian, const DenseMatrix& x0,
                                          const std::vector<double>& t_grid,
                                          const SolverSettings& settings) {
  const std::size_t n = liouvillian.space().total_dim();
  std::vector<DenseMatrix> out;
  out.reserve(t_grid.size());
  propagate_matrix(
      liouvillian, x0, t_grid, [&](std::size_t, const Vector& y) { out.push_back(unvectorize(y, n)); },
      settings);
  return out;
}

std::vector<DensityMatrix> propagate(const Liouvillian& liouvillian, const DensityMatrix& rho0,
                                     const std::vector<double>& t_grid,
                                     const SolverSettings& settings) {
  if (!(rho0.space() == liouvillian.space())) throw SpaceMismatch("propagate: space mismatch");
  std::vector<DensityMatrix> out;
  for (auto& m : propagate_matrix(liouvillian, rho0.matrix(), t_grid, settings)) {
    out.emplace_back(rho0.space(), std::move(m));
  }
  return out;
}

Complex expectation(const DensityMatrix& rho, const Operator& op) {
  if (!(rho.space() == op.space())) throw SpaceMismatch("expectation: space mismatch");
  // Tr(rho A) = sum_ij rho_ji A_ij
  Complex acc = 0.0;
  const SparseMatrix& a = op.matrix();
  for (Eigen::Index i = 0; i < a.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) acc += rho.matrix()(it.col(), it.row()) * it.value();
  }
  return acc;
}

Complex expectation(const Vector& psi, const Operator& op) {
  if (psi.size() != static_cast<Eigen::Index>(op.dim())) {
    throw SpaceMismatch("expectation: state dimension mismatch");
  }
  return psi.dot(op.matrix() * psi) / psi.squaredNorm();
}

}  // namespace mmcqed
