#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "mmcqed/errors.hpp"
#include "mmcqed/mcwf.hpp"
#include "mmcqed/spectra.hpp"

using namespace mmcqed;

namespace {

SystemConfig driven_qubit(double rabi, double gamma) {
  SystemConfig c;
  c.modes = {{0.0, 1.0, 0.0}};
  c.qubit_decay = gamma;
  c.drive = QubitDrive{rabi};
  c.cutoffs = {1};
  return c;
}

SystemConfig small_cavity() {
  SystemConfig c;
  c.modes = {{1.0, 1.0, 2.0}};
  c.qubit_decay = 1.5;
  c.drive = QubitDrive{3.0};
  c.cutoffs = {4};
  return c;
}

}  // namespace

TEST_CASE("no dissipation means no jumps") {
  const SystemConfig c = small_cavity();
  const HilbertSpace s = c.space();
  const Operator h = build_hamiltonian(c);
  const auto grid = uniform_grid(2.0, 0.05);
  const auto e = mcwf_ensemble(h, {}, ground_state(s), grid, {number(s, 0)}, 3, 9);
  CHECK(e.jumps == 0);

  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.dense());
  const Vector c0 = es.eigenvectors().adjoint() * ground_state(s);
  for (std::size_t k = 0; k < grid.size(); k += 10) {
    Vector phase = c0;
    for (Eigen::Index i = 0; i < phase.size(); ++i) phase(i) *= std::exp(Complex(0.0, -es.eigenvalues()(i) * grid[k]));
    const Vector psi = es.eigenvectors() * phase;
    const double n = expectation(psi, number(s, 0)).real();
    CHECK(e.mean[0][k].real() == doctest::Approx(n).epsilon(1e-9));
    CHECK(e.std_error[0][k] < 1e-12);
  }
}

TEST_CASE("identical seeds give identical ensembles") {
  const SystemConfig c = small_cavity();
  const auto grid = uniform_grid(3.0, 0.05);
  const std::vector<Operator> obs{number(c.space(), 0)};
  McwfSettings one, many;
  one.workers = 1;
  many.workers = 3;
  many.block_size = 8;
  one.block_size = 8;
  const auto a = mcwf_ensemble(c, grid, obs, 40, 123, one);
  const auto b = mcwf_ensemble(c, grid, obs, 40, 123, many);
  const auto d = mcwf_ensemble(c, grid, obs, 40, 124, one);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK(a.jumps == b.jumps);
  CHECK(a.mean != d.mean);
}

TEST_CASE("ensemble matches the master equation") {
  const SystemConfig c = small_cavity();
  const HilbertSpace s = c.space();
  const DensityMatrix rho = steady_state(build_liouvillian(c));
  const std::vector<Operator> obs{number(s, 0), qubit_op(s, QubitOp::SigmaZ)};
  const auto e = mcwf_ensemble(c, uniform_grid(20.0, 0.02), obs, 300, 5, {}, 4.0);
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const double exact = expectation(rho, obs[k]).real();
    CHECK(std::abs(e.time_average[k].real() - exact) < 3.0 * e.time_average_error[k] + 1e-9);
  }
}

TEST_CASE("rk4 fallback agrees with the exact propagator") {
  const SystemConfig c = small_cavity();
  const auto grid = uniform_grid(2.0, 0.05);
  const std::vector<Operator> obs{number(c.space(), 0)};
  McwfSettings rk4;
  rk4.dense_limit = 0;
  const auto a = mcwf_ensemble(c, grid, obs, 20, 77);
  const auto b = mcwf_ensemble(c, grid, obs, 20, 77, rk4);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(std::abs(a.mean[0][k] - b.mean[0][k]) < 1e-3 * (1.0 + std::abs(a.mean[0][k])));
  }
}

TEST_CASE("two-time estimate matches regression") {
  const SystemConfig c = driven_qubit(6.0, 1.0);
  const HilbertSpace s = c.space();
  const Liouvillian l = build_liouvillian(c);
  const DensityMatrix rho = steady_state(l);
  const Operator sm = qubit_op(s, QubitOp::SigmaMinus);
  const auto tau = uniform_grid(2.0, 0.05);
  const auto reg = correlation_regression(l, rho, sm, tau);
  const auto mc = correlation_mcwf(c, sm, tau, 2000, 11, 5.0);
  REQUIRE(mc.std_error.size() == tau.size());
  int outside = 0;
  for (std::size_t k = 0; k < tau.size(); ++k) {
    outside += std::abs(mc.values[k] - reg.values[k]) > 3.0 * mc.std_error[k] + 1e-9;
  }
  // a 3 sigma band may miss a few of 41 correlated points
  CHECK(outside <= 3);
  const auto again = correlation_mcwf(c, sm, tau, 2000, 11, 5.0);
  CHECK(again.values == mc.values);
}

TEST_CASE("grid preconditions") {
  const SystemConfig c = small_cavity();
  CHECK_THROWS(mcwf_ensemble(c, {0.0, 0.1, 0.3}, {number(c.space(), 0)}, 2, 1));
  CHECK_THROWS(mcwf_ensemble(c, {0.5, 0.6}, {number(c.space(), 0)}, 2, 1));
}
