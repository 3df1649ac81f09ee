#include <doctest.h>

#include "mmcqed/dynamics.hpp"
#include "mmcqed/errors.hpp"
#include "mmcqed/mcwf.hpp"

using namespace mmcqed;
using units::from_mhz;

namespace {

SystemConfig driven_qubit(double rabi, double gamma) {
  SystemConfig c;
  c.modes = {{0.0, 1.0, 0.0}};  // decoupled spectator mode
  c.qubit_decay = gamma;
  c.drive = QubitDrive{rabi};
  c.cutoffs = {1};
  return c;
}

SystemConfig symmetric_pair(double rabi, int cutoff) {
  SystemConfig c;
  c.modes = {{from_mhz(100), from_mhz(1), from_mhz(15)}, {from_mhz(-100), from_mhz(1), from_mhz(15)}};
  c.qubit_decay = from_mhz(15);
  c.drive = QubitDrive{from_mhz(rabi)};
  c.cutoffs = {cutoff, cutoff};
  return c;
}

}  // namespace

TEST_CASE("vectorization is column stacked") {
  DenseMatrix m(2, 2);
  m << 1.0, 2.0, 3.0, 4.0;
  const Vector v = vectorize(m);
  CHECK(v(1) == Complex(3.0));
  CHECK(v(2) == Complex(2.0));
  CHECK((unvectorize(v, 2) - m).norm() == 0.0);
}

TEST_CASE("density matrix basics") {
  const HilbertSpace s({2, 1});
  const DensityMatrix g = DensityMatrix::basis(s, {0, {0, 0}});
  CHECK(expectation(g, identity(s)).real() == doctest::Approx(1.0));
  CHECK(expectation(g, qubit_op(s, QubitOp::SigmaZ)).real() == doctest::Approx(-1.0));
  CHECK_NOTHROW(g.check_valid());
  DenseMatrix bad = g.matrix();
  bad(0, 0) = 2.0;
  CHECK_THROWS_AS(DensityMatrix(s, bad).check_valid(), SolverError);
}

TEST_CASE("Liouvillian preserves trace") {
  const SystemConfig c = symmetric_pair(106, 2);
  const Liouvillian l = build_liouvillian(c);
  const auto n = static_cast<Eigen::Index>(c.space().total_dim());
  const DenseMatrix mixed = DenseMatrix::Identity(n, n) / static_cast<double>(n);
  CHECK(std::abs(l.apply(mixed).trace()) < 1e-12);
}

TEST_CASE("damped cavity and decaying qubit") {
  const HilbertSpace s({3});
  const double kappa = 0.7, gamma = 1.3;
  const Operator zero = Operator(s, DenseMatrix::Zero(8, 8));
  const std::vector<double> t{0.0, 0.5, 1.0, 2.0};

  const Liouvillian cavity(zero, {Complex(std::sqrt(kappa)) * annihilator(s, 0)});
  for (int n0 : {1, 2}) {
    const auto rho = propagate(cavity, DensityMatrix::basis(s, {0, {n0}}), t);
    for (std::size_t k = 0; k < t.size(); ++k) {
      CHECK(expectation(rho[k], number(s, 0)).real() == doctest::Approx(n0 * std::exp(-kappa * t[k])).epsilon(1e-7));
    }
  }

  const Liouvillian qubit(zero, {Complex(std::sqrt(gamma)) * qubit_op(s, QubitOp::SigmaMinus)});
  const auto rho = propagate(qubit, DensityMatrix::basis(s, {1, {0}}), t);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double sz = expectation(rho[k], qubit_op(s, QubitOp::SigmaZ)).real();
    CHECK(sz == doctest::Approx(2.0 * std::exp(-gamma * t[k]) - 1.0).epsilon(1e-7));
  }

  const Liouvillian frozen(zero, {});
  const DensityMatrix start = DensityMatrix::basis(s, {1, {2}});
  CHECK((propagate(frozen, start, t).back().matrix() - start.matrix()).norm() < 1e-14);
}

TEST_CASE("dark steady state without drive") {
  SystemConfig c = symmetric_pair(0.0, 2);
  const DensityMatrix rho = steady_state(build_liouvillian(c));
  CHECK(trace_distance(rho, DensityMatrix::basis(c.space(), {0, {0, 0}})) < 1e-10);
}

TEST_CASE("driven two-level steady state") {
  const double rabi = 2.0, gamma = 1.5;
  const SystemConfig c = driven_qubit(rabi, gamma);
  const Liouvillian l = build_liouvillian(c);
  const DensityMatrix rho = steady_state(l);
  const Operator sp = qubit_op(c.space(), QubitOp::SigmaPlus), sm = qubit_op(c.space(), QubitOp::SigmaMinus);
  const double expected = (rabi * rabi / 4) / (rabi * rabi / 2 + gamma * gamma / 4);
  CHECK(expectation(rho, sp * sm).real() == doctest::Approx(expected).epsilon(1e-9));

  const auto late = propagate(l, DensityMatrix::basis(c.space(), {0, {0}}), {0.0, 40.0});
  CHECK(trace_distance(late.back(), rho) < 1e-7);
}

TEST_CASE("long-time propagation reaches the kernel solution") {
  SystemConfig c;
  c.modes = {{from_mhz(3), from_mhz(1), from_mhz(2)}};
  c.qubit_decay = from_mhz(1.5);
  c.drive = QubitDrive{from_mhz(4)};
  c.cutoffs = {4};
  const Liouvillian l = build_liouvillian(c);
  const DensityMatrix rho = steady_state(l);
  const auto late = propagate(l, DensityMatrix::basis(c.space(), {0, {0}}), {0.0, 5.0, 10.0});
  CHECK(trace_distance(late.back(), rho) < 1e-7);
}

TEST_CASE("symmetric pair has equal mode populations") {
  const SystemConfig c = symmetric_pair(106, 4);
  const DensityMatrix rho = steady_state(build_liouvillian(c));
  const double n1 = expectation(rho, number(c.space(), 0)).real();
  const double n2 = expectation(rho, number(c.space(), 1)).real();
  CHECK(n1 > 0.5);
  CHECK(std::abs(n1 - n2) / n1 < 1e-9);
}

TEST_CASE("degenerate kernel is reported") {
  const HilbertSpace s({1});
  const Liouvillian closed(Complex(0.3) * number(s, 0), {});
  CHECK_THROWS_AS(steady_state(closed), NonUniqueSteadyState);
}

TEST_CASE("streaming and stored propagation agree") {
  const SystemConfig c = symmetric_pair(106, 2);
  const Liouvillian l = build_liouvillian(c);
  const DenseMatrix x0 = DensityMatrix::basis(c.space(), {1, {1, 0}}).matrix();
  const std::vector<double> t{0.0, 0.1, 0.2};
  const auto stored = propagate_matrix(l, x0, t);
  std::vector<Vector> streamed;
  propagate_matrix(l, x0, t, [&](std::size_t, const Vector& v) { streamed.push_back(v); });
  REQUIRE(streamed.size() == t.size());
  for (std::size_t k = 0; k < t.size(); ++k) CHECK((vectorize(stored[k]) - streamed[k]).norm() == 0.0);
}
