#include <algorithm>

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "mmcqed/dynamics.hpp"
#include "mmcqed/errors.hpp"
#include "mmcqed/mcwf.hpp"
#include "mmcqed/model.hpp"

using namespace mmcqed;
using units::from_mhz;

namespace {

std::vector<double> spectrum(const Operator& h) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.dense());
  const Eigen::VectorXd e = es.eigenvalues();
  return {e.data(), e.data() + e.size()};
}

SystemConfig pair(double delta, double g, double rabi, int cutoff) {
  SystemConfig c;
  c.modes = {{from_mhz(delta), from_mhz(1.0), from_mhz(g)}, {from_mhz(-delta), from_mhz(1.0), from_mhz(g)}};
  c.qubit_decay = from_mhz(15.0);
  c.drive = QubitDrive{from_mhz(rabi)};
  c.cutoffs = {cutoff, cutoff};
  return c;
}

SystemConfig cavity_driven(double eta, double g) {
  SystemConfig c;
  c.modes = {{0.0, from_mhz(1.0), from_mhz(g)}};
  c.qubit_decay = from_mhz(1.0);
  c.drive = CavityDrive{0, from_mhz(eta)};
  c.cutoffs = {6};
  c.frame = Frame::RotatingCavityDrive;
  return c;
}

}  // namespace

TEST_CASE("coupling ladder") {
  CHECK(units::to_mhz(coupling_strength(from_mhz(3.75), 75)) == doctest::Approx(32.69).epsilon(1e-3));
  CHECK(coupling_strength(1.7, 0) == 1.7);
  CHECK(coupling_strength(from_mhz(1.0), 3) == doctest::Approx(from_mhz(2.0)));
  const auto ladder = coupling_ladder(2.0, 1, 3);
  REQUIRE(ladder.size() == 3);
  CHECK(ladder[2] == doctest::Approx(4.0));
}

TEST_CASE("uncoupled Hamiltonian is diagonal") {
  SystemConfig c;
  c.modes = {{1.3, 0.1, 0.0}, {-0.4, 0.1, 0.0}};
  c.qubit_detuning = 0.8;
  c.cutoffs = {2, 3};
  const Operator h = build_hamiltonian(c);
  const HilbertSpace s = c.space();
  std::vector<double> expected;
  for (std::size_t i = 0; i < s.total_dim(); ++i) {
    const BasisState b = s.state(i);
    expected.push_back(1.3 * b.photons[0] - 0.4 * b.photons[1] + (b.qubit ? 0.4 : -0.4));
  }
  std::sort(expected.begin(), expected.end());
  const auto e = spectrum(h);
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(e[i] == doctest::Approx(expected[i]));
}

TEST_CASE("vacuum Rabi doublet") {
  SystemConfig c;
  c.modes = {{0.0, 0.1, 2.5}};
  c.cutoffs = {4};
  const auto e = spectrum(build_hamiltonian(c));
  int found = 0;
  for (double v : e) found += std::abs(std::abs(v) - 2.5) < 1e-12;
  CHECK(found == 2);
  CHECK(build_hamiltonian(pair(100, 15, 106, 3)).hermiticity_error() == 0.0);
}

TEST_CASE("invalid configs name the field") {
  SystemConfig c = pair(100, 15, 106, 3);
  c.modes[1].decay = 0.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("modes[1].decay"), ConfigError);
  c = pair(100, 15, 106, 3);
  c.cutoffs = {3};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = pair(100, 15, 106, 3);
  c.frame = Frame::RotatingCavityDrive;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("displacement operator") {
  const HilbertSpace s({10});
  CHECK((displacement_operator(s, 0, 0.0) - identity(s)).norm() < 1e-15);
  const Operator d = displacement_operator(s, 0, 0.5);
  CHECK((d.adjoint() * d - identity(s)).norm() < 1e-10);
  // coherent state |0.5>: Poisson weights e^{-x^2} x^{2n} / n!
  double series = 0.0, term = std::exp(-0.25);
  for (int n = 1; n <= 30; ++n) {
    term *= 0.25 / n;
    series += n * term;
  }
  const Vector psi = d.apply(ground_state(s));
  const double n = expectation(psi, number(s, 0)).real();
  CHECK(series == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(n == doctest::Approx(series).epsilon(1e-8));
}

TEST_CASE("cavity drive moves onto the qubit") {
  CHECK(equivalent_qubit_drive(cavity_driven(0.0, 15.0)).rabi == 0.0);
  CHECK(equivalent_qubit_drive(cavity_driven(0.05, 0.0)).rabi == doctest::Approx(0.0));

  const SystemConfig cav = cavity_driven(0.05, 15.0);
  const QubitDriveEquivalence eq = equivalent_qubit_drive(cav);
  CHECK(eq.xi == doctest::Approx(0.1));
  CHECK(eq.prefactor == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(eq.residual_mode_drive < 1e-12);

  const double sz_cav =
      expectation(steady_state(build_liouvillian(cav)), qubit_op(cav.space(), QubitOp::SigmaZ)).real();
  const double sz_qubit =
      expectation(steady_state(build_liouvillian(eq.config)), qubit_op(eq.config.space(), QubitOp::SigmaZ)).real();
  CHECK(std::abs(sz_cav - sz_qubit) < 1e-6);

  SystemConfig detuned = cav;
  detuned.modes[0].detuning = 1.0;
  CHECK_THROWS_AS(equivalent_qubit_drive(detuned), ConfigError);
}

TEST_CASE("polaron frame") {
  SUBCASE("zero coupling is a pure basis rotation") {
    const SystemConfig c = pair(100, 0, 80, 3);
    const Operator r = rotated_qubit_basis(c.space());
    CHECK((polaron_hamiltonian(c) - r.adjoint() * build_hamiltonian(c) * r).norm() < 1e-10);
  }
  SUBCASE("spectrum is preserved") {
    const SystemConfig c = pair(100, 15, 106, 8);
    const auto a = spectrum(build_hamiltonian(c)), b = spectrum(polaron_hamiltonian(c));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    CHECK(worst < 1e-6 * from_mhz(100));
  }
  SUBCASE("mirror symmetric pair") {
    SystemConfig c = pair(100, 15, 106, 4), mirrored = c;
    std::swap(mirrored.modes[0], mirrored.modes[1]);
    const auto a = spectrum(build_hamiltonian(c)), b = spectrum(build_hamiltonian(mirrored));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
  SUBCASE("collapse operators follow the frame") {
    SystemConfig c = pair(100, 15, 106, 4);
    c.frame = Frame::Polaron;
    CHECK(frame_collapse_operators(c).size() == 3);
    c.frame = Frame::Effective;
    CHECK_THROWS_AS(frame_collapse_operators(c), ConfigError);
  }
}

TEST_CASE("effective Hamiltonians") {
  CHECK(units::to_mhz(effective_vertex(from_mhz(15), from_mhz(100), 2)) == doctest::Approx(1.125));
  CHECK(effective_vertex(3.0, 1.0, 1) == 1.5);
  CHECK_THROWS_AS(effective_vertex(1.0, 1.0, 3), ConfigError);

  const SystemConfig free = pair(100, 0, 106, 3);
  for (int order : {1, 2}) {
    const DenseMatrix h = effective_hamiltonian(free, order).dense();
    CHECK((h - DenseMatrix(h.diagonal().asDiagonal())).norm() == 0.0);
  }

  // Resonant first-order states built on |0~,0,0> and |1~,0,1>: the exact
  // Hamiltonian in the rotated basis against the order-1 model, g / D = 0.05.
  const double ratio = 0.05;
  const SystemConfig c = pair(100, 5, 100, 2);
  const HilbertSpace s = c.space();
  const Operator r = rotated_qubit_basis(s);
  const auto a = static_cast<Eigen::Index>(s.index({0, {0, 0}}));
  const auto b = static_cast<Eigen::Index>(s.index({1, {0, 1}}));
  auto doublet = [&](const DenseMatrix& h) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h);
    std::vector<double> out;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
      const double w = std::norm(es.eigenvectors()(a, k)) + std::norm(es.eigenvectors()(b, k));
      if (w > 0.5) out.push_back(es.eigenvalues()(k));
    }
    return out;
  };
  const auto exact = doublet((r.adjoint() * build_hamiltonian(c) * r).dense());
  const auto eff = doublet(effective_hamiltonian(c, 1).dense());
  REQUIRE(exact.size() == 2);
  REQUIRE(eff.size() == 2);
  const double scale = 0.5 * from_mhz(100);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(exact[k] - eff[k]) / scale < ratio * ratio);
  }
}
