#include <random>

#include <doctest.h>

#include "mmcqed/errors.hpp"
#include "mmcqed/spectra.hpp"

using namespace mmcqed;
using units::from_mhz;

namespace {

CorrelationSeries analytic(double kappa, double omega, double t_max, double dt) {
  CorrelationSeries c;
  c.tau = uniform_grid(t_max, dt);
  for (double t : c.tau) c.values.emplace_back(std::cos(omega * t) * std::exp(-0.5 * kappa * t));
  return c;
}

SystemConfig driven_qubit(double rabi_mhz, double gamma_mhz) {
  SystemConfig c;
  c.modes = {{0.0, from_mhz(1.0), 0.0}};
  c.qubit_decay = from_mhz(gamma_mhz);
  c.drive = QubitDrive{from_mhz(rabi_mhz)};
  c.cutoffs = {1};
  return c;
}

}  // namespace

TEST_CASE("exponential correlation gives a Lorentzian of width kappa") {
  const double kappa = from_mhz(1.0);
  const Spectrum s = emission_spectrum(analytic(kappa, 0.0, 12.0, 2e-3));
  const LorentzianFit f = fit_linewidth(s, 0.0, 5.0);
  CHECK(f.fwhm == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(f.center) < 1e-6);
  // Parseval: the integrated psd returns g(0)
  CHECK(s.integral == doctest::Approx(1.0).epsilon(0.02));
  CHECK(s.g0 == doctest::Approx(1.0));
  for (std::size_t k = 1; k < s.frequency.size(); ++k) REQUIRE(s.frequency[k] > s.frequency[k - 1]);
}

TEST_CASE("modulated correlation splits into two lines") {
  const Spectrum s = emission_spectrum(analytic(from_mhz(1.0), from_mhz(20.0), 12.0, 2e-3));
  const auto peaks = spectral_peaks(s, 0.2);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[0] == doctest::Approx(-20.0).epsilon(0.01));
  CHECK(peaks[1] == doctest::Approx(20.0).epsilon(0.01));
  CHECK(fit_linewidth(s, 20.0, 5.0).fwhm == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("damped mode prepared in one photon") {
  SystemConfig c;
  c.modes = {{from_mhz(3.0), from_mhz(1.0), 0.0}};
  c.cutoffs = {2};
  const Liouvillian l = build_liouvillian(c);
  const HilbertSpace space = c.space();
  const Operator a = annihilator(space, 0);
  const DenseMatrix x0 = a.dense() * DensityMatrix::basis(space, {0, {1}}).matrix();
  CorrelationSeries corr;
  corr.tau = uniform_grid(12.0, 2e-3);
  const DenseMatrix ad = a.adjoint().dense();
  propagate_matrix(l, x0, corr.tau, [&](std::size_t, const Vector& v) {
    corr.values.push_back((ad * unvectorize(v, space.total_dim())).trace());
  });
  const Spectrum s = emission_spectrum(corr);
  const LorentzianFit f = fit_linewidth(s, 3.0, 5.0);
  CHECK(f.center == doctest::Approx(3.0).epsilon(1e-4));
  CHECK(f.fwhm == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("vacuum has no emission") {
  SystemConfig c;
  c.modes = {{from_mhz(3.0), from_mhz(1.0), from_mhz(2.0)}};
  c.qubit_decay = from_mhz(1.0);
  c.cutoffs = {2};
  const Liouvillian l = build_liouvillian(c);
  const DensityMatrix rho = steady_state(l);
  const auto tau = uniform_grid(1.0, 0.01);
  const Operator a = annihilator(c.space(), 0);
  for (const Complex& v : correlation_regression(l, rho, a, tau).values) CHECK(std::abs(v) < 1e-12);
  for (const Complex& v : correlation_mcwf(c, a, tau, 20, 3, 1.0).values) CHECK(std::abs(v) < 1e-12);
  const Spectrum dark = emission_spectrum(correlation_regression(l, rho, a, tau));
  for (double p : dark.psd) CHECK(p == 0.0);
  CHECK_THROWS_AS(fit_linewidth(dark, 3.0, 5.0), AnalysisError);
}

TEST_CASE("regression refuses a non-stationary state") {
  const SystemConfig c = driven_qubit(50.0, 1.0);
  const Liouvillian l = build_liouvillian(c);
  const DensityMatrix excited = DensityMatrix::basis(c.space(), {1, {0}});
  CHECK_THROWS(correlation_regression(l, excited, qubit_op(c.space(), QubitOp::SigmaMinus), {0.0, 0.1}));
}

TEST_CASE("Mollow triplet") {
  const SystemConfig c = driven_qubit(50.0, 1.0);
  const Liouvillian l = build_liouvillian(c);
  const DensityMatrix rho = steady_state(l);
  const Operator sm = fluctuation_operator(rho, qubit_op(c.space(), QubitOp::SigmaMinus));
  const Spectrum s = emission_spectrum(correlation_regression(l, rho, sm, uniform_grid(16.0, 2e-3)));
  const auto peaks = spectral_peaks(s);
  REQUIRE(peaks.size() == 3);
  CHECK(std::abs(peaks[0] + 50.0) <= std::max(0.2, s.bin()));
  CHECK(std::abs(peaks[1]) <= s.bin());
  CHECK(std::abs(peaks[2] - 50.0) <= std::max(0.2, s.bin()));
  // strong-drive widths: gamma at the center, 3 gamma / 2 on the sidebands
  CHECK(fit_linewidth(s, 0.0, 5.0).fwhm == doctest::Approx(1.0).epsilon(0.02));
  CHECK(fit_linewidth(s, 50.0, 5.0).fwhm == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("undecayed correlation is rejected") {
  CHECK_THROWS_AS(emission_spectrum(analytic(from_mhz(1.0), 0.0, 0.5, 2e-3)), AnalysisError);
  CorrelationSeries uneven = analytic(from_mhz(1.0), 0.0, 12.0, 2e-3);
  uneven.tau[3] += 1e-4;
  CHECK_THROWS_AS(emission_spectrum(uneven), AnalysisError);
}

TEST_CASE("synthetic Lorentzian with noise") {
  Spectrum s;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int k = -2000; k <= 2000; ++k) {
    const double f = 0.005 * k, x = 2.0 * (f - 0.3) / 1.0;
    s.frequency.push_back(f);
    s.psd.push_back(1.0 / (1.0 + x * x) + noise(rng));
  }
  const LorentzianFit fit = fit_linewidth(s, 0.3, 5.0);
  CHECK(fit.fwhm == doctest::Approx(1.0).epsilon(0.03));
  CHECK(fit.center == doctest::Approx(0.3).epsilon(0.01));
  CHECK(fit.fwhm_error > 0.0);
  CHECK(fit.fwhm_error < 0.03);

  Spectrum flat;
  for (int k = 0; k < 100; ++k) {
    flat.frequency.push_back(k);
    flat.psd.push_back(1.0);
  }
  CHECK_THROWS_AS(fit_linewidth(flat, 50.0, 10.0), AnalysisError);
}

TEST_CASE("rank correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  // ties share their average rank
  CHECK(spearman({1, 2, 2, 3}, {1, 2, 3, 4}) == doctest::Approx(0.9486832981));
  CHECK_THROWS(spearman({1, 2}, {1, 2, 3}));
}
