#include <doctest.h>

#include "mmcqed/errors.hpp"
#include "mmcqed/linear.hpp"
#include "mmcqed/model.hpp"

using namespace mmcqed;

namespace {

std::vector<double> range(double start, double stop, double step) {
  std::vector<double> out;
  const auto n = static_cast<int>(std::lround((stop - start) / step));
  for (int i = 0; i <= n; ++i) out.push_back(start + step * i);
  return out;
}

struct Ladder {
  std::vector<double> freqs, couplings;
  std::vector<int> harmonics;
};

Ladder ladder(double g0, int first, int count, double fsr) {
  Ladder l;
  for (int i = 0; i < count; ++i) {
    l.harmonics.push_back(first + i);
    l.freqs.push_back(fsr * i);
    l.couplings.push_back(coupling_strength(g0, first + i));
  }
  return l;
}

PeakData eigen_peaks(const Ladder& l, const std::vector<double>& qubit) {
  PeakData d;
  for (double q : qubit) {
    d.qubit_freqs.push_back(q);
    d.peaks.push_back(first_manifold(l.couplings, l.freqs, q).eigenvalues);
  }
  return d;
}

std::vector<LinearMode> linear_modes(const Ladder& l, double kappa) {
  std::vector<LinearMode> out;
  for (std::size_t i = 0; i < l.freqs.size(); ++i) out.push_back({l.freqs[i], kappa, l.couplings[i]});
  return out;
}

}  // namespace

TEST_CASE("first manifold") {
  const ManifoldEigen single = first_manifold({2.5}, {10.0}, 10.0);
  CHECK(single.eigenvalues[1] - single.eigenvalues[0] == doctest::Approx(5.0));
  CHECK(single.weights.col(0).sum() == doctest::Approx(1.0));

  const ManifoldEigen bare = first_manifold({0.0, 0.0}, {1.0, 3.0}, 2.0);
  CHECK(bare.eigenvalues == std::vector<double>{1.0, 2.0, 3.0});

  // resonant pair with the other modes 92 MHz away
  const Ladder l = ladder(3.75, 0, 3, 92.0);
  for (int m = 0; m < 3; ++m) {
    const auto e = first_manifold(l.couplings, l.freqs, l.freqs[m]).eigenvalues;
    double below = -1e9, above = 1e9;
    for (double v : e) {
      if (v <= l.freqs[m]) below = std::max(below, v);
      if (v > l.freqs[m]) above = std::min(above, v);
    }
    CHECK(above - below == doctest::Approx(2.0 * l.couplings[m]).epsilon(0.01));
  }
}

TEST_CASE("chained avoided crossings without a dispersive plateau") {
  const Ladder l = ladder(3.75, 74, 3, 92.0);
  const auto sweep = manifold_sweep(l.couplings, l.freqs, range(-46.0, 230.0, 0.5));
  double min_gap = 1e9;
  for (const auto& e : sweep.eigenvalues) {
    for (std::size_t k = 1; k < e.size(); ++k) min_gap = std::min(min_gap, e[k] - e[k - 1]);
  }
  CHECK(min_gap > 10.0);
  for (std::size_t p = 1; p < sweep.eigenvalues.size(); ++p) {
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(sweep.eigenvalues[p][k] - sweep.eigenvalues[p - 1][k]) < 0.5);
  }
  // midway between modes the qubit stays strongly hybridized
  const ManifoldEigen mid = first_manifold(l.couplings, l.freqs, 46.0);
  double max_qubit = 0.0;
  for (Eigen::Index k = 0; k < mid.weights.cols(); ++k) max_qubit = std::max(max_qubit, mid.weights(0, k));
  CHECK(max_qubit < 0.9);
}

TEST_CASE("transmission of decoupled modes") {
  const Ladder l = ladder(0.0, 0, 2, 92.0);
  const auto probe = range(-5.0, 5.0, 0.001);
  const auto t = weak_probe_transmission(linear_modes(l, 1.0), 40.0, 1.0, probe);
  double peak = 0.0;
  std::vector<double> above_half;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double p = std::norm(t[i]);
    peak = std::max(peak, p);
    if (p >= 0.5) above_half.push_back(probe[i]);
  }
  CHECK(peak == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(above_half.back() - above_half.front() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("vacuum Rabi doublet in transmission") {
  const Ladder l = ladder(3.75, 0, 1, 92.0);
  TransmissionMap map = transmission_map(linear_modes(l, 1.0), {0.0}, 1.0, range(-10.0, 10.0, 0.01));
  const PeakData peaks = extract_peaks(map, 0.05);
  REQUIRE(peaks.peaks[0].size() == 2);
  CHECK(peaks.peaks[0][1] - peaks.peaks[0][0] == doctest::Approx(7.5).epsilon(0.01));
}

TEST_CASE("bright lines at every mode away from the qubit") {
  const Ladder l = ladder(3.75, 0, 3, 92.0);
  const auto map = transmission_map(linear_modes(l, 1.0), {-46.0, 46.0, 138.0}, 1.0, range(-40.0, 224.0, 0.1));
  const PeakData peaks = extract_peaks(map, 0.3);
  for (const auto& row : peaks.peaks) {
    REQUIRE(row.size() == 3);
    for (int m = 0; m < 3; ++m) CHECK(std::abs(row[m] - 92.0 * m) < 1.5);
  }
}

TEST_CASE("g0 round trip") {
  SUBCASE("noiseless single crossing") {
    const Ladder l = ladder(3.75, 0, 1, 92.0);
    const G0Fit fit = fit_g0(eigen_peaks(l, range(-20.0, 20.0, 1.0)), l.freqs, l.harmonics, 2.0);
    CHECK(fit.g0 == doctest::Approx(3.75).epsilon(1e-8));
  }
  SUBCASE("harmonics near 75") {
    const Ladder l = ladder(3.75, 74, 3, 92.0);
    const G0Fit fit = fit_g0(eigen_peaks(l, range(-46.0, 230.0, 1.0)), l.freqs, l.harmonics, 3.0);
    CHECK(fit.g0 == doctest::Approx(3.75).epsilon(1e-6));
    CHECK(units::to_mhz(coupling_strength(units::from_mhz(fit.g0), 75)) == doctest::Approx(32.69).epsilon(1e-3));
  }
  SUBCASE("from a transmission map") {
    const Ladder l = ladder(3.75, 74, 3, 92.0);
    const auto map = transmission_map(linear_modes(l, 1.0), range(-46.0, 230.0, 1.0), 1.0, range(-80.0, 270.0, 0.1));
    const G0Fit fit = fit_g0(extract_peaks(map, 0.05), l.freqs, l.harmonics, 3.0);
    CHECK(fit.g0 == doctest::Approx(3.75).epsilon(0.01));
  }
  SUBCASE("underdetermined data") {
    const Ladder l = ladder(3.75, 0, 1, 92.0);
    CHECK_THROWS_AS(fit_g0(eigen_peaks(l, range(30.0, 40.0, 1.0)), l.freqs, l.harmonics, 3.0), AnalysisError);
    PeakData one;
    one.qubit_freqs = {0.0};
    one.peaks = {{3.0}};
    CHECK_THROWS_AS(fit_g0(one, l.freqs, l.harmonics, 3.0), AnalysisError);
  }
}
