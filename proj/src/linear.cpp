#include "mmcqed/linear.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "mmcqed/errors.hpp"
#include "mmcqed/model.hpp"

namespace mmcqed {

ManifoldEigen first_manifold(const std::vector<double>& couplings, const std::vector<double>& mode_freqs,
                             double qubit_freq) {
  if (mode_freqs.empty()) throw ConfigError("first_manifold: at least one mode is required");
  if (couplings.size() != mode_freqs.size()) {
    throw ConfigError("first_manifold: couplings and mode frequencies differ in length");
  }
  const auto m = static_cast<Eigen::Index>(mode_freqs.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m + 1);
  h(0, 0) = qubit_freq;
  for (Eigen::Index k = 0; k < m; ++k) {
    h(k + 1, k + 1) = mode_freqs[static_cast<std::size_t>(k)];
    h(0, k + 1) = h(k + 1, 0) = couplings[static_cast<std::size_t>(k)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  ManifoldEigen out;
  out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + m + 1);
  out.weights = es.eigenvectors().cwiseAbs2();
  return out;
}

ManifoldSpectrum manifold_sweep(const std::vector<double>& couplings, const std::vector<double>& mode_freqs,
                                const std::vector<double>& qubit_freqs) {
  ManifoldSpectrum out;
  out.qubit_freqs = qubit_freqs;
  for (double wq : qubit_freqs) {
    auto e = first_manifold(couplings, mode_freqs, wq);
    out.eigenvalues.push_back(std::move(e.eigenvalues));
    out.weights.push_back(std::move(e.weights));
  }
  return out;
}

std::vector<Complex> weak_probe_transmission(const std::vector<LinearMode>& modes, double qubit_freq,
                                             double qubit_decay, const std::vector<double>& probe) {
  if (modes.empty()) throw ConfigError("transmission: at least one mode is required");
  if (qubit_decay < 0.0) throw ConfigError("transmission: qubit decay must be >= 0");
  const auto m = static_cast<Eigen::Index>(modes.size());
  DenseMatrix h = DenseMatrix::Zero(m + 1, m + 1);
  h(0, 0) = Complex(qubit_freq, -0.5 * qubit_decay);
  Vector in = Vector::Zero(m + 1), out = Vector::Zero(m + 1);
  for (Eigen::Index k = 0; k < m; ++k) {
    const LinearMode& md = modes[static_cast<std::size_t>(k)];
    if (!(md.decay > 0.0)) throw ConfigError("transmission: mode decay must be > 0");
    h(k + 1, k + 1) = Complex(md.frequency, -0.5 * md.decay);
    h(0, k + 1) = h(k + 1, 0) = md.coupling;
    const double kin = md.kappa_in < 0.0 ? 0.5 * md.decay : md.kappa_in;
    const double kout = md.kappa_out < 0.0 ? 0.5 * md.decay : md.kappa_out;
    in(k + 1) = std::sqrt(kin);
    out(k + 1) = (k % 2 == 0 ? 1.0 : -1.0) * std::sqrt(kout);
  }
  std::vector<Complex> t;
  t.reserve(probe.size());
  const DenseMatrix id = DenseMatrix::Identity(m + 1, m + 1);
  for (double w : probe) {
    const Vector x = (w * id - h).partialPivLu().solve(in);
    t.push_back(Complex(0.0, -1.0) * out.transpose() * x);
  }
  return t;
}

TransmissionMap transmission_map(const std::vector<LinearMode>& modes, const std::vector<double>& qubit_freqs,
                                 double qubit_decay, const std::vector<double>& probe) {
  TransmissionMap map;
  map.probe = probe;
  map.qubit_freqs = qubit_freqs;
  for (double wq : qubit_freqs) map.t.push_back(weak_probe_transmission(modes, wq, qubit_decay, probe));
  return map;
}

PeakData extract_peaks(const TransmissionMap& map, double min_height) {
  PeakData data;
  data.qubit_freqs = map.qubit_freqs;
  for (const auto& row : map.t) {
    std::vector<double> peaks;
    for (std::size_t i = 1; i + 1 < row.size(); ++i) {
      const double y0 = std::abs(row[i - 1]), y1 = std::abs(row[i]), y2 = std::abs(row[i + 1]);
      if (!(y1 > y0 && y1 >= y2 && y1 >= min_height)) continue;
      const double denom = y0 - 2.0 * y1 + y2;
      const double shift = denom != 0.0 ? 0.5 * (y0 - y2) / denom : 0.0;
      const double step = map.probe[i + 1] - map.probe[i];
      peaks.push_back(map.probe[i] + shift * step);
    }
    data.peaks.push_back(std::move(peaks));
  }
  return data;
}

namespace {

struct PeakResidual {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const std::vector<std::pair<double, double>>* points;  // (qubit, peak)
  const std::vector<double>* modes;
  const std::vector<int>* harmonics;

  int inputs() const { return 1; }
  int values() const { return static_cast<int>(points->size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    const auto g = couplings(p(0), *harmonics);
    Eigen::Index r = 0;
    for (const auto& [qubit, peak] : *points) {
      const auto e = first_manifold(g, *modes, qubit).eigenvalues;
      f(r++) = peak - e[nearest(e, peak)];
    }
    return 0;
  }

  static std::vector<double> couplings(double g0, const std::vector<int>& harmonics) {
    std::vector<double> g;
    for (int h : harmonics) g.push_back(std::abs(g0) * std::sqrt(h + 1.0));
    return g;
  }

  static std::size_t nearest(const std::vector<double>& e, double x) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < e.size(); ++k) {
      if (std::abs(e[k] - x) < std::abs(e[best] - x)) best = k;
    }
    return best;
  }
};

// Peaks whose matched eigenstate is mostly photonic at the given g0.
std::vector<std::pair<double, double>> photonic_peaks(const PeakData& data, const std::vector<double>& modes,
                                                      const std::vector<int>& harmonics, double g0,
                                                      double max_qubit_weight) {
  const auto g = PeakResidual::couplings(g0, harmonics);
  std::vector<std::pair<double, double>> out;
  for (std::size_t q = 0; q < data.qubit_freqs.size(); ++q) {
    const ManifoldEigen m = first_manifold(g, modes, data.qubit_freqs[q]);
    for (double peak : data.peaks[q]) {
      const std::size_t k = PeakResidual::nearest(m.eigenvalues, peak);
      if (m.weights(0, static_cast<Eigen::Index>(k)) <= max_qubit_weight) out.emplace_back(data.qubit_freqs[q], peak);
    }
  }
  return out;
}

}  // namespace

G0Fit fit_g0(const PeakData& data, const std::vector<double>& mode_freqs, const std::vector<int>& harmonics,
             double g0_guess, double max_qubit_weight) {
  if (harmonics.size() != mode_freqs.size()) throw ConfigError("fit_g0: one harmonic index per mode");
  if (data.peaks.size() != data.qubit_freqs.size()) throw AnalysisError("fit_g0: malformed peak data");
  for (int h : harmonics) {
    if (h < 0) throw ConfigError("fit_g0: harmonic indices must be >= 0");
  }
  int count = 0;
  for (const auto& p : data.peaks) count += static_cast<int>(p.size());
  if (count < 2 || data.qubit_freqs.empty()) throw AnalysisError("fit_g0: underdetermined, fewer than two peaks");
  const auto [lo, hi] = std::minmax_element(data.qubit_freqs.begin(), data.qubit_freqs.end());
  const bool spans = std::any_of(mode_freqs.begin(), mode_freqs.end(),
                                 [&](double w) { return *lo <= w && w <= *hi; });
  if (!spans) throw AnalysisError("fit_g0: underdetermined, the qubit sweep crosses no mode");

  G0Fit fit;
  double g0 = g0_guess;
  std::vector<std::pair<double, double>> points;
  // reselect the photonic peaks at the refined g0 until the selection settles
  for (int pass = 0; pass < 5; ++pass) {
    auto selected = photonic_peaks(data, mode_freqs, harmonics, g0, max_qubit_weight);
    if (pass > 0 && selected == points) break;
    points = std::move(selected);
    if (points.size() < 2) throw AnalysisError("fit_g0: underdetermined, fewer than two photonic peaks");
    PeakResidual fn{&points, &mode_freqs, &harmonics};
    Eigen::NumericalDiff<PeakResidual, Eigen::Central> nd(fn);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<PeakResidual, Eigen::Central>> lm(nd);
    Eigen::VectorXd p(1);
    p(0) = g0;
    lm.minimize(p);
    if (!p.allFinite()) throw AnalysisError("fit_g0: fit diverged");
    g0 = std::abs(p(0));

    const auto n = static_cast<Eigen::Index>(points.size());
    fit.g0 = g0;
    fit.points = static_cast<int>(n);
    Eigen::VectorXd f(n);
    fn(p, f);
    fit.residual_norm = f.norm();
    Eigen::MatrixXd j(n, 1);
    nd.df(p, j);
    const double jtj = j.squaredNorm();
    const double dof = std::max<double>(1.0, static_cast<double>(n - 1));
    fit.g0_error = jtj > 0.0 ? std::sqrt(f.squaredNorm() / dof / jtj) : 0.0;
  }
  return fit;
}

}  // namespace mmcqed
