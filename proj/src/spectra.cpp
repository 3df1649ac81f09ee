#include "mmcqed/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/NonLinearOptimization>

#include "mmcqed/errors.hpp"

namespace mmcqed {

std::string to_string(CorrelationMethod method) {
  return method == CorrelationMethod::Regression ? "regression" : "mcwf_two_step";
}

Operator fluctuation_operator(const DensityMatrix& rho, const Operator& a) {
  return a - expectation(rho, a) * identity(a.space());
}

CorrelationSeries correlation_regression(const Liouvillian& liouvillian, const DensityMatrix& rho_ss,
                                         const Operator& a, const std::vector<double>& tau_grid,
                                         const SolverSettings& settings) {
  if (!(rho_ss.space() == liouvillian.space()) || !(a.space() == liouvillian.space())) {
    throw SpaceMismatch("correlation_regression: space mismatch");
  }
  const double resid = liouvillian.apply(vectorize(rho_ss.matrix())).norm();
  const double bound = settings.stationarity_tol * liouvillian.norm() * rho_ss.matrix().norm();
  if (!(resid <= bound)) {
    std::ostringstream msg;
    msg << "correlation_regression: input is not stationary (||L rho|| = " << resid << " > " << bound << ")";
    throw SolverError(msg.str());
  }
  const Vector a_vec = vectorize(a.dense());
  const DenseMatrix x0 = a.matrix() * rho_ss.matrix();
  CorrelationSeries out;
  out.tau = tau_grid;
  out.values.resize(tau_grid.size());
  // Tr(A^dag X) = <vec A, vec X>
  propagate_matrix(
      liouvillian, x0, tau_grid, [&](std::size_t k, const Vector& y) { out.values[k] = a_vec.dot(y); },
      settings);
  return out;
}

CorrelationSeries correlation_mcwf(const SystemConfig& config, const Operator& a,
                                   const std::vector<double>& tau_grid, std::size_t n_walks,
                                   std::uint64_t base_seed, double settle_time,
                                   const McwfSettings& settings, int starts_per_walk,
                                   double restart_interval) {
  config.validate();
  const auto est = mcwf_two_time(frame_hamiltonian(config), frame_collapse_operators(config),
                                 ground_state(config.space()), settle_time, a, a.adjoint(), tau_grid,
                                 n_walks, base_seed, settings, starts_per_walk, restart_interval);
  CorrelationSeries out;
  out.tau = est.tau;
  out.values = est.mean;
  out.std_error = est.std_error;
  out.method = CorrelationMethod::McwfTwoStep;
  return out;
}

Spectrum emission_spectrum(const CorrelationSeries& corr, const SpectrumSettings& settings) {
  const std::size_t n = corr.tau.size();
  if (n < 2 || corr.values.size() != n) throw AnalysisError("emission_spectrum: need at least two samples");
  const double dt = corr.tau[1] - corr.tau[0];
  if (!(dt > 0.0)) throw AnalysisError("emission_spectrum: tau grid must be increasing");
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(corr.tau[k] - corr.tau[0] - static_cast<double>(k) * dt) > 1e-9 * std::max(1.0, corr.tau.back())) {
      throw AnalysisError("emission_spectrum: tau grid is not uniform");
    }
  }
  if (corr.tau[0] != 0.0) throw AnalysisError("emission_spectrum: tau grid must start at 0");
  const double g0 = std::abs(corr.values[0]);
  if (g0 > 0.0) {
    const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(settings.tail_fraction * n));
    double worst = 0.0;
    for (std::size_t k = n - tail; k < n; ++k) worst = std::max(worst, std::abs(corr.values[k]));
    if (worst > settings.decay_tol * g0) {
      std::ostringstream msg;
      msg << "emission_spectrum: correlation has only decayed to " << worst / g0
          << " of g(0) at the end of the window; extend the tau window";
      throw AnalysisError(msg.str());
    }
  }
  std::size_t size = 1;
  while (size < n * static_cast<std::size_t>(std::max(1, settings.pad_factor))) size <<= 1;
  std::vector<Complex> in(size, Complex{}), out;
  for (std::size_t k = 0; k < n; ++k) in[k] = corr.values[k] * dt;
  in[0] *= 0.5;
  in[n - 1] *= 0.5;
  Eigen::FFT<double> fft;
  fft.fwd(out, in);

  Spectrum s;
  s.frequency.resize(size);
  s.psd.resize(size);
  const double df = 1.0 / (static_cast<double>(size) * dt);
  const std::size_t half = size / 2;
  for (std::size_t j = 0; j < size; ++j) {
    // ascending: bins half..size-1 are negative frequencies
    const std::size_t src = (j + half) % size;
    const double f = src < half ? static_cast<double>(src) * df
                                : (static_cast<double>(src) - static_cast<double>(size)) * df;
    s.frequency[j] = f;
    s.psd[j] = 2.0 * out[src].real();
  }
  s.g0 = corr.values[0].real();
  s.imaginary_residual = g0 > 0.0 ? std::abs(corr.values[0].imag()) / g0 : 0.0;
  s.integral = std::accumulate(s.psd.begin(), s.psd.end(), 0.0) * df;
  return s;
}

namespace {

struct LorentzResidual {
  const std::vector<double>& x;
  const std::vector<double>& y;
  int inputs() const { return 4; }
  int values() const { return static_cast<int>(x.size()); }
  static double shape(double dx, double w) {
    const double hw2 = 0.25 * w * w;
    return hw2 / (dx * dx + hw2);
  }
  // p = (center, fwhm, amplitude, baseline)
  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      f(static_cast<Eigen::Index>(i)) = p(2) * shape(x[i] - p(0), p(1)) + p(3) - y[i];
    }
    return 0;
  }
  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double dx = x[i] - p(0), hw2 = 0.25 * p(1) * p(1), den = dx * dx + hw2;
      const double l = hw2 / den;
      j(r, 0) = p(2) * 2.0 * dx * hw2 / (den * den);
      j(r, 1) = p(2) * 0.5 * p(1) * dx * dx / (den * den);
      j(r, 2) = l;
      j(r, 3) = 1.0;
    }
    return 0;
  }
};

}  // namespace

LorentzianFit fit_linewidth(const Spectrum& spectrum, double center, double half_width) {
  if (!(half_width > 0.0)) throw AnalysisError("fit_linewidth: window half width must be > 0");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < spectrum.frequency.size(); ++i) {
    if (std::abs(spectrum.frequency[i] - center) <= half_width) {
      x.push_back(spectrum.frequency[i]);
      y.push_back(spectrum.psd[i]);
    }
  }
  if (x.size() < 8) throw AnalysisError("fit_linewidth: fewer than 8 spectrum points in the window");
  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double floor = *std::min_element(y.begin(), y.end());
  if (peak == 0 || peak + 1 == y.size() || !(y[peak] > floor)) {
    throw AnalysisError("fit_linewidth: no peak inside the window");
  }
  const double half = 0.5 * (y[peak] + floor);
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && y[lo] > half) --lo;
  while (hi + 1 < y.size() && y[hi] > half) ++hi;
  const double width0 = std::max(x[hi] - x[lo], x[1] - x[0]);

  Eigen::VectorXd p(4);
  p << x[peak], width0, y[peak] - floor, floor;
  LorentzResidual fn{x, y};
  Eigen::LevenbergMarquardt<LorentzResidual> lm(fn);
  lm.parameters.maxfev = 2000;
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !p.allFinite() ||
      std::abs(p(0) - center) > half_width || p(1) == 0.0) {
    throw AnalysisError("fit_linewidth: Lorentzian fit diverged");
  }
  LorentzianFit fit;
  fit.center = p(0);
  fit.fwhm = std::abs(p(1));
  fit.amplitude = p(2);
  fit.baseline = p(3);
  Eigen::VectorXd f(static_cast<Eigen::Index>(x.size()));
  fn(p, f);
  fit.residual_norm = f.norm();
  fit.iterations = static_cast<int>(lm.iter);
  Eigen::MatrixXd j(static_cast<Eigen::Index>(x.size()), 4);
  fn.df(p, j);
  const double dof = std::max<double>(1.0, static_cast<double>(x.size()) - 4.0);
  const Eigen::MatrixXd cov = (j.transpose() * j).inverse() * (f.squaredNorm() / dof);
  fit.center_error = std::sqrt(std::max(0.0, cov(0, 0)));
  fit.fwhm_error = std::sqrt(std::max(0.0, cov(1, 1)));
  return fit;
}

std::vector<double> spectral_peaks(const Spectrum& spectrum, double min_height) {
  const auto& s = spectrum.psd;
  std::vector<double> out;
  if (s.size() < 3) return out;
  const double top = *std::max_element(s.begin(), s.end());
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] > s[i - 1] && s[i] >= s[i + 1] && s[i] >= min_height * top) out.push_back(spectrum.frequency[i]);
  }
  return out;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw AnalysisError("spearman: need two equal-length series");
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw AnalysisError("spearman: constant series");
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> uniform_grid(double t_max, double dt) {
  if (!(dt > 0.0) || t_max < 0.0) throw ConfigError("grid: need dt > 0 and t_max >= 0");
  const auto n = static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
  std::vector<double> g(n + 1);
  for (std::size_t k = 0; k <= n; ++k) g[k] = static_cast<double>(k) * dt;
  return g;
}

}  // namespace mmcqed
