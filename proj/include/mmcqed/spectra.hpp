#pragma once

// Two-time correlations, emission spectra and Lorentzian linewidth fits.
//
// Frequencies are cyclic, in MHz (angular / 2 pi), relative to the drive frame.
// With g(tau) = <A^dag(tau) A(0)>, a mode at detuning D appears at +D/2pi.

#include <cstdint>
#include <string>
#include <vector>

#include "mmcqed/dynamics.hpp"
#include "mmcqed/mcwf.hpp"

namespace mmcqed {

enum class CorrelationMethod { Regression, McwfTwoStep };
std::string to_string(CorrelationMethod method);

struct CorrelationSeries {
  std::vector<double> tau;
  std::vector<Complex> values;
  /// Empty for regression.
  std::vector<double> std_error;
  CorrelationMethod method = CorrelationMethod::Regression;
};

struct Spectrum {
  std::vector<double> frequency;  // MHz, ascending
  std::vector<double> psd;
  /// |Im g(0)| / |g(0)|.
  double imaginary_residual = 0.0;
  /// Sum of psd * bin width, to be compared with Re g(0).
  double integral = 0.0;
  double g0 = 0.0;
  double bin() const { return frequency.size() > 1 ? frequency[1] - frequency[0] : 0.0; }
};

struct LorentzianFit {
  double center = 0.0;  // MHz
  double fwhm = 0.0;    // MHz
  double amplitude = 0.0;
  double baseline = 0.0;
  double residual_norm = 0.0;
  /// One-sigma parameter uncertainties from the Jacobian at the optimum.
  double center_error = 0.0;
  double fwhm_error = 0.0;
  int iterations = 0;
};

struct SpectrumSettings {
  /// Zero-pad the tau window to at least this many times its length.
  int pad_factor = 8;
  /// Required decay |g| / |g(0)| over the last tail_fraction of the window.
  double decay_tol = 0.01;
  double tail_fraction = 0.05;
};

/// A - <A>_rho, whose correlation gives the fluctuation (incoherent) spectrum.
Operator fluctuation_operator(const DensityMatrix& rho, const Operator& a);

/// g(tau) = Tr(A^dag e^{L tau}[A rho_ss]) by propagating the matrix A rho_ss.
CorrelationSeries correlation_regression(const Liouvillian& liouvillian, const DensityMatrix& rho_ss,
                                         const Operator& a, const std::vector<double>& tau_grid,
                                         const SolverSettings& settings = {});

/// Trajectory estimate via the two-step branch method. Walks relax from
/// |g, 0...0> for settle_time before the correlation starts.
CorrelationSeries correlation_mcwf(const SystemConfig& config, const Operator& a,
                                   const std::vector<double>& tau_grid, std::size_t n_walks,
                                   std::uint64_t base_seed, double settle_time,
                                   const McwfSettings& settings = {}, int starts_per_walk = 1,
                                   double restart_interval = 0.0);

/// S(nu) = 2 Re int_0^T g(tau) e^{-2 pi i nu tau} d tau, trapezoid weights,
/// zero-padded FFT. Throws AnalysisError if g has not decayed.
Spectrum emission_spectrum(const CorrelationSeries& corr, const SpectrumSettings& settings = {});

/// Lorentzian plus constant baseline fitted over [center - half_width, center + half_width].
LorentzianFit fit_linewidth(const Spectrum& spectrum, double center, double half_width);

/// Local maxima of the psd above `min_height` (fraction of the global maximum), ascending frequency.
std::vector<double> spectral_peaks(const Spectrum& spectrum, double min_height = 0.05);

double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Uniform grid 0, dt, ..., n dt with n = ceil(t_max / dt).
std::vector<double> uniform_grid(double t_max, double dt);

}  // namespace mmcqed
