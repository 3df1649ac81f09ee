#pragma once

// Weak-probe physics in the single-excitation manifold: eigenvalues of the
// (M+1)x(M+1) block, linear transmission, and g0 fits. Any consistent
// frequency unit may be used; the harness works in MHz.

#include <vector>

#include "mmcqed/hilbert.hpp"

namespace mmcqed {

struct ManifoldEigen {
  /// Ascending.
  std::vector<double> eigenvalues;
  /// weights(c, k) = |<c|k>|^2; component 0 is the qubit, 1..M the modes.
  Eigen::MatrixXd weights;
};

/// Diagonalize diag(qubit, modes...) with couplings in the qubit row and column.
ManifoldEigen first_manifold(const std::vector<double>& couplings, const std::vector<double>& mode_freqs,
                             double qubit_freq);

struct ManifoldSpectrum {
  std::vector<double> qubit_freqs;
  /// [point][k], ascending at each point.
  std::vector<std::vector<double>> eigenvalues;
  std::vector<Eigen::MatrixXd> weights;
};

ManifoldSpectrum manifold_sweep(const std::vector<double>& couplings, const std::vector<double>& mode_freqs,
                                const std::vector<double>& qubit_freqs);

struct LinearMode {
  double frequency = 0.0;
  double decay = 0.0;
  double coupling = 0.0;
  /// Port couplings; negative selects the symmetric default decay / 2.
  double kappa_in = -1.0;
  double kappa_out = -1.0;
};

struct TransmissionMap {
  std::vector<double> probe;
  std::vector<double> qubit_freqs;
  /// [qubit point][probe point]
  std::vector<std::vector<Complex>> t;
};

/// t(w) = -i sum_mn (-1)^m sqrt(k_out,m) [(w - H_nh)^-1]_mn sqrt(k_in,n), with
/// H_nh = diag(w_a - i gamma/2, w_m - i kappa_m/2) plus couplings. The output
/// port sits at the far end of the resonator, hence the mode parity sign.
std::vector<Complex> weak_probe_transmission(const std::vector<LinearMode>& modes, double qubit_freq,
                                             double qubit_decay, const std::vector<double>& probe);

TransmissionMap transmission_map(const std::vector<LinearMode>& modes, const std::vector<double>& qubit_freqs,
                                 double qubit_decay, const std::vector<double>& probe);

struct PeakData {
  std::vector<double> qubit_freqs;
  /// Peak positions per qubit point.
  std::vector<std::vector<double>> peaks;
};

/// Local maxima of |t| above min_height (absolute), refined by a parabola through
/// the three samples around each maximum.
PeakData extract_peaks(const TransmissionMap& map, double min_height);

struct G0Fit {
  double g0 = 0.0;
  double g0_error = 0.0;
  double residual_norm = 0.0;
  int points = 0;  // peaks used
};

/// Least-squares g0 with g_m = g0 sqrt(m + 1): every peak is matched to the
/// nearest first-manifold eigenvalue. Qubit-like peaks (qubit weight above
/// max_qubit_weight) are dropped: in |t| they only show through the mode tails
/// and their maxima are pulled off the eigenvalue by interference. Throws
/// AnalysisError unless the qubit sweep spans at least one mode frequency.
G0Fit fit_g0(const PeakData& data, const std::vector<double>& mode_freqs, const std::vector<int>& harmonics,
             double g0_guess, double max_qubit_weight = 0.5);

}  // namespace mmcqed
