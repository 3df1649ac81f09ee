#pragma once

// System Hamiltonians, collapse operators and frame transformations for a
// driven qubit coupled to several cavity modes.
//
// Units: every frequency, rate and coupling is an angular frequency in
// rad/us (2*pi times the value in MHz); times are in us.

#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "mmcqed/hilbert.hpp"

namespace mmcqed {

namespace units {
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// MHz-over-2pi value to angular frequency in rad/us.
constexpr double from_mhz(double mhz) { return kTwoPi * mhz; }
/// Angular frequency in rad/us to MHz-over-2pi.
constexpr double to_mhz(double angular) { return angular / kTwoPi; }
}  // namespace units

struct ModeSpec {
  double detuning = 0.0;  // mode frequency minus drive frequency
  double decay = 0.0;     // kappa, energy decay rate
  double coupling = 0.0;  // g
};

struct CavityDrive {
  int mode = 0;            // index of the driven (resonant) mode
  double amplitude = 0.0;  // eta
};

struct QubitDrive {
  double rabi = 0.0;  // Omega
};

using Drive = std::variant<CavityDrive, QubitDrive>;

enum class Frame { RotatingCavityDrive, RotatingQubitDrive, Polaron, Effective };

std::string to_string(Frame frame);
Frame parse_frame(const std::string& name);

struct SystemConfig {
  std::vector<ModeSpec> modes;
  double qubit_detuning = 0.0;  // Delta_a
  double qubit_decay = 0.0;     // gamma
  Drive drive = QubitDrive{};
  std::vector<int> cutoffs;
  Frame frame = Frame::RotatingQubitDrive;
  int effective_order = 1;
  /// Cavity drive only: apply eta to every mode instead of just the resonant one.
  bool drive_all_modes = false;

  HilbertSpace space() const { return HilbertSpace(cutoffs); }
  bool cavity_driven() const { return std::holds_alternative<CavityDrive>(drive); }
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// g0 * sqrt(m + 1).
double coupling_strength(double g0, int harmonic);

/// Couplings for harmonics first_harmonic, first_harmonic + 1, ...
std::vector<double> coupling_ladder(double g0, int first_harmonic, int count);

/// Rotating-frame Hamiltonian (cavity- or qubit-driven frame):
///   sum_m D_m a_m^dag a_m + (D_a / 2) sz + sum_m g_m (a_m^dag s- + a_m s+)
/// plus i eta (a_r^dag - a_r) or (Omega / 2)(s+ + s-).
Operator build_hamiltonian(const SystemConfig& config);

/// Hamiltonian in whatever frame the config selects.
Operator frame_hamiltonian(const SystemConfig& config);

/// sqrt(kappa_m) a_m for every mode, then sqrt(gamma) s- (rates > 0 only).
std::vector<Operator> collapse_operators(const SystemConfig& config);

/// Collapse operators expressed in the config's frame.
std::vector<Operator> frame_collapse_operators(const SystemConfig& config);

/// Matrix exponential of a single-mode generator lifted to the space.
Operator mode_exponential(const HilbertSpace& space, int mode, const DenseMatrix& generator);

/// exp(xi (a_r^dag - a_r)) on mode r, computed as a full matrix exponential
/// on the truncated factor. Requires xi^2 < N_r / 4.
Operator displacement_operator(const HilbertSpace& space, int mode, double xi);

struct QubitDriveEquivalence {
  SystemConfig config;          // same system, drive replaced by QubitDrive
  double xi = 0.0;              // displacement that cancels the cavity drive
  double rabi = 0.0;            // extracted Omega
  double prefactor = 0.0;       // Omega * kappa_r / (g_r * eta); nan when g_r eta == 0
  double residual_mode_drive = 0.0;  // leftover |i eta'| on mode r after the transform
};

/// Move a resonant cavity drive onto the qubit. Omega is read off numerically
/// from the displaced generator (Hamiltonian plus the shift of sqrt(kappa_r) a_r),
/// not from a closed form. The readout gives Omega = 4 g_r eta / kappa_r.
QubitDriveEquivalence equivalent_qubit_drive(const SystemConfig& config);

/// Unitary taking the bare qubit basis to {|0~>, |1~>} with
/// |0~> = (|g> - |e>)/sqrt2, |1~> = (|g> + |e>)/sqrt2, so that sigma_x -> sigma~_z.
Operator rotated_qubit_basis(const HilbertSpace& space);

/// Generator-level qubit-state dependent displacement
/// U = prod_i exp((g_i / 2 D_i)(a_i - a_i^dag) s~z) in the rotated basis.
Operator polaron_unitary(const SystemConfig& config);

/// Qubit-driven Hamiltonian in the rotated basis after conjugation with U.
Operator polaron_hamiltonian(const SystemConfig& config);

/// Resonant effective Hamiltonians for two symmetric modes (D_1 = -D_2 = D,
/// g_1 = g_2 = g, qubit resonant with the drive), in the rotated basis:
///   order 1: D n1 - D n2 + (Omega/2) s~z + (g/2)[s~+ a1 - s~+ a2^dag + h.c.]
///   order 2: D n1 - D n2 + (Omega/2) s~z + (g^2/2D)[-s~+ a1^2 + s~+ a2^dag^2 + h.c.]
Operator effective_hamiltonian(const SystemConfig& config, int order);

/// Vertex coefficient of the order-m effective Hamiltonian: g/2 or g^2/(2D).
double effective_vertex(double g, double detuning, int order);

}  // namespace mmcqed
