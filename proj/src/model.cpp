#include "mmcqed/model.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "mmcqed/errors.hpp"

namespace mmcqed {

std::string to_string(Frame frame) {
  switch (frame) {
    case Frame::RotatingCavityDrive: return "rotating_cavity_drive";
    case Frame::RotatingQubitDrive: return "rotating_qubit_drive";
    case Frame::Polaron: return "polaron";
    case Frame::Effective: return "effective";
  }
  return "unknown";
}

Frame parse_frame(const std::string& name) {
  if (name == "rotating_cavity_drive") return Frame::RotatingCavityDrive;
  if (name == "rotating_qubit_drive") return Frame::RotatingQubitDrive;
  if (name == "polaron") return Frame::Polaron;
  if (name == "effective") return Frame::Effective;
  throw ConfigError("frame: unknown frame '" + name + "'");
}

void SystemConfig::validate() const {
  if (modes.empty()) throw ConfigError("modes: at least one mode is required");
  if (cutoffs.size() != modes.size()) {
    throw ConfigError("cutoffs: expected one cutoff per mode (" + std::to_string(modes.size()) +
                      "), got " + std::to_string(cutoffs.size()));
  }
  HilbertSpace check(cutoffs);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const std::string field = "modes[" + std::to_string(m) + "]";
    if (!(modes[m].decay > 0.0)) throw ConfigError(field + ".decay: kappa must be > 0");
    if (!(modes[m].coupling >= 0.0)) throw ConfigError(field + ".coupling: g must be >= 0");
    if (!std::isfinite(modes[m].detuning)) throw ConfigError(field + ".detuning: not finite");
  }
  if (!(qubit_decay >= 0.0)) throw ConfigError("qubit.decay: gamma must be >= 0");
  if (!std::isfinite(qubit_detuning)) throw ConfigError("qubit.detuning: not finite");

  if (const auto* cav = std::get_if<CavityDrive>(&drive)) {
    if (cav->mode < 0 || cav->mode >= static_cast<int>(modes.size())) {
      throw ConfigError("drive.mode: index " + std::to_string(cav->mode) + " does not name a mode");
    }
    if (frame != Frame::RotatingCavityDrive) {
      throw ConfigError("frame: cavity drive requires frame rotating_cavity_drive");
    }
  } else {
    if (frame == Frame::RotatingCavityDrive) {
      throw ConfigError("frame: rotating_cavity_drive requires a cavity drive");
    }
    if (drive_all_modes) throw ConfigError("drive.all_modes: only meaningful for a cavity drive");
  }
  if (frame == Frame::Effective) {
    if (modes.size() != 2) throw ConfigError("frame: effective frame needs exactly two modes");
    if (effective_order != 1 && effective_order != 2) {
      throw ConfigError("effective_order: must be 1 or 2");
    }
  }
  if (frame == Frame::Polaron && modes.size() != 2) {
    throw ConfigError("frame: polaron frame needs exactly two modes");
  }
}

double coupling_strength(double g0, int harmonic) {
  if (harmonic < 0) throw ConfigError("harmonic index must be >= 0");
  if (g0 < 0.0) throw ConfigError("g0 must be >= 0");
  return g0 * std::sqrt(static_cast<double>(harmonic) + 1.0);
}

std::vector<double> coupling_ladder(double g0, int first_harmonic, int count) {
  std::vector<double> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) out.push_back(coupling_strength(g0, first_harmonic + k));
  return out;
}

namespace {

Operator bare_hamiltonian(const SystemConfig& c, const HilbertSpace& space) {
  const Operator sm = qubit_op(space, QubitOp::SigmaMinus);
  const Operator sp = sm.adjoint();
  Operator h = (0.5 * c.qubit_detuning) * qubit_op(space, QubitOp::SigmaZ);
  for (int m = 0; m < space.mode_count(); ++m) {
    const ModeSpec& mode = c.modes[m];
    const Operator a = annihilator(space, m);
    const Operator ad = a.adjoint();
    h += Complex(mode.detuning) * (ad * a);
    if (mode.coupling != 0.0) h += Complex(mode.coupling) * (ad * sm + a * sp);
  }
  return h;
}

void require_qubit_drive(const SystemConfig& c, const char* what) {
  if (!std::holds_alternative<QubitDrive>(c.drive)) {
    throw ConfigError(std::string(what) + " requires a qubit drive");
  }
}

bool near(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

Operator build_hamiltonian(const SystemConfig& config) {
  config.validate();
  if (config.frame != Frame::RotatingCavityDrive && config.frame != Frame::RotatingQubitDrive) {
    throw ConfigError("build_hamiltonian: frame must be a rotating drive frame, got " +
                      to_string(config.frame));
  }
  const HilbertSpace space = config.space();
  Operator h = bare_hamiltonian(config, space);
  if (const auto* cav = std::get_if<CavityDrive>(&config.drive)) {
    auto add_drive = [&](int m) {
      const Operator a = annihilator(space, m);
      h += (kI * cav->amplitude) * (a.adjoint() - a);
    };
    if (config.drive_all_modes) {
      for (int m = 0; m < space.mode_count(); ++m) add_drive(m);
    } else {
      add_drive(cav->mode);
    }
  } else {
    const double rabi = std::get<QubitDrive>(config.drive).rabi;
    h += Complex(0.5 * rabi) * qubit_op(space, QubitOp::SigmaX);
  }
  return h;
}

std::vector<Operator> collapse_operators(const SystemConfig& config) {
  config.validate();
  const HilbertSpace space = config.space();
  std::vector<Operator> ops;
  for (int m = 0; m < space.mode_count(); ++m) {
    ops.push_back(Complex(std::sqrt(config.modes[m].decay)) * annihilator(space, m));
  }
  if (config.qubit_decay > 0.0) {
    ops.push_back(Complex(std::sqrt(config.qubit_decay)) * qubit_op(space, QubitOp::SigmaMinus));
  }
  return ops;
}

Operator mode_exponential(const HilbertSpace& space, int mode, const DenseMatrix& generator) {
  const DenseMatrix local = generator.exp();
  return embed(space, mode + 1, local);
}

namespace {
DenseMatrix local_annihilator(int cutoff) {
  DenseMatrix a = DenseMatrix::Zero(cutoff + 1, cutoff + 1);
  for (int n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}
}  // namespace

Operator displacement_operator(const HilbertSpace& space, int mode, double xi) {
  if (mode < 0 || mode >= space.mode_count()) {
    throw ConfigError("displacement: mode index " + std::to_string(mode) + " out of range");
  }
  const int cutoff = space.cutoffs()[mode];
  if (xi * xi >= cutoff / 4.0) {
    throw ConfigError("displacement: xi^2 = " + std::to_string(xi * xi) +
                      " violates xi^2 < N_r/4 = " + std::to_string(cutoff / 4.0) +
                      "; raise the cutoff of mode " + std::to_string(mode));
  }
  if (xi == 0.0) return identity(space);
  const DenseMatrix a = local_annihilator(cutoff);
  const DenseMatrix gen = xi * (DenseMatrix(a.adjoint()) - a);
  return mode_exponential(space, mode, gen);
}

QubitDriveEquivalence equivalent_qubit_drive(const SystemConfig& config) {
  config.validate();
  const auto* cav = std::get_if<CavityDrive>(&config.drive);
  if (cav == nullptr) throw ConfigError("equivalent_qubit_drive: config has no cavity drive");
  if (config.drive_all_modes) {
    throw ConfigError("equivalent_qubit_drive: only a single resonant-mode drive can be moved");
  }
  const int r = cav->mode;
  const ModeSpec& mode = config.modes[r];
  if (mode.detuning != 0.0) {
    throw ConfigError("equivalent_qubit_drive: driven mode must be resonant with the drive (D_r = 0)");
  }

  const HilbertSpace space = config.space();
  QubitDriveEquivalence out;
  out.xi = 2.0 * cav->amplitude / mode.decay;

  const Operator d = displacement_operator(space, r, out.xi);
  const Operator dd = d.adjoint();
  const Operator h = build_hamiltonian(config);
  const Operator c = Complex(std::sqrt(mode.decay)) * annihilator(space, r);

  // D^dag (sqrt(k) a) D = sqrt(k) a + shift, and D[C + shift] = D[C] - i[H_shift, .]
  // with H_shift = (i/2)(shift^* C - shift C^dag).
  const Operator h_disp = dd * h * d;
  const Operator c_disp = dd * c * d;
  BasisState vac{0, std::vector<int>(space.mode_count(), 0)};
  const std::size_t g0 = space.index(vac);
  const Complex shift = c_disp.element(g0, g0) - c.element(g0, g0);
  const Operator h_shift = (0.5 * kI) * (std::conj(shift) * c - shift * c.adjoint());
  const Operator h_total = h_disp + h_shift;

  BasisState excited = vac;
  excited.qubit = 1;
  BasisState one_photon = vac;
  one_photon.photons[r] = 1;
  const Complex flip = h_total.element(space.index(excited), g0);
  const Complex mode_drive = h_total.element(space.index(one_photon), g0);

  out.rabi = 2.0 * flip.real();
  out.residual_mode_drive = std::abs(mode_drive);
  const double scale = mode.coupling * cav->amplitude;
  out.prefactor = scale != 0.0 ? out.rabi * mode.decay / scale
                               : std::numeric_limits<double>::quiet_NaN();

  out.config = config;
  out.config.drive = QubitDrive{out.rabi};
  out.config.frame = Frame::RotatingQubitDrive;
  return out;
}

Operator rotated_qubit_basis(const HilbertSpace& space) {
  const double s = 1.0 / std::sqrt(2.0);
  DenseMatrix r(2, 2);
  // columns: |0~> = (|g> - |e>)/sqrt2, |1~> = (|g> + |e>)/sqrt2
  r << s, s, -s, s;
  return embed(space, 0, r);
}

Operator polaron_unitary(const SystemConfig& config) {
  const HilbertSpace space = config.space();
  DenseMatrix p0 = DenseMatrix::Zero(2, 2), p1 = DenseMatrix::Zero(2, 2);
  p0(0, 0) = 1.0;
  p1(1, 1) = 1.0;
  const Operator proj0 = embed(space, 0, p0);
  const Operator proj1 = embed(space, 0, p1);
  Operator u = identity(space);
  for (int i = 0; i < space.mode_count(); ++i) {
    const ModeSpec& mode = config.modes[i];
    if (mode.detuning == 0.0) {
      throw ConfigError("polaron: modes[" + std::to_string(i) +
                        "].detuning is zero; the transformation is singular");
    }
    const double s = mode.coupling / (2.0 * mode.detuning);
    const DenseMatrix a = local_annihilator(space.cutoffs()[i]);
    const DenseMatrix gen = s * (a - DenseMatrix(a.adjoint()));
    // s~z = -1 on |0~>, +1 on |1~>
    const Operator ui = proj0 * mode_exponential(space, i, -gen) + proj1 * mode_exponential(space, i, gen);
    u = u * ui;
  }
  return u;
}

namespace {
SystemConfig as_qubit_frame(const SystemConfig& config) {
  SystemConfig c = config;
  c.frame = Frame::RotatingQubitDrive;
  return c;
}
}  // namespace

Operator polaron_hamiltonian(const SystemConfig& config) {
  config.validate();
  require_qubit_drive(config, "polaron_hamiltonian");
  if (config.modes.size() != 2) throw ConfigError("polaron_hamiltonian: needs exactly two modes");
  const Operator u = polaron_unitary(config);
  const Operator r = rotated_qubit_basis(config.space());
  const Operator h = build_hamiltonian(as_qubit_frame(config));
  const Operator h_rot = r.adjoint() * h * r;
  return u.adjoint() * h_rot * u;
}

double effective_vertex(double g, double detuning, int order) {
  if (order == 1) return 0.5 * g;
  if (order == 2) {
    if (detuning == 0.0) throw ConfigError("effective_vertex: detuning must be nonzero");
    return g * g / (2.0 * detuning);
  }
  throw ConfigError("effective order must be 1 or 2");
}

Operator effective_hamiltonian(const SystemConfig& config, int order) {
  config.validate();
  require_qubit_drive(config, "effective_hamiltonian");
  if (config.modes.size() != 2) throw ConfigError("effective_hamiltonian: needs exactly two modes");
  const ModeSpec& m1 = config.modes[0];
  const ModeSpec& m2 = config.modes[1];
  if (!near(m1.detuning, -m2.detuning) || !near(m1.coupling, m2.coupling) || m1.detuning == 0.0) {
    throw ConfigError("effective_hamiltonian: requires D_1 = -D_2 != 0 and g_1 = g_2");
  }
  if (config.qubit_detuning != 0.0) {
    throw ConfigError("effective_hamiltonian: qubit must be resonant with the drive");
  }
  const double delta = m1.detuning;
  const double g = m1.coupling;
  const double rabi = std::get<QubitDrive>(config.drive).rabi;
  const HilbertSpace space = config.space();
  // Operators below act in the rotated basis coordinates {|0~>, |1~>}.
  const Operator sp = qubit_op(space, QubitOp::SigmaPlus);
  const Operator a1 = annihilator(space, 0);
  const Operator a2 = annihilator(space, 1);
  Operator h = Complex(delta) * (a1.adjoint() * a1) - Complex(delta) * (a2.adjoint() * a2) +
               Complex(0.5 * rabi) * qubit_op(space, QubitOp::SigmaZ);
  const double v = effective_vertex(g, delta, order);
  Operator vertex = order == 1 ? sp * a1 - sp * a2.adjoint()
                               : sp * a2.adjoint() * a2.adjoint() - sp * a1 * a1;
  vertex = Complex(v) * vertex;
  h += vertex + vertex.adjoint();
  return h;
}

Operator frame_hamiltonian(const SystemConfig& config) {
  switch (config.frame) {
    case Frame::RotatingCavityDrive:
    case Frame::RotatingQubitDrive: return build_hamiltonian(config);
    case Frame::Polaron: return polaron_hamiltonian(config);
    case Frame::Effective: return effective_hamiltonian(config, config.effective_order);
  }
  throw ConfigError("unknown frame");
}

std::vector<Operator> frame_collapse_operators(const SystemConfig& config) {
  std::vector<Operator> ops = collapse_operators(config);
  switch (config.frame) {
    case Frame::RotatingCavityDrive:
    case Frame::RotatingQubitDrive: return ops;
    case Frame::Polaron: {
      const Operator w = rotated_qubit_basis(config.space()) * polaron_unitary(config);
      const Operator wd = w.adjoint();
      for (auto& c : ops) c = wd * c * w;
      return ops;
    }
    case Frame::Effective:
      throw ConfigError("frame: the effective frame is Hamiltonian-only and has no dissipator");
  }
  throw ConfigError("unknown frame");
}

}  // namespace mmcqed
