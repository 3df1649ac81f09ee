#pragma once

// Monte Carlo wavefunction (quantum jump) trajectories.
//
// Walk i of an ensemble draws from Philox4x32(base_seed, i), so results do not
// depend on the worker count. Walks are grouped into fixed-size blocks whose
// statistics are merged pairwise in block order.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mmcqed/hilbert.hpp"
#include "mmcqed/model.hpp"

namespace mmcqed {

struct McwfSettings {
  /// Largest step of the no-jump propagator (μs). Grid spacings are split evenly.
  double max_step = 5e-3;
  /// Jump times are located to step / 2^bisection_depth.
  int bisection_depth = 10;
  /// Above this dimension the no-jump evolution uses RK4 on the sparse H_eff
  /// instead of a dense exact propagator.
  std::size_t dense_limit = 1500;
  /// RK4 substep bound: h * ||H_eff||_1 <= rk4_courant.
  double rk4_courant = 0.2;
  std::size_t block_size = 32;
  /// 0 selects default_workers().
  unsigned workers = 0;
};

struct TrajectoryEnsemble {
  std::size_t n_walks = 0;
  std::uint64_t base_seed = 0;
  std::vector<double> times;
  /// [observable][time] ensemble mean of <psi|A|psi>/<psi|psi>.
  std::vector<std::vector<Complex>> mean;
  /// Standard error of the complex mean: sqrt(sum |x - mean|^2 / (n (n - 1))).
  std::vector<std::vector<double>> std_error;
  /// Per-walk time averages over samples with t >= average_from, then averaged
  /// over walks. This is the steady-state estimator.
  double average_from = 0.0;
  std::vector<Complex> time_average;
  std::vector<double> time_average_error;
  std::uint64_t jumps = 0;
};

/// t_grid must be uniform and start at 0. average_from < 0 disables time averages.
TrajectoryEnsemble mcwf_ensemble(const Operator& hamiltonian, const std::vector<Operator>& collapse_ops,
                                 const Vector& psi0, const std::vector<double>& t_grid,
                                 const std::vector<Operator>& observables, std::size_t n_walks,
                                 std::uint64_t base_seed, const McwfSettings& settings = {},
                                 double average_from = -1.0);

/// Same, with the config's frame Hamiltonian and collapse operators, starting in |g, 0...0>.
TrajectoryEnsemble mcwf_ensemble(const SystemConfig& config, const std::vector<double>& t_grid,
                                 const std::vector<Operator>& observables, std::size_t n_walks,
                                 std::uint64_t base_seed, const McwfSettings& settings = {},
                                 double average_from = -1.0);

struct TwoTimeEstimate {
  std::vector<double> tau;
  std::vector<Complex> mean;
  std::vector<double> std_error;
  std::size_t n_walks = 0;
  std::uint64_t base_seed = 0;
};

/// <B(tau) A(0)> in the stationary state by the two-step method: each walk
/// relaxes for settle_time, then A psi is unravelled into the four branches
/// (1 +- A)psi, (1 +- iA)psi, each evolved as its own trajectory and weighted by
/// its squared norm. starts_per_walk > 1 branches again every restart_interval.
TwoTimeEstimate mcwf_two_time(const Operator& hamiltonian, const std::vector<Operator>& collapse_ops,
                              const Vector& psi0, double settle_time, const Operator& a,
                              const Operator& b, const std::vector<double>& tau_grid,
                              std::size_t n_walks, std::uint64_t base_seed,
                              const McwfSettings& settings = {}, int starts_per_walk = 1,
                              double restart_interval = 0.0);

/// |g, 0...0> on the config's space.
Vector ground_state(const HilbertSpace& space);

}  // namespace mmcqed
