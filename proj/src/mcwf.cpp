#include "mmcqed/mcwf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "mmcqed/errors.hpp"
#include "mmcqed/parallel.hpp"
#include "mmcqed/rng.hpp"

namespace mmcqed {

namespace {

// Running mean and sum of squared deviations of a complex sample (Chan et al. merge).
struct Moments {
  double n = 0.0;
  Complex mean{0.0, 0.0};
  double m2 = 0.0;

  void add(Complex x) {
    n += 1.0;
    const Complex d = x - mean;
    mean += d / n;
    m2 += std::real(std::conj(d) * (x - mean));
  }

  friend Moments operator+(const Moments& a, const Moments& b) {
    if (a.n == 0.0) return b;
    if (b.n == 0.0) return a;
    Moments out;
    out.n = a.n + b.n;
    const Complex d = b.mean - a.mean;
    out.mean = a.mean + d * (b.n / out.n);
    out.m2 = a.m2 + b.m2 + std::norm(d) * a.n * b.n / out.n;
    return out;
  }

  double std_error() const { return n > 1.0 ? std::sqrt(m2 / (n * (n - 1.0))) : 0.0; }
};

struct MomentTable {
  std::vector<Moments> cells;
  std::uint64_t jumps = 0;

  friend MomentTable operator+(const MomentTable& a, const MomentTable& b) {
    if (a.cells.empty()) return b;
    if (b.cells.empty()) return a;
    MomentTable out;
    out.cells.resize(a.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) out.cells[i] = a.cells[i] + b.cells[i];
    out.jumps = a.jumps + b.jumps;
    return out;
  }
};

double max_column_sum(const SparseMatrix& m) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(m.cols());
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) sums(it.col()) += std::abs(it.value());
  }
  return sums.size() ? sums.maxCoeff() : 0.0;
}

// exp(-i H_eff h / 2^level) for level = 0..depth.
class NoJumpPropagator {
 public:
  NoJumpPropagator(const SparseMatrix& h_eff, double step, int depth, const McwfSettings& s)
      : step_(step), courant_(s.rk4_courant) {
    const auto dim = static_cast<std::size_t>(h_eff.rows());
    if (dim <= s.dense_limit) {
      dense_.resize(static_cast<std::size_t>(depth) + 1);
      const DenseMatrix gen = DenseMatrix(h_eff) * Complex(0.0, -std::ldexp(step, -depth));
      dense_[static_cast<std::size_t>(depth)] = gen.exp();
      for (int l = depth; l > 0; --l) {
        dense_[static_cast<std::size_t>(l) - 1] = dense_[static_cast<std::size_t>(l)] * dense_[static_cast<std::size_t>(l)];
      }
    } else {
      sparse_ = h_eff;
      norm1_ = max_column_sum(h_eff);
    }
  }

  void advance(int level, const Vector& in, Vector& out) const {
    if (!dense_.empty()) {
      out.noalias() = dense_[static_cast<std::size_t>(level)] * in;
      return;
    }
    const double hl = std::ldexp(step_, -level);
    const int n = std::max(1, static_cast<int>(std::ceil(hl * norm1_ / courant_)));
    const Complex dt(0.0, -hl / n);
    out = in;
    Vector k1, k2, k3, k4;
    for (int i = 0; i < n; ++i) {
      k1 = dt * (sparse_ * out);
      k2 = dt * (sparse_ * (out + 0.5 * k1));
      k3 = dt * (sparse_ * (out + 0.5 * k2));
      k4 = dt * (sparse_ * (out + k3));
      out += (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
  }

 private:
  double step_;
  double courant_;
  std::vector<DenseMatrix> dense_;
  SparseMatrix sparse_;
  double norm1_ = 0.0;
};

class Walker {
 public:
  Walker(const NoJumpPropagator& prop, const std::vector<SparseMatrix>& collapse, int depth,
         Philox4x32& rng)
      : prop_(prop), collapse_(collapse), depth_(depth), rng_(rng) {}

  void reset(const Vector& psi) {
    psi_ = psi / psi.norm();
    draw();
  }

  // One full propagator step. The unnormalized norm decays until it crosses
  // the drawn threshold; the crossing is bracketed by dyadic sub-steps.
  void step() {
    const long ticks = 1L << depth_;
    long tick = 0;
    int level = 0;
    while (tick < ticks) {
      while ((ticks >> level) > ticks - tick) ++level;
      prop_.advance(level, psi_, trial_);
      if (collapse_.empty() || trial_.squaredNorm() >= threshold_) {
        psi_.swap(trial_);
        tick += ticks >> level;
        continue;
      }
      if (level < depth_) {
        ++level;
        continue;
      }
      psi_.swap(trial_);
      tick += 1;
      jump();
      level = 0;
    }
  }

  Vector normalized() const { return psi_ / psi_.norm(); }

  Complex expect(const SparseMatrix& a) const { return psi_.dot(a * psi_) / psi_.squaredNorm(); }

  std::uint64_t jumps() const { return jumps_; }

 private:
  void draw() {
    double u = 0.0;
    while (u == 0.0) u = rng_.uniform();
    threshold_ = u;
  }

  void jump() {
    double total = 0.0;
    weights_.resize(collapse_.size());
    for (std::size_t k = 0; k < collapse_.size(); ++k) {
      weights_[k] = (collapse_[k] * psi_).squaredNorm();
      total += weights_[k];
    }
    if (!(total > 0.0)) throw SolverError("mcwf: norm underflow with no available jump channel");
    const double pick = rng_.uniform() * total;
    std::size_t k = 0;
    for (double acc = weights_[0]; acc <= pick && k + 1 < collapse_.size(); acc += weights_[++k]) {
    }
    Vector next = collapse_[k] * psi_;
    psi_ = next / next.norm();
    ++jumps_;
    draw();
  }

  const NoJumpPropagator& prop_;
  const std::vector<SparseMatrix>& collapse_;
  int depth_;
  Philox4x32& rng_;
  Vector psi_, trial_;
  std::vector<double> weights_;
  double threshold_ = 1.0;
  std::uint64_t jumps_ = 0;
};

struct Engine {
  SparseMatrix h_eff;
  std::vector<SparseMatrix> collapse;
};

Engine make_engine(const Operator& hamiltonian, const std::vector<Operator>& collapse_ops) {
  Engine e;
  e.h_eff = hamiltonian.matrix();
  for (const auto& c : collapse_ops) {
    if (!(c.space() == hamiltonian.space())) throw SpaceMismatch("mcwf: collapse operator on a different space");
    e.collapse.push_back(c.matrix());
    const SparseMatrix cc = SparseMatrix(c.matrix().adjoint()) * c.matrix();
    e.h_eff -= Complex(0.0, 0.5) * cc;
  }
  return e;
}

// Grid spacing and the number of equal steps per spacing.
std::pair<double, int> uniform_steps(const std::vector<double>& grid, double max_step, const char* what) {
  if (grid.empty() || grid.front() != 0.0) {
    throw ConfigError(std::string(what) + ": grid must start at 0");
  }
  if (grid.size() == 1) return {max_step, 1};
  const double dt = grid[1] - grid[0];
  if (!(dt > 0.0)) throw ConfigError(std::string(what) + ": grid must be increasing");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (std::abs(grid[k] - static_cast<double>(k) * dt) > 1e-9 * std::max(1.0, grid.back())) {
      throw ConfigError(std::string(what) + ": grid must be uniform");
    }
  }
  const int n = std::max(1, static_cast<int>(std::ceil(dt / max_step - 1e-9)));
  return {dt / n, n};
}

void check_settings(const McwfSettings& s, std::size_t n_walks) {
  if (n_walks < 1) throw ConfigError("n_walks: must be >= 1");
  if (!(s.max_step > 0.0)) throw ConfigError("mcwf.max_step: must be > 0");
  if (s.bisection_depth < 0 || s.bisection_depth > 30) throw ConfigError("mcwf.bisection_depth: must be in [0, 30]");
  if (s.block_size < 1) throw ConfigError("mcwf.block_size: must be >= 1");
}

template <typename BlockFn>
MomentTable run_blocks(std::size_t n_walks, const McwfSettings& s, const BlockFn& fn) {
  const std::size_t n_blocks = (n_walks + s.block_size - 1) / s.block_size;
  std::vector<MomentTable> blocks(n_blocks);
  parallel_for(n_blocks, s.workers ? s.workers : default_workers(), [&](std::size_t b) {
    const std::size_t first = b * s.block_size;
    blocks[b] = fn(first, std::min(n_walks, first + s.block_size));
  });
  return pairwise_sum(std::size_t{0}, n_blocks, [&](std::size_t b) { return blocks[b]; }, MomentTable{});
}

}  // namespace

Vector ground_state(const HilbertSpace& space) {
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(space.total_dim()));
  psi(0) = 1.0;
  return psi;
}

TrajectoryEnsemble mcwf_ensemble(const Operator& hamiltonian, const std::vector<Operator>& collapse_ops,
                                 const Vector& psi0, const std::vector<double>& t_grid,
                                 const std::vector<Operator>& observables, std::size_t n_walks,
                                 std::uint64_t base_seed, const McwfSettings& settings,
                                 double average_from) {
  check_settings(settings, n_walks);
  if (static_cast<std::size_t>(psi0.size()) != hamiltonian.dim() || !(psi0.norm() > 0.0)) {
    throw ConfigError("mcwf: initial state has the wrong size or zero norm");
  }
  for (const auto& o : observables) {
    if (!(o.space() == hamiltonian.space())) throw SpaceMismatch("mcwf: observable on a different space");
  }
  const auto [h, substeps] = uniform_steps(t_grid, settings.max_step, "mcwf t_grid");
  const Engine engine = make_engine(hamiltonian, collapse_ops);
  const NoJumpPropagator prop(engine.h_eff, h, settings.bisection_depth, settings);
  const std::size_t n_obs = observables.size(), n_t = t_grid.size();
  std::size_t first_avg = n_t;
  if (average_from >= 0.0) {
    first_avg = static_cast<std::size_t>(
        std::lower_bound(t_grid.begin(), t_grid.end(), average_from - 1e-12) - t_grid.begin());
    if (first_avg >= n_t) throw ConfigError("mcwf: average_from lies beyond the time grid");
  }
  const bool averaging = first_avg < n_t;

  const MomentTable total = run_blocks(n_walks, settings, [&](std::size_t begin, std::size_t end) {
    MomentTable table;
    table.cells.resize(n_obs * (n_t + 1));
    std::vector<Complex> sums(n_obs);
    for (std::size_t w = begin; w < end; ++w) {
      Philox4x32 rng(base_seed, w);
      Walker walker(prop, engine.collapse, settings.bisection_depth, rng);
      walker.reset(psi0);
      std::fill(sums.begin(), sums.end(), Complex{});
      for (std::size_t k = 0; k < n_t; ++k) {
        if (k > 0) {
          for (int s = 0; s < substeps; ++s) walker.step();
        }
        for (std::size_t o = 0; o < n_obs; ++o) {
          const Complex x = walker.expect(observables[o].matrix());
          table.cells[o * (n_t + 1) + k].add(x);
          if (k >= first_avg) sums[o] += x;
        }
      }
      if (averaging) {
        for (std::size_t o = 0; o < n_obs; ++o) {
          table.cells[o * (n_t + 1) + n_t].add(sums[o] / static_cast<double>(n_t - first_avg));
        }
      }
      table.jumps += walker.jumps();
    }
    return table;
  });

  TrajectoryEnsemble out;
  out.n_walks = n_walks;
  out.base_seed = base_seed;
  out.times = t_grid;
  out.average_from = averaging ? t_grid[first_avg] : -1.0;
  out.jumps = total.jumps;
  out.mean.assign(n_obs, std::vector<Complex>(n_t));
  out.std_error.assign(n_obs, std::vector<double>(n_t));
  for (std::size_t o = 0; o < n_obs; ++o) {
    for (std::size_t k = 0; k < n_t; ++k) {
      const Moments& m = total.cells[o * (n_t + 1) + k];
      out.mean[o][k] = m.mean;
      out.std_error[o][k] = m.std_error();
    }
    if (averaging) {
      const Moments& m = total.cells[o * (n_t + 1) + n_t];
      out.time_average.push_back(m.mean);
      out.time_average_error.push_back(m.std_error());
    }
  }
  return out;
}

TrajectoryEnsemble mcwf_ensemble(const SystemConfig& config, const std::vector<double>& t_grid,
                                 const std::vector<Operator>& observables, std::size_t n_walks,
                                 std::uint64_t base_seed, const McwfSettings& settings,
                                 double average_from) {
  config.validate();
  return mcwf_ensemble(frame_hamiltonian(config), frame_collapse_operators(config),
                       ground_state(config.space()), t_grid, observables, n_walks, base_seed,
                       settings, average_from);
}

TwoTimeEstimate mcwf_two_time(const Operator& hamiltonian, const std::vector<Operator>& collapse_ops,
                              const Vector& psi0, double settle_time, const Operator& a,
                              const Operator& b, const std::vector<double>& tau_grid,
                              std::size_t n_walks, std::uint64_t base_seed,
                              const McwfSettings& settings, int starts_per_walk,
                              double restart_interval) {
  check_settings(settings, n_walks);
  if (settle_time < 0.0 || restart_interval < 0.0 || starts_per_walk < 1) {
    throw ConfigError("mcwf two-time: settle_time, restart_interval must be >= 0 and starts >= 1");
  }
  if (!(a.space() == hamiltonian.space()) || !(b.space() == hamiltonian.space())) {
    throw SpaceMismatch("mcwf two-time: operator on a different space");
  }
  const auto [h, substeps] = uniform_steps(tau_grid, settings.max_step, "mcwf tau_grid");
  const Engine engine = make_engine(hamiltonian, collapse_ops);
  const NoJumpPropagator prop(engine.h_eff, h, settings.bisection_depth, settings);
  const auto settle_steps = static_cast<long>(std::ceil(settle_time / h - 1e-9));
  const auto restart_steps = static_cast<long>(std::ceil(restart_interval / h - 1e-9));
  const std::size_t n_t = tau_grid.size();
  const Complex shifts[4] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
  const Complex weights[4] = {{0.25, 0.0}, {-0.25, 0.0}, {0.0, -0.25}, {0.0, 0.25}};

  const MomentTable total = run_blocks(n_walks, settings, [&](std::size_t begin, std::size_t end) {
    MomentTable table;
    table.cells.resize(n_t);
    std::vector<Complex> sample(n_t);
    for (std::size_t w = begin; w < end; ++w) {
      Philox4x32 rng(base_seed, w);
      Walker seed_walk(prop, engine.collapse, settings.bisection_depth, rng);
      seed_walk.reset(psi0);
      for (long s = 0; s < settle_steps; ++s) seed_walk.step();
      std::fill(sample.begin(), sample.end(), Complex{});
      for (int start = 0; start < starts_per_walk; ++start) {
        if (start > 0) {
          for (long s = 0; s < restart_steps; ++s) seed_walk.step();
        }
        const Vector psi = seed_walk.normalized();
        const Vector a_psi = a.matrix() * psi;
        for (int br = 0; br < 4; ++br) {
          const Vector chi = psi + shifts[br] * a_psi;
          const double mu = chi.squaredNorm();
          if (mu == 0.0) continue;
          Walker branch(prop, engine.collapse, settings.bisection_depth, rng);
          branch.reset(chi);
          for (std::size_t k = 0; k < n_t; ++k) {
            if (k > 0) {
              for (int s = 0; s < substeps; ++s) branch.step();
            }
            sample[k] += weights[br] * mu * branch.expect(b.matrix());
          }
          table.jumps += branch.jumps();
        }
      }
      for (std::size_t k = 0; k < n_t; ++k) table.cells[k].add(sample[k] / static_cast<double>(starts_per_walk));
      table.jumps += seed_walk.jumps();
    }
    return table;
  });

  TwoTimeEstimate out;
  out.tau = tau_grid;
  out.n_walks = n_walks;
  out.base_seed = base_seed;
  for (const auto& m : total.cells) {
    out.mean.push_back(m.mean);
    out.std_error.push_back(m.std_error());
  }
  return out;
}

}  // namespace mmcqed
