#pragma once

// Truncated qubit + multimode Fock space and sparse operators on it.
//
// Basis ordering is fixed: the qubit index varies slowest, followed by the
// modes in configuration order (the last mode varies fastest). Qubit index 0
// is |g>, index 1 is |e>.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace mmcqed {

using Complex = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using DenseMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

struct BasisState {
  int qubit = 0;               // 0 = g, 1 = e
  std::vector<int> photons;    // one occupation per mode
};

class HilbertSpace {
 public:
  HilbertSpace() = default;
  /// Throws ConfigError for an empty list or any cutoff below 1.
  explicit HilbertSpace(std::vector<int> cutoffs);

  const std::vector<int>& cutoffs() const { return cutoffs_; }
  int mode_count() const { return static_cast<int>(cutoffs_.size()); }
  std::size_t total_dim() const { return total_dim_; }
  static constexpr std::size_t qubit_dim() { return 2; }
  /// Dimension of factor `factor`: 0 is the qubit, k >= 1 is mode k-1.
  std::size_t factor_dim(int factor) const;
  std::size_t factor_stride(int factor) const { return strides_.at(factor); }

  std::size_t index(const BasisState& state) const;
  BasisState state(std::size_t index) const;
  /// Digit of basis index `index` in factor `factor`.
  int digit(std::size_t index, int factor) const {
    return static_cast<int>((index / strides_[factor]) % factor_dim(factor));
  }

  friend bool operator==(const HilbertSpace& a, const HilbertSpace& b) {
    return a.cutoffs_ == b.cutoffs_;
  }

 private:
  std::vector<int> cutoffs_;
  std::vector<std::size_t> strides_;  // factor 0 (qubit) first
  std::size_t total_dim_ = 0;
};

HilbertSpace make_space(std::vector<int> cutoffs);

/// Complex sparse operator bound to a HilbertSpace. Immutable.
class Operator {
 public:
  Operator() = default;
  Operator(HilbertSpace space, SparseMatrix matrix);
  Operator(HilbertSpace space, const DenseMatrix& matrix);

  const HilbertSpace& space() const { return space_; }
  const SparseMatrix& matrix() const { return matrix_; }
  std::size_t dim() const { return space_.total_dim(); }
  DenseMatrix dense() const { return DenseMatrix(matrix_); }
  Complex element(std::size_t row, std::size_t col) const {
    return matrix_.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }

  Operator adjoint() const;
  /// Frobenius norm of the entries.
  double norm() const { return matrix_.norm(); }
  /// Relative Frobenius deviation from Hermiticity, ||A - A^dag|| / ||A||.
  double hermiticity_error() const;

  Operator& operator+=(const Operator& other);
  Operator& operator-=(const Operator& other);
  Operator& operator*=(Complex scale);

  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
  friend Operator operator*(Operator a, Complex s) { return a *= s; }
  friend Operator operator*(Complex s, Operator a) { return a *= s; }
  friend Operator operator*(const Operator& a, const Operator& b);
  Vector apply(const Vector& v) const;

  /// Coordinate-list text: one "row col re im" line per stored entry.
  std::string to_coo() const;
  static Operator from_coo(const HilbertSpace& space, const std::string& text);

 private:
  void require_same_space(const Operator& other) const;

  HilbertSpace space_;
  SparseMatrix matrix_;
};

Operator commutator(const Operator& a, const Operator& b);
Operator anticommutator(const Operator& a, const Operator& b);

/// Lift a local matrix on one factor (0 = qubit, k = mode k-1) to the space.
Operator embed(const HilbertSpace& space, int factor, const DenseMatrix& local);

Operator identity(const HilbertSpace& space);
Operator annihilator(const HilbertSpace& space, int mode);
Operator creator(const HilbertSpace& space, int mode);
Operator number(const HilbertSpace& space, int mode);

enum class QubitOp { SigmaPlus, SigmaMinus, SigmaZ, SigmaX };
Operator qubit_op(const HilbertSpace& space, QubitOp which);
QubitOp parse_qubit_op(const std::string& name);

/// Projector onto basis states whose photon numbers are all <= `max_photons`
/// (negative entries mean "no restriction" for that mode).
Operator low_photon_projector(const HilbertSpace& space, std::span<const int> max_photons);

/// Number of basis states of qubit + `modes` modes carrying exactly
/// `excitations` excitations (qubit excitation counts as one).
std::int64_t manifold_dimension(int modes, int excitations);

}  // namespace mmcqed
