#include "mmcqed/hilbert.hpp"

#include <cmath>
#include <sstream>

#include "mmcqed/errors.hpp"

namespace mmcqed {

HilbertSpace::HilbertSpace(std::vector<int> cutoffs) : cutoffs_(std::move(cutoffs)) {
  if (cutoffs_.empty()) throw ConfigError("cutoffs: at least one mode is required");
  for (std::size_t m = 0; m < cutoffs_.size(); ++m) {
    if (cutoffs_[m] < 1) {
      throw ConfigError("cutoffs[" + std::to_string(m) + "]: photon cutoff must be >= 1, got " +
                        std::to_string(cutoffs_[m]));
    }
  }
  const int factors = mode_count() + 1;
  strides_.assign(factors, 1);
  for (int f = factors - 2; f >= 0; --f) strides_[f] = strides_[f + 1] * factor_dim(f + 1);
  total_dim_ = strides_[0] * qubit_dim();
}

std::size_t HilbertSpace::factor_dim(int factor) const {
  if (factor == 0) return qubit_dim();
  return static_cast<std::size_t>(cutoffs_.at(factor - 1)) + 1;
}

std::size_t HilbertSpace::index(const BasisState& s) const {
  if (s.qubit < 0 || s.qubit > 1 || s.photons.size() != cutoffs_.size()) {
    throw SpaceMismatch("basis state does not match the space layout");
  }
  std::size_t idx = static_cast<std::size_t>(s.qubit) * strides_[0];
  for (int m = 0; m < mode_count(); ++m) {
    if (s.photons[m] < 0 || s.photons[m] > cutoffs_[m]) {
      throw SpaceMismatch("photon number outside the truncated space");
    }
    idx += static_cast<std::size_t>(s.photons[m]) * strides_[m + 1];
  }
  return idx;
}

BasisState HilbertSpace::state(std::size_t index) const {
  BasisState s;
  s.qubit = digit(index, 0);
  s.photons.resize(cutoffs_.size());
  for (int m = 0; m < mode_count(); ++m) s.photons[m] = digit(index, m + 1);
  return s;
}

HilbertSpace make_space(std::vector<int> cutoffs) { return HilbertSpace(std::move(cutoffs)); }

Operator::Operator(HilbertSpace space, SparseMatrix matrix)
    : space_(std::move(space)), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(space_.total_dim());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw SpaceMismatch("operator matrix shape does not match space dimension");
  }
  matrix_.makeCompressed();
}

Operator::Operator(HilbertSpace space, const DenseMatrix& matrix)
    : Operator(std::move(space), SparseMatrix(matrix.sparseView(0.0, 0.0))) {}

void Operator::require_same_space(const Operator& other) const {
  if (!(space_ == other.space_)) throw SpaceMismatch("operators live on different spaces");
}

Operator Operator::adjoint() const { return Operator(space_, SparseMatrix(matrix_.adjoint())); }

double Operator::hermiticity_error() const {
  const double n = matrix_.norm();
  if (n == 0.0) return 0.0;
  return SparseMatrix(matrix_ - SparseMatrix(matrix_.adjoint())).norm() / n;
}

Operator& Operator::operator+=(const Operator& other) {
  require_same_space(other);
  matrix_ = matrix_ + other.matrix_;
  return *this;
}

Operator& Operator::operator-=(const Operator& other) {
  require_same_space(other);
  matrix_ = matrix_ - other.matrix_;
  return *this;
}

Operator& Operator::operator*=(Complex scale) {
  matrix_ *= scale;
  return *this;
}

Operator operator*(const Operator& a, const Operator& b) {
  a.require_same_space(b);
  SparseMatrix product = (a.matrix_ * b.matrix_).pruned();
  return Operator(a.space_, std::move(product));
}

Vector Operator::apply(const Vector& v) const {
  if (v.size() != static_cast<Eigen::Index>(dim())) throw SpaceMismatch("vector size mismatch");
  return matrix_ * v;
}

std::string Operator::to_coo() const {
  std::ostringstream out;
  out.precision(17);
  out << "# dim " << dim() << " cutoffs";
  for (int c : space_.cutoffs()) out << ' ' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < matrix_.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(matrix_, r); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag()
          << '\n';
    }
  }
  return out.str();
}

Operator Operator::from_coo(const HilbertSpace& space, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Eigen::Triplet<Complex>> triplets;
  const auto n = static_cast<long long>(space.total_dim());
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long long r = 0, c = 0;
    double re = 0, im = 0;
    if (!(ls >> r >> c >> re >> im) || r < 0 || c < 0 || r >= n || c >= n) {
      throw ConfigError("malformed coordinate entry: " + line);
    }
    triplets.emplace_back(r, c, Complex(re, im));
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return Operator(space, std::move(m));
}

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }
Operator anticommutator(const Operator& a, const Operator& b) { return a * b + b * a; }

Operator embed(const HilbertSpace& space, int factor, const DenseMatrix& local) {
  const auto d = static_cast<Eigen::Index>(space.factor_dim(factor));
  if (local.rows() != d || local.cols() != d) {
    throw SpaceMismatch("local operator does not match factor dimension");
  }
  const std::size_t stride = space.factor_stride(factor);
  const std::size_t n = space.total_dim();
  std::vector<Eigen::Triplet<Complex>> triplets;
  for (std::size_t col = 0; col < n; ++col) {
    const int k = space.digit(col, factor);
    for (Eigen::Index kp = 0; kp < d; ++kp) {
      const Complex v = local(kp, k);
      if (v == Complex{}) continue;
      const std::size_t row = col + (static_cast<std::size_t>(kp) * stride) - k * stride;
      triplets.emplace_back(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col), v);
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return Operator(space, std::move(m));
}

Operator identity(const HilbertSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.total_dim());
  SparseMatrix m(n, n);
  m.setIdentity();
  return Operator(space, std::move(m));
}

Operator annihilator(const HilbertSpace& space, int mode) {
  if (mode < 0 || mode >= space.mode_count()) {
    throw ConfigError("mode index " + std::to_string(mode) + " out of range");
  }
  const int cutoff = space.cutoffs()[mode];
  DenseMatrix a = DenseMatrix::Zero(cutoff + 1, cutoff + 1);
  for (int n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return embed(space, mode + 1, a);
}

Operator creator(const HilbertSpace& space, int mode) { return annihilator(space, mode).adjoint(); }

Operator number(const HilbertSpace& space, int mode) {
  if (mode < 0 || mode >= space.mode_count()) {
    throw ConfigError("mode index " + std::to_string(mode) + " out of range");
  }
  const int cutoff = space.cutoffs()[mode];
  DenseMatrix n = DenseMatrix::Zero(cutoff + 1, cutoff + 1);
  for (int k = 0; k <= cutoff; ++k) n(k, k) = static_cast<double>(k);
  return embed(space, mode + 1, n);
}

Operator qubit_op(const HilbertSpace& space, QubitOp which) {
  DenseMatrix s = DenseMatrix::Zero(2, 2);
  switch (which) {
    case QubitOp::SigmaPlus: s(1, 0) = 1.0; break;   // |e><g|
    case QubitOp::SigmaMinus: s(0, 1) = 1.0; break;  // |g><e|
    case QubitOp::SigmaZ: s(1, 1) = 1.0; s(0, 0) = -1.0; break;
    case QubitOp::SigmaX: s(0, 1) = 1.0; s(1, 0) = 1.0; break;
  }
  return embed(space, 0, s);
}

QubitOp parse_qubit_op(const std::string& name) {
  if (name == "sigma_plus") return QubitOp::SigmaPlus;
  if (name == "sigma_minus") return QubitOp::SigmaMinus;
  if (name == "sigma_z") return QubitOp::SigmaZ;
  if (name == "sigma_x") return QubitOp::SigmaX;
  throw ConfigError("unknown qubit operator '" + name + "'");
}

Operator low_photon_projector(const HilbertSpace& space, std::span<const int> max_photons) {
  const auto n = static_cast<Eigen::Index>(space.total_dim());
  std::vector<Eigen::Triplet<Complex>> triplets;
  for (Eigen::Index i = 0; i < n; ++i) {
    bool keep = true;
    for (int m = 0; m < space.mode_count() && keep; ++m) {
      const int limit = m < static_cast<int>(max_photons.size()) ? max_photons[m] : -1;
      if (limit >= 0 && space.digit(static_cast<std::size_t>(i), m + 1) > limit) keep = false;
    }
    if (keep) triplets.emplace_back(i, i, 1.0);
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return Operator(space, std::move(m));
}

namespace {
std::int64_t binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t r = 1;
  for (std::int64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}
}  // namespace

std::int64_t manifold_dimension(int modes, int excitations) {
  if (modes < 1 || excitations < 1) {
    throw ConfigError("manifold_dimension requires modes >= 1 and excitations >= 1");
  }
  const std::int64_t m = modes, n = excitations;
  // photons carry all N excitations, or N-1 with the qubit excited
  return binomial(n + m - 1, m - 1) + binomial(n + m - 2, m - 1);
}

}  // namespace mmcqed
