#ifndef DBM_ENSEMBLES_HPP_
#define DBM_ENSEMBLES_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dbm/errors.hpp"

namespace dbm {

/// Dense real symmetric matrix. Every write goes to both (i,j) and (j,i), so
/// symmetry holds bitwise.
template <typename Scalar>
class SymmetricMatrix {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Index = Eigen::Index;

  explicit SymmetricMatrix(Index dim) : data_(Matrix::Zero(check_dim(dim), dim)) {}

  static SymmetricMatrix zero(Index dim) { return SymmetricMatrix(dim); }

  static SymmetricMatrix identity(Index dim) {
    SymmetricMatrix m(dim);
    m.data_.setIdentity();
    return m;
  }

  /// Accepts only exactly symmetric input.
  template <typename Derived>
  static SymmetricMatrix from_dense(const Eigen::MatrixBase<Derived>& dense) {
    if (dense.rows() != dense.cols()) {
      throw InvalidArgument("SymmetricMatrix: input is not square");
    }
    SymmetricMatrix m(dense.rows());
    m.data_ = dense.template cast<Scalar>();
    if (m.data_ != m.data_.transpose()) {
      throw InvalidArgument("SymmetricMatrix: input is not exactly symmetric");
    }
    return m;
  }

  Index dim() const { return data_.rows(); }
  Scalar operator()(Index i, Index j) const { return data_(i, j); }

  void set(Index i, Index j, Scalar value) {
    data_(i, j) = value;
    data_(j, i) = value;
  }

  const Matrix& matrix() const { return data_; }

  SymmetricMatrix& operator+=(const SymmetricMatrix& other) {
    if (other.dim() != dim()) throw InvalidArgument("SymmetricMatrix: dimension mismatch");
    data_ += other.data_;
    return *this;
  }

  friend SymmetricMatrix operator+(SymmetricMatrix lhs, const SymmetricMatrix& rhs) {
    lhs += rhs;
    return lhs;
  }

  SymmetricMatrix& operator*=(Scalar s) {
    data_ *= s;
    return *this;
  }

  /// Top-left k x k block as a k-dimensional matrix.
  SymmetricMatrix top_left(Index k) const {
    if (k < 1 || k > dim()) throw InvalidArgument("SymmetricMatrix: block size out of range");
    SymmetricMatrix m(k);
    m.data_ = data_.topLeftCorner(k, k);
    return m;
  }

  bool operator==(const SymmetricMatrix& other) const {
    return dim() == other.dim() && data_ == other.data_;
  }

 private:
  static Index check_dim(Index dim) {
    if (dim < 1) throw InvalidArgument("SymmetricMatrix: dimension must be >= 1");
    return dim;
  }

  Matrix data_;
};

using SymmetricMatrixd = SymmetricMatrix<double>;

/// Identifies one reproducible random stream: the pair is fed verbatim to a
/// std::seed_seq, which then seeds a std::mt19937_64.
struct SeedSpec {
  std::uint64_t master_seed = 42;
  std::uint64_t stream_id = 0;

  bool operator==(const SeedSpec&) const = default;
};

enum class EnsembleKind { goe_snapshot, dyson_increment, bernoulli };

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::goe_snapshot;
  Eigen::Index N = 1;
  double t_or_dt = 0.0;
  double p = 0.0;  // read only for bernoulli
};

/// Stream k of a Monte Carlo run with the given master seed. The mapping is
/// the identity on the pair, so it is injective and stable across versions.
SeedSpec derive_stream(std::uint64_t master_seed, std::uint64_t trial_index);

/// Generator for a stream: mt19937_64 seeded from the four 32-bit halves
/// (master lo, master hi, stream lo, stream hi) through std::seed_seq.
std::mt19937_64 make_generator(const SeedSpec& seed);

/// H_t: diagonal entries N(0, 2t/N), off-diagonal N(0, t/N). Entries are
/// drawn row by row over the upper triangle (diagonal first in each row).
SymmetricMatrixd sample_goe(Eigen::Index N, double t, const SeedSpec& seed);

/// Same law as sample_goe, drawn from a caller-owned generator.
SymmetricMatrixd sample_goe(Eigen::Index N, double t, std::mt19937_64& gen);

/// Cumulative H at each time of an ascending grid, built from independent
/// Gaussian increments drawn from one stream.
std::vector<SymmetricMatrixd> sample_path(Eigen::Index N, std::span<const double> t_grid,
                                          const SeedSpec& seed);

/// N x N matrix equal to X on the top-left n x n block, zero elsewhere.
SymmetricMatrixd minor_truncate(const SymmetricMatrixd& X, Eigen::Index n);

/// psi psi^T.
SymmetricMatrixd rank_one(const Eigen::VectorXd& psi);

/// Upper triangle (diagonal included) i.i.d. Bernoulli(p) / sqrt(N).
SymmetricMatrixd sample_bernoulli(Eigen::Index N, double p, const SeedSpec& seed);

/// Dispatches on spec.kind; goe_snapshot and dyson_increment share the law.
SymmetricMatrixd sample(const EnsembleSpec& spec, const SeedSpec& seed);

}  // namespace dbm

#endif  // DBM_ENSEMBLES_HPP_
