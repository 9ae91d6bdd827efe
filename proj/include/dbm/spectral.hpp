#ifndef DBM_SPECTRAL_HPP_
#define DBM_SPECTRAL_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dbm/ensembles.hpp"
#include "dbm/errors.hpp"

namespace dbm {

/// Eigenvalues sorted descending; column k of `eigenvectors` pairs with
/// eigenvalue k. Eigenvector signs are arbitrary.
template <typename Scalar>
struct SpectralDecomposition {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector eigenvalues;
  Matrix eigenvectors;

  Eigen::Index dim() const { return eigenvalues.size(); }
};

/// Squared overlaps values(i, j) = <Phi_i | Psi_j>^2 between the n genuine
/// eigenvectors of an embedded minor and the N eigenvectors of the full
/// matrix. Rows and columns follow descending eigenvalue order.
template <typename Scalar>
struct OverlapGrid {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Eigen::Index n = 0;
  Eigen::Index N = 0;
  Matrix values;
  Vector minor_evals;
  Vector full_evals;
};

struct InterlacingCheck {
  bool holds = true;
  double worst_margin = 0.0;  // min slack over all inequalities; negative when violated
};

template <typename Scalar>
SpectralDecomposition<Scalar> eig_sym(const SymmetricMatrix<Scalar>& X) {
  using Matrix = typename SymmetricMatrix<Scalar>::Matrix;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(X.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericError("eig_sym: symmetric eigensolver failed for a " + std::to_string(X.dim()) +
                       "x" + std::to_string(X.dim()) + " matrix");
  }
  SpectralDecomposition<Scalar> out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

/// Decomposition of the N x N embedded minor built from the decomposition of
/// its n x n block: genuine eigenvectors are zero-padded, the null space is
/// spanned by e_{n+1}, ..., e_N with eigenvalue exactly 0.
template <typename Scalar>
SpectralDecomposition<Scalar> embed_minor_decomposition(const SpectralDecomposition<Scalar>& block,
                                                        Eigen::Index N) {
  const Eigen::Index n = block.dim();
  if (N < n) throw InvalidArgument("embed_minor_decomposition: N smaller than block size");
  SpectralDecomposition<Scalar> out;
  out.eigenvalues.resize(N);
  out.eigenvectors = SpectralDecomposition<Scalar>::Matrix::Zero(N, N);
  // Genuine positive pairs, then the null block, then the rest (ties at 0
  // keep the genuine pair first).
  Eigen::Index col = 0;
  Eigen::Index k = 0;
  for (; k < n && block.eigenvalues(k) > Scalar(0); ++k, ++col) {
    out.eigenvalues(col) = block.eigenvalues(k);
    out.eigenvectors.col(col).head(n) = block.eigenvectors.col(k);
  }
  for (; k < n && block.eigenvalues(k) == Scalar(0); ++k, ++col) {
    out.eigenvalues(col) = block.eigenvalues(k);
    out.eigenvectors.col(col).head(n) = block.eigenvectors.col(k);
  }
  for (Eigen::Index z = n; z < N; ++z, ++col) {
    out.eigenvalues(col) = Scalar(0);
    out.eigenvectors(z, col) = Scalar(1);
  }
  for (; k < n; ++k, ++col) {
    out.eigenvalues(col) = block.eigenvalues(k);
    out.eigenvectors.col(col).head(n) = block.eigenvectors.col(k);
  }
  return out;
}

/// Decomposes the embedded minor through its n x n block (O(n^3) instead of
/// O(N^3)).
template <typename Scalar>
SpectralDecomposition<Scalar> eig_embedded_minor(const SymmetricMatrix<Scalar>& X, Eigen::Index n) {
  return embed_minor_decomposition(eig_sym(X.top_left(n)), X.dim());
}

/// Builds the overlap grid. The n genuine minor eigenvectors are told apart
/// from the N-n null-space ones by support: a null vector carries at most
/// 1e-8 squared weight on the first n coordinates.
template <typename Scalar>
OverlapGrid<Scalar> overlap_grid(const SpectralDecomposition<Scalar>& full,
                                 const SpectralDecomposition<Scalar>& minor, Eigen::Index n) {
  const Eigen::Index N = full.dim();
  if (minor.dim() != N) throw InvalidArgument("overlap_grid: full and minor sizes differ");
  if (n < 1 || n > N) throw InvalidArgument("overlap_grid: n out of range");
  constexpr double kSupportTol = 1e-8;
  std::vector<Eigen::Index> genuine;
  genuine.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < N; ++k) {
    const auto v = minor.eigenvectors.col(k);
    const double head = static_cast<double>(v.head(n).squaredNorm());
    const double tail = static_cast<double>(v.tail(N - n).squaredNorm());
    if (head <= kSupportTol) continue;
    if (tail > kSupportTol) {
      throw DegenerateInputError(
          "overlap_grid: minor eigenvector " + std::to_string(k + 1) + " (eigenvalue " +
          std::to_string(static_cast<double>(minor.eigenvalues(k))) +
          ") mixes minor and null-space support");
    }
    genuine.push_back(k);
  }
  if (static_cast<Eigen::Index>(genuine.size()) != n) {
    throw DegenerateInputError("overlap_grid: found " + std::to_string(genuine.size()) +
                               " minor eigenvectors, expected " + std::to_string(n));
  }
  OverlapGrid<Scalar> grid;
  grid.n = n;
  grid.N = N;
  grid.full_evals = full.eigenvalues;
  grid.minor_evals.resize(n);
  typename OverlapGrid<Scalar>::Matrix phi(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    grid.minor_evals(r) = minor.eigenvalues(genuine[static_cast<std::size_t>(r)]);
    phi.col(r) = minor.eigenvectors.col(genuine[static_cast<std::size_t>(r)]).head(n);
  }
  grid.values = (phi.transpose() * full.eigenvectors.topRows(n)).array().square().matrix();
  return grid;
}

/// lambda_{i+N-n} - tol <= mu_i <= lambda_i + tol for all i, with
/// tol = 1e-9 * max(1, |lambda|_inf). Both inputs descending.
template <typename DerivedA, typename DerivedB>
InterlacingCheck check_interlacing(const Eigen::MatrixBase<DerivedA>& full_evals,
                                   const Eigen::MatrixBase<DerivedB>& minor_evals) {
  const Eigen::Index N = full_evals.size();
  const Eigen::Index n = minor_evals.size();
  if (n > N) throw InvalidArgument("check_interlacing: minor longer than full spectrum");
  const double tol =
      1e-9 * std::max(1.0, N > 0 ? static_cast<double>(full_evals.cwiseAbs().maxCoeff()) : 0.0);
  InterlacingCheck out;
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = static_cast<double>(minor_evals(i));
    const double upper = static_cast<double>(full_evals(i)) - mu;
    const double lower = mu - static_cast<double>(full_evals(i + N - n));
    out.worst_margin = std::min({out.worst_margin, upper, lower});
  }
  out.holds = n == 0 || out.worst_margin >= -tol;
  return out;
}

/// 1-based rank clamp(round(x * size), 1, size). Rank 1 is the LARGEST
/// eigenvalue: x is the spectral mass above the eigenvalue.
Eigen::Index quantile_index(double x, Eigen::Index size);

/// max |row sum - 1| over the grid.
template <typename Scalar>
double normalization_audit(const OverlapGrid<Scalar>& grid) {
  return static_cast<double>((grid.values.rowwise().sum().array() - Scalar(1)).abs().maxCoeff());
}

/// max_ij |(V diag(lambda) V^T - X)_ij| / max(1, max_ij |X_ij|).
template <typename Scalar>
double reconstruction_error(const SpectralDecomposition<Scalar>& d, const SymmetricMatrix<Scalar>& X) {
  const auto& V = d.eigenvectors;
  const typename SymmetricMatrix<Scalar>::Matrix rebuilt =
      V * d.eigenvalues.asDiagonal() * V.transpose();
  const double scale = std::max(1.0, static_cast<double>(X.matrix().cwiseAbs().maxCoeff()));
  return static_cast<double>((rebuilt - X.matrix()).cwiseAbs().maxCoeff()) / scale;
}

/// max_ij |(V^T V - I)_ij|.
template <typename Scalar>
double orthonormality_error(const SpectralDecomposition<Scalar>& d) {
  const auto gram = d.eigenvectors.transpose() * d.eigenvectors;
  return static_cast<double>(
      (gram - SpectralDecomposition<Scalar>::Matrix::Identity(d.dim(), d.dim())).cwiseAbs().maxCoeff());
}

/// Uniform-bin histogram of samples on [lo, hi); samples outside are dropped.
struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;
  std::size_t total = 0;  // all samples offered, including dropped ones

  double width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double center(std::size_t b) const { return lo + (static_cast<double>(b) + 0.5) * width(); }
  /// Fraction of all samples that fell in bin b, divided by the bin width.
  double density(std::size_t b) const;
};

Histogram histogram(std::span<const double> samples, std::size_t bins, double lo, double hi);

/// Bin index of x among `bins` uniform bins on [lo, hi), or -1 when outside.
long bin_of(double x, std::size_t bins, double lo, double hi);

}  // namespace dbm

#endif  // DBM_SPECTRAL_HPP_
