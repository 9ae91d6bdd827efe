#include "dbm/ensembles.hpp"

#include <cmath>
#include <string>

namespace dbm {

namespace {

void check_size(Eigen::Index N) {
  if (N < 1) throw InvalidArgument("ensemble size N must be >= 1");
}

// Adds a GOE increment of variance dt to H in place.
void add_goe(SymmetricMatrixd& H, double dt, std::mt19937_64& gen) {
  const Eigen::Index N = H.dim();
  const double off_sd = std::sqrt(dt / static_cast<double>(N));
  const double diag_sd = std::sqrt(2.0 * dt / static_cast<double>(N));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < N; ++i) {
    H.set(i, i, H(i, i) + diag_sd * normal(gen));
    for (Eigen::Index j = i + 1; j < N; ++j) {
      H.set(i, j, H(i, j) + off_sd * normal(gen));
    }
  }
}

}  // namespace

SeedSpec derive_stream(std::uint64_t master_seed, std::uint64_t trial_index) {
  return SeedSpec{master_seed, trial_index};
}

std::mt19937_64 make_generator(const SeedSpec& seed) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed.master_seed), hi(seed.master_seed), lo(seed.stream_id),
                    hi(seed.stream_id)};
  return std::mt19937_64(seq);
}

SymmetricMatrixd sample_goe(Eigen::Index N, double t, std::mt19937_64& gen) {
  check_size(N);
  if (!(t >= 0.0)) throw InvalidArgument("sample_goe: t must be >= 0");
  SymmetricMatrixd H(N);
  if (t > 0.0) add_goe(H, t, gen);
  return H;
}

SymmetricMatrixd sample_goe(Eigen::Index N, double t, const SeedSpec& seed) {
  auto gen = make_generator(seed);
  return sample_goe(N, t, gen);
}

std::vector<SymmetricMatrixd> sample_path(Eigen::Index N, std::span<const double> t_grid,
                                          const SeedSpec& seed) {
  check_size(N);
  if (t_grid.empty()) throw InvalidArgument("sample_path: empty time grid");
  if (!(t_grid.front() >= 0.0)) throw InvalidArgument("sample_path: grid must start at t >= 0");
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    if (!(t_grid[k] > t_grid[k - 1])) {
      throw InvalidArgument("sample_path: time grid must be strictly increasing");
    }
  }
  auto gen = make_generator(seed);
  std::vector<SymmetricMatrixd> path;
  path.reserve(t_grid.size());
  SymmetricMatrixd H(N);
  double previous = 0.0;
  for (double t : t_grid) {
    const double dt = t - previous;
    if (dt > 0.0) add_goe(H, dt, gen);
    path.push_back(H);
    previous = t;
  }
  return path;
}

SymmetricMatrixd minor_truncate(const SymmetricMatrixd& X, Eigen::Index n) {
  if (n < 1 || n > X.dim()) {
    throw InvalidArgument("minor_truncate: n = " + std::to_string(n) + " outside [1, " +
                          std::to_string(X.dim()) + "]");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.dim(), X.dim());
  out.topLeftCorner(n, n) = X.matrix().topLeftCorner(n, n);
  return SymmetricMatrixd::from_dense(out);
}

SymmetricMatrixd rank_one(const Eigen::VectorXd& psi) {
  check_size(psi.size());
  // Mirror the upper triangle so rounding cannot break symmetry.
  SymmetricMatrixd A(psi.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    for (Eigen::Index j = i; j < psi.size(); ++j) A.set(i, j, psi(i) * psi(j));
  }
  return A;
}

SymmetricMatrixd sample_bernoulli(Eigen::Index N, double p, const SeedSpec& seed) {
  check_size(N);
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("sample_bernoulli: p must lie in [0, 1]");
  auto gen = make_generator(seed);
  std::bernoulli_distribution coin(p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  SymmetricMatrixd X(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i; j < N; ++j) X.set(i, j, coin(gen) ? scale : 0.0);
  }
  return X;
}

SymmetricMatrixd sample(const EnsembleSpec& spec, const SeedSpec& seed) {
  switch (spec.kind) {
    case EnsembleKind::goe_snapshot:
    case EnsembleKind::dyson_increment:
      return sample_goe(spec.N, spec.t_or_dt, seed);
    case EnsembleKind::bernoulli:
      return sample_bernoulli(spec.N, spec.p, seed);
  }
  throw InvalidArgument("sample: unknown ensemble kind");
}

}  // namespace dbm
