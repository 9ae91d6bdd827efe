#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "dbm/errors.hpp"
#include "dbm/montecarlo.hpp"
#include "parallel.hpp"

namespace dbm {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

/// Signed overlaps a(i, j) = <Phi_i | Psi_j>, minor ranks by full ranks.
Eigen::MatrixXd signed_overlaps(const SpectralDecomposition<double>& full,
                                const SpectralDecomposition<double>& minor_block) {
  const Index n = minor_block.dim();
  return minor_block.eigenvectors.transpose() * full.eigenvectors.topRows(n);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  const double m = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= m;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = xs.size() > 1 ? std::sqrt(ss / (m - 1.0) / m) : 0.0;
  return out;
}

void check_probe_args(Index N, Index n, double t, double dt) {
  require(N >= 2 && N <= 100, "probe: N must lie in [2, 100]");
  require(n >= 1 && n <= N - 1, "probe: n must lie in [1, N-1]");
  require(t > 0.0, "probe: t must be positive");
  require(dt > 0.0, "probe: dt must be positive");
}

}  // namespace

std::vector<CorrelationIndex> default_correlation_design(Index N, Index n) {
  const Index I[3] = {0, n / 2, n - 1};
  const Index J[3] = {0, N / 2, N - 1};
  std::vector<CorrelationIndex> design;
  for (int a = 0; a < 3; ++a) {
    for (int b = a; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        for (int d = c; d < 3; ++d) design.push_back({I[a], I[b], J[c], J[d]});
      }
    }
  }
  return design;
}

CorrelationIndex strongest_pair(const SymmetricMatrixd& X, Index n) {
  const auto full = eig_sym(X);
  const auto block = eig_sym(X.top_left(n));
  Index i = 0, j = 0;
  signed_overlaps(full, block).array().square().maxCoeff(&i, &j);
  return {i, i, j, j};
}

CorrelationProbeReport correlation_probe(Index N, Index n, double t, std::size_t samples,
                                         std::uint64_t seed, std::vector<CorrelationIndex> design,
                                         double dt, unsigned threads) {
  check_probe_args(N, n, t, dt);
  require(samples >= 10000, "correlation_probe: samples must be >= 10^4");
  if (design.empty()) design = default_correlation_design(N, n);
  for (const auto& d : design) {
    require(d.i >= 0 && d.i < n && d.l >= 0 && d.l < n, "correlation_probe: minor rank out of range");
    require(d.j >= 0 && d.j < N && d.k >= 0 && d.k < N, "correlation_probe: full rank out of range");
  }

  const SymmetricMatrixd X = sample_goe(N, t, derive_stream(seed, 0));
  const auto full = eig_sym(X);
  const auto block = eig_sym(X.top_left(n));
  const Eigen::MatrixXd a = signed_overlaps(full, block);

  // Only the probed eigenvectors enter the bilinear forms.
  std::map<Index, Index> minor_pos, full_pos;
  for (const auto& d : design) {
    minor_pos.emplace(d.i, 0);
    minor_pos.emplace(d.l, 0);
    full_pos.emplace(d.j, 0);
    full_pos.emplace(d.k, 0);
  }
  Eigen::MatrixXd phi(n, static_cast<Index>(minor_pos.size()));
  Eigen::MatrixXd psi(N, static_cast<Index>(full_pos.size()));
  Index c = 0;
  for (auto& [rank, pos] : minor_pos) {
    pos = c;
    phi.col(c++) = block.eigenvectors.col(rank);
  }
  c = 0;
  for (auto& [rank, pos] : full_pos) {
    pos = c;
    psi.col(c++) = full.eigenvectors.col(rank);
  }

  const auto slots = detail::run_trials<std::vector<double>>(samples, threads, [&](std::size_t s) {
    const SymmetricMatrixd dX = sample_goe(N, dt, derive_stream(seed, 1 + s));
    const Eigen::MatrixXd P = phi.transpose() * dX.matrix().topLeftCorner(n, n) * phi;
    const Eigen::MatrixXd Q = psi.transpose() * dX.matrix() * psi;
    std::vector<double> out(design.size());
    for (std::size_t e = 0; e < design.size(); ++e) {
      const auto& d = design[e];
      out[e] = P(minor_pos.at(d.i), minor_pos.at(d.l)) * Q(full_pos.at(d.j), full_pos.at(d.k));
    }
    return out;
  });

  CorrelationProbeReport r;
  r.N = N;
  r.n = n;
  r.t = t;
  r.samples = samples;
  const double inv_N = 1.0 / static_cast<double>(N);
  std::vector<double> column(samples);
  for (std::size_t e = 0; e < design.size(); ++e) {
    for (std::size_t s = 0; s < samples; ++s) {
      if (!slots[s].value) throw NumericError(slots[s].error);
      column[s] = (*slots[s].value)[e] / dt;
    }
    const MeanSe ms = mean_se(column);
    const auto& d = design[e];
    CorrelationEntry entry;
    entry.index = d;
    entry.estimate = ms.mean;
    entry.standard_error = ms.se;
    entry.theory = inv_N * (a(d.i, d.j) * a(d.l, d.k) + a(d.i, d.k) * a(d.l, d.j));
    r.max_abs_z = std::max(r.max_abs_z, std::abs(entry.z_score()));
    r.entries.push_back(entry);
  }
  return r;
}

double overlap_drift(const SpectralDecomposition<double>& full,
                     const SpectralDecomposition<double>& minor_block, Index i, Index j) {
  const Index N = full.dim();
  const Index n = minor_block.dim();
  require(i >= 0 && i < n && j >= 0 && j < N, "overlap_drift: index out of range");
  const Eigen::MatrixXd a = signed_overlaps(full, minor_block);
  const Eigen::MatrixXd O = a.array().square();
  const auto& lam = full.eigenvalues;
  const auto& mu = minor_block.eigenvalues;
  const double inv_N = 1.0 / static_cast<double>(N);

  double full_repulsion = 0.0;
  for (Index k = 0; k < N; ++k) {
    if (k == j) continue;
    const double gap = lam(j) - lam(k);
    full_repulsion += (O(i, k) - O(i, j)) / (gap * gap);
  }
  double minor_repulsion = 0.0;
  for (Index l = 0; l < n; ++l) {
    if (l == i) continue;
    const double gap = mu(i) - mu(l);
    minor_repulsion += (O(l, j) - O(i, j)) / (gap * gap);
  }
  double cross = 0.0;
  for (Index l = 0; l < n; ++l) {
    if (l == i) continue;
    for (Index k = 0; k < N; ++k) {
      if (k == j) continue;
      const double s = a(i, j) * a(l, k) + a(i, k) * a(l, j);
      cross += s * s / ((mu(i) - mu(l)) * (lam(j) - lam(k)));
    }
  }
  return inv_N * (full_repulsion + minor_repulsion) + 2.0 * inv_N * cross;
}

namespace {

struct DriftTrial {
  double change = 0.0;      // change of <i|j>^2, averaged over the antithetic pair
  double martingale = 0.0;  // the dW part evaluated on the increment
};

double pair_overlap(const SymmetricMatrixd& X, Index n, Index i, Index j) {
  const auto full = eig_sym(X);
  const auto block = eig_sym(X.top_left(n));
  const double a = block.eigenvectors.col(i).dot(full.eigenvectors.col(j).head(n));
  return a * a;
}

}  // namespace

DriftProbeReport drift_probe(Index N, Index n, double t, double dt, std::size_t trials,
                             std::uint64_t seed, std::optional<std::pair<Index, Index>> pair,
                             bool antithetic, unsigned threads) {
  check_probe_args(N, n, t, dt);
  require(trials >= 2, "drift_probe: trials must be >= 2");

  const SymmetricMatrixd X = sample_goe(N, t, derive_stream(seed, 0));
  const auto full = eig_sym(X);
  const auto block = eig_sym(X.top_left(n));
  const Eigen::MatrixXd a = signed_overlaps(full, block);

  Index i = n / 2, j = 0;
  if (pair) {
    i = pair->first;
    j = pair->second;
    require(i >= 0 && i < n && j >= 0 && j < N, "drift_probe: pair out of range");
  } else {
    a.row(i).array().square().maxCoeff(&j);
  }
  const double O = a(i, j) * a(i, j);

  const auto slots = detail::run_trials<DriftTrial>(trials, threads, [&](std::size_t k) {
    const SymmetricMatrixd dX = sample_goe(N, dt, derive_stream(seed, 1 + k));
    DriftTrial out;
    const double up = pair_overlap(X + dX, n, i, j);
    if (antithetic) {
      SymmetricMatrixd minus = dX;
      minus *= -1.0;
      out.change = 0.5 * (up + pair_overlap(X + minus, n, i, j)) - O;
    } else {
      out.change = up - O;
    }
    const Eigen::VectorXd dpsi = dX.matrix() * full.eigenvectors.col(j);
    const Eigen::VectorXd dphi = dX.matrix().topLeftCorner(n, n) * block.eigenvectors.col(i);
    double m = 0.0;
    for (Index c = 0; c < N; ++c) {
      if (c == j) continue;
      m += full.eigenvectors.col(c).dot(dpsi) * a(i, c) / (full.eigenvalues(j) - full.eigenvalues(c));
    }
    for (Index l = 0; l < n; ++l) {
      if (l == i) continue;
      m += block.eigenvectors.col(l).dot(dphi) * a(l, j) / (block.eigenvalues(i) - block.eigenvalues(l));
    }
    out.martingale = 2.0 * a(i, j) * m;
    return out;
  });

  std::vector<double> changes(trials), marts(trials);
  for (std::size_t k = 0; k < trials; ++k) {
    if (!slots[k].value) throw NumericError(slots[k].error);
    changes[k] = slots[k].value->change / dt;
    marts[k] = slots[k].value->martingale;
  }
  const MeanSe c = mean_se(changes);
  const MeanSe m = mean_se(marts);

  DriftProbeReport r;
  r.N = N;
  r.n = n;
  r.t = t;
  r.dt = dt;
  r.trials = trials;
  r.i = i;
  r.j = j;
  r.overlap = O;
  r.estimate = c.mean;
  r.standard_error = c.se;
  r.theory = overlap_drift(full, block, i, j);
  r.martingale_mean = m.mean;
  r.martingale_se = m.se;
  r.antithetic = antithetic;
  return r;
}

}  // namespace dbm
