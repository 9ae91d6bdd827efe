#include "dbm/montecarlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <string>

#include "dbm/errors.hpp"
#include "dbm/quadrature.hpp"
#include "dbm/theory.hpp"
#include "parallel.hpp"

namespace dbm {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr int kMinCiTrials = 100;
constexpr double kAbortFraction = 0.01;
constexpr double kAbsorbedEdgeFactor = 2.1;  // spike absorbed below 2 sqrt t + 0.1 sqrt t
constexpr double kBinMargin = 0.1;           // delta = 0.1 sqrt t
constexpr double kInteriorFraction = 0.15;   // interior: 0.15 (2 sqrt t) from each edge

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

double actual_q(Index N, Index n) { return static_cast<double>(n) / static_cast<double>(N); }

/// The decomposed (X, minor) pair of one trial with its overlap grid.
struct Pair {
  SpectralDecomposition<double> full;
  OverlapGrid<double> grid;
};

Pair decompose_pair(const SymmetricMatrixd& X, Index n, bool audit, AuditSummary& summary) {
  Pair p;
  p.full = eig_sym(X);
  const auto minor = eig_embedded_minor(X, n);
  p.grid = overlap_grid(p.full, minor, n);
  summary.pairs += 1;
  if (audit) {
    const auto inter = check_interlacing(p.full.eigenvalues, p.grid.minor_evals);
    summary.min_interlacing_margin = std::min(summary.min_interlacing_margin, inter.worst_margin);
    if (!inter.holds) summary.interlacing_failures += 1;
    summary.max_row_sum_deviation = std::max(summary.max_row_sum_deviation, normalization_audit(p.grid));
    summary.max_reconstruction_error =
        std::max({summary.max_reconstruction_error, reconstruction_error(p.full, X),
                  reconstruction_error(minor, minor_truncate(X, n))});
    summary.max_orthonormality_error =
        std::max(summary.max_orthonormality_error, orthonormality_error(p.full));
  }
  return p;
}

/// Fails the run when more than 1% of trials aborted; returns the abort count.
template <typename T>
std::size_t check_aborts(const std::vector<detail::TrialSlot<T>>& slots, const char* what) {
  std::size_t aborted = 0;
  const std::string* first = nullptr;
  for (const auto& s : slots) {
    if (!s.value) {
      ++aborted;
      if (!first) first = &s.error;
    }
  }
  if (static_cast<double>(aborted) > kAbortFraction * static_cast<double>(slots.size())) {
    throw NumericError(std::string(what) + ": " + std::to_string(aborted) + " of " +
                       std::to_string(slots.size()) + " trials aborted; first: " + *first);
  }
  return aborted;
}

void finish_coverage(ExperimentReport& r) {
  r.covered = 0;
  r.interior_count = 0;
  for (std::size_t b = 0; b < r.estimates.size(); ++b) {
    if (!r.interior[b]) continue;
    ++r.interior_count;
    if (r.estimates[b].contains(r.theory[b])) ++r.covered;
  }
  r.coverage = r.interior_count ? static_cast<double>(r.covered) / static_cast<double>(r.interior_count)
                                : kNaN;
}

double bin_lo(double lo, double hi, int bins, int b) { return lo + (hi - lo) * b / bins; }
double bin_center(double lo, double hi, int bins, int b) { return lo + (hi - lo) * (b + 0.5) / bins; }

/// Averages of f and f * weight over [a, b] against `weight`.
std::pair<double, double> weighted_averages(const std::function<double(double)>& f,
                                            const std::function<double(double)>& weight, double a,
                                            double b) {
  const double mass = integrate(weight, a, b, 4, 8);
  const double first = integrate([&](double x) { return f(x) * weight(x); }, a, b, 4, 8);
  const double second =
      integrate([&](double x) { const double w = weight(x); return f(x) * w * w; }, a, b, 4, 8);
  return {first / mass, second / mass};
}

Eigen::VectorXd psi_of(const ASpec& a, Index N, Index n) {
  if (a.psi) {
    require(a.psi->size() == N, "rank-one vector length differs from N");
    return *a.psi;
  }
  require(a.spike > 0.0, "rank-one spike must be positive");
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(N);
  if (a.recipe == RankOneRecipe::uniform) {
    psi.setConstant(std::sqrt(a.spike / static_cast<double>(N)));
  } else {
    psi.tail(N - n).setConstant(std::sqrt(a.spike / static_cast<double>(N - n)));
  }
  return psi;
}

/// Full-matrix density and kernel for bulk experiments.
struct BulkTheory {
  std::function<double(double)> rho;
  std::function<double(double, double)> W;  // (mu, lambda); throws DomainError when refused
  double edge_lo = 0.0;
  double edge_hi = 0.0;
  bool null_a = true;
};

/// Linear interpolation of a density tabulated on a uniform grid.
std::function<double(double)> tabulate(const std::function<double(double)>& f, double lo, double hi,
                                       int points) {
  std::vector<double> values(static_cast<std::size_t>(points));
  const double h = (hi - lo) / (points - 1);
  for (int k = 0; k < points; ++k) values[static_cast<std::size_t>(k)] = f(lo + h * k);
  return [values = std::move(values), lo, h, points](double x) {
    const double s = (x - lo) / h;
    if (s <= 0.0 || s >= points - 1) return 0.0;
    const auto k = static_cast<std::size_t>(s);
    const double w = s - static_cast<double>(k);
    return (1.0 - w) * values[k] + w * values[k + 1];
  };
}

BulkTheory make_bulk_theory(const SymmetricMatrixd& A, bool null_a, Index n, double t) {
  BulkTheory th;
  th.null_a = null_a;
  const double q = actual_q(A.dim(), n);
  if (null_a) {
    th.rho = [t](double x) { return semicircle_density(x, t); };
    th.W = [t, q](double mu, double lambda) { return W_goe(mu, lambda, t, q).value; };
    th.edge_lo = -2.0 * std::sqrt(t);
    th.edge_hi = 2.0 * std::sqrt(t);
    return th;
  }
  auto kernel = std::make_shared<GeneralKernel>(A, n, t);
  const auto& atoms = kernel->full_model().atoms;
  double lo = atoms.front().location, hi = atoms.front().location;
  for (const auto& at : atoms) {
    lo = std::min(lo, at.location);
    hi = std::max(hi, at.location);
  }
  lo -= 2.0 * std::sqrt(t) + 0.5;
  hi += 2.0 * std::sqrt(t) + 0.5;
  th.rho = tabulate([kernel](double x) { return kernel->full_boundary(x).rho; }, lo, hi, 801);
  const double h = (hi - lo) / 800;
  double first = kNaN, last = kNaN;
  for (int k = 0; k <= 800; ++k) {
    const double x = lo + h * k;
    if (th.rho(x) > BoundaryValues::kEdgeDensity) {
      if (std::isnan(first)) first = x;
      last = x;
    }
  }
  if (std::isnan(first)) throw NumericError("bulk theory: no support found for the full spectrum");
  th.edge_lo = first;
  th.edge_hi = last;
  th.W = [kernel](double mu, double lambda) { return kernel->W(mu, lambda).value; };
  return th;
}

struct BulkTrial {
  double mu = 0.0;
  std::vector<double> bin_mean;  // NaN where no eigenvalue fell in the bin
  AuditSummary audit;
};

}  // namespace

OverlapEstimate estimate_from_samples(double center, const std::vector<double>& samples) {
  OverlapEstimate e;
  e.center = center;
  e.n_samples = samples.size();
  if (samples.empty()) return e;
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double se = samples.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  e.mean = mean;
  e.ci_low = mean - kZ99 * se;
  e.ci_high = mean + kZ99 * se;
  return e;
}

void AuditSummary::merge(const AuditSummary& o) {
  pairs += o.pairs;
  max_row_sum_deviation = std::max(max_row_sum_deviation, o.max_row_sum_deviation);
  min_interlacing_margin = std::min(min_interlacing_margin, o.min_interlacing_margin);
  interlacing_failures += o.interlacing_failures;
  max_reconstruction_error = std::max(max_reconstruction_error, o.max_reconstruction_error);
  max_orthonormality_error = std::max(max_orthonormality_error, o.max_orthonormality_error);
}

void ExperimentConfig::validate() const {
  const bool bern = kind == ExperimentKind::bernoulli_bulk || kind == ExperimentKind::bernoulli_spike;
  require(trials >= 1, "trials must be >= 1");
  if (kind != ExperimentKind::spike_path) {
    require(trials >= kMinCiTrials,
            "trials must be >= " + std::to_string(kMinCiTrials) + " for confidence intervals");
  }
  require(q > 0.0 && q < 1.0, "q must lie in (0, 1)");
  if (kind != ExperimentKind::bernoulli_spike) {
    require(N >= 2, "N must be >= 2");
    require(n() >= 1 && n() <= N - 1, "round(q N) must lie in [1, N-1]");
  }
  if (!bern) require(t > 0.0 && std::isfinite(t), "t must be positive");
  require(bins >= 1, "bins must be >= 1");
  if (range_lo || range_hi) {
    require(range_lo && range_hi && *range_lo < *range_hi, "bin range needs lo < hi");
  }
  switch (kind) {
    case ExperimentKind::bulk:
      require(x >= 0.0 && x <= 1.0, "x must lie in [0, 1]");
      require(a.kind != MatrixKind::bernoulli, "bulk experiments take a deterministic A");
      break;
    case ExperimentKind::spike_spike:
    case ExperimentKind::spike_bulk:
    case ExperimentKind::spike_path:
      require(a.kind == MatrixKind::rank_one, "spike experiments need a rank-one A");
      break;
    case ExperimentKind::bernoulli_bulk:
      require(a.p > 0.0 && a.p < 1.0, "p must lie in (0, 1)");
      if (lambda_halfwidth) require(*lambda_halfwidth > 0.0, "lambda window half-width must be positive");
      break;
    case ExperimentKind::bernoulli_spike:
      require(a.p > 0.0 && a.p <= 1.0, "p must lie in (0, 1]");
      require(!N_list.empty(), "bernoulli spike mode needs at least one N");
      for (Index m : N_list) {
        const auto nm = static_cast<Index>(std::llround(q * static_cast<double>(m)));
        require(m >= 2 && nm >= 1 && nm <= m - 1, "every N needs round(q N) in [1, N-1]");
      }
      break;
  }
  if (kind == ExperimentKind::spike_path && !t_grid.empty()) {
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      require(t_grid[k] >= 0.0 && (k == 0 || t_grid[k] > t_grid[k - 1]),
              "t grid must be non-negative and strictly increasing");
    }
  }
}

SymmetricMatrixd build_initial_matrix(const ASpec& a, Index N, Index n) {
  switch (a.kind) {
    case MatrixKind::null:
      return SymmetricMatrixd::zero(N);
    case MatrixKind::rank_one:
      return rank_one(psi_of(a, N, n));
    case MatrixKind::explicit_matrix:
      require(a.matrix.has_value(), "explicit A missing");
      require(a.matrix->dim() == N, "explicit A dimension differs from N");
      return *a.matrix;
    case MatrixKind::bernoulli:
      break;
  }
  throw InvalidArgument("a Bernoulli matrix is sampled, not built");
}

SymmetricMatrixd diagonal_from_model(const SpectrumModel& model, Index N) {
  model.validate();
  const auto spikes = static_cast<Index>(model.spikes.size());
  require(N > spikes, "N must exceed the number of spikes");
  SymmetricMatrixd D(N);
  std::vector<double> used(model.atoms.size(), 0.0);
  for (Index k = 0; k < N - spikes; ++k) {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < model.atoms.size(); ++a) {
      const double score = model.atoms[a].weight * static_cast<double>(k + 1) - used[a];
      if (score > best_score) {
        best_score = score;
        best = a;
      }
    }
    used[best] += 1.0;
    D.set(k, k, model.atoms[best].location);
  }
  for (Index s = 0; s < spikes; ++s) {
    D.set(N - spikes + s, N - spikes + s, model.spikes[static_cast<std::size_t>(s)]);
  }
  return D;
}

ExperimentReport run_bulk_experiment(const ExperimentConfig& config) {
  require(config.kind == ExperimentKind::bulk, "run_bulk_experiment: config kind is not bulk");
  config.validate();
  const auto start = Clock::now();
  const Index N = config.N, n = config.n();
  const double t = config.t, q = actual_q(N, n);
  const SymmetricMatrixd A = build_initial_matrix(config.a, N, n);
  const bool null_a = config.a.kind == MatrixKind::null;
  const BulkTheory th = make_bulk_theory(A, null_a, n, t);

  const double delta = kBinMargin * std::sqrt(t);
  const double lo = config.range_lo.value_or(th.edge_lo + delta);
  const double hi = config.range_hi.value_or(th.edge_hi - delta);
  const int bins = config.bins;
  const auto ubins = static_cast<std::size_t>(bins);

  const auto slots = detail::run_trials<BulkTrial>(
      static_cast<std::size_t>(config.trials), config.threads, [&](std::size_t k) {
        BulkTrial out;
        SymmetricMatrixd X = sample_goe(N, t, derive_stream(config.master_seed, k));
        if (!null_a) X += A;
        const Pair p = decompose_pair(X, n, config.audit, out.audit);
        Index row = 0;
        if (config.mu_target) {
          (p.grid.minor_evals.array() - *config.mu_target).abs().minCoeff(&row);
        } else {
          row = quantile_index(config.x, n) - 1;
        }
        out.mu = p.grid.minor_evals(row);
        std::vector<double> sum(ubins, 0.0);
        std::vector<int> count(ubins, 0);
        for (Index j = 0; j < N; ++j) {
          const double lambda = p.full.eigenvalues(j);
          const long b = bin_of(lambda, ubins, lo, hi);
          if (b < 0) continue;
          double v = static_cast<double>(N) * p.grid.values(row, j);
          if (config.figure_mode) v *= th.rho(lambda);
          sum[static_cast<std::size_t>(b)] += v;
          count[static_cast<std::size_t>(b)] += 1;
        }
        out.bin_mean.assign(ubins, kNaN);
        for (std::size_t b = 0; b < ubins; ++b) {
          if (count[b] > 0) out.bin_mean[b] = sum[b] / count[b];
        }
        return out;
      });

  ExperimentReport r;
  r.config = config;
  r.aborted = check_aborts(slots, "run_bulk_experiment");
  double mu_sum = 0.0;
  std::size_t done = 0;
  std::vector<std::vector<double>> per_bin(ubins);
  for (const auto& s : slots) {
    if (!s.value) continue;
    mu_sum += s.value->mu;
    ++done;
    r.audit.merge(s.value->audit);
    for (std::size_t b = 0; b < ubins; ++b) {
      if (!std::isnan(s.value->bin_mean[b])) per_bin[b].push_back(s.value->bin_mean[b]);
    }
  }
  r.mu_hat = mu_sum / static_cast<double>(done);

  const double interior_gap = kInteriorFraction * 2.0 * std::sqrt(t);
  for (int b = 0; b < bins; ++b) {
    const double c = bin_center(lo, hi, bins, b);
    r.estimates.push_back(estimate_from_samples(c, per_bin[static_cast<std::size_t>(b)]));
    double plain = kNaN, weighted = kNaN;
    try {
      std::tie(plain, weighted) = weighted_averages([&](double l) { return th.W(r.mu_hat, l); }, th.rho,
                                                    bin_lo(lo, hi, bins, b), bin_lo(lo, hi, bins, b + 1));
    } catch (const DomainError&) {
    }
    r.theory.push_back(config.figure_mode ? weighted : plain);
    r.theory_plain.push_back(plain);
    r.theory_weighted.push_back(weighted);
    const bool inside = c - th.edge_lo >= interior_gap && th.edge_hi - c >= interior_gap;
    r.interior.push_back(inside && std::isfinite(r.theory.back()) && r.estimates.back().n_samples >= 2);
  }
  finish_coverage(r);

  if (null_a && !config.mu_target) {
    r.interlace = interlace_interval(config.x, t, q);
    double best = -std::numeric_limits<double>::infinity();
    for (int b = 0; b < bins; ++b) {
      const auto& e = r.estimates[static_cast<std::size_t>(b)];
      if (e.n_samples == 0) continue;
      const double profile = config.figure_mode ? e.mean : e.mean * th.rho(e.center);
      if (profile > best) {
        best = profile;
        r.argmax_bin = b;
      }
    }
    if (r.argmax_bin >= 0) {
      const double a = bin_lo(lo, hi, bins, static_cast<int>(r.argmax_bin));
      const double z = bin_lo(lo, hi, bins, static_cast<int>(r.argmax_bin) + 1);
      r.argmax_in_interval = z >= r.interlace->first && a <= r.interlace->second;
    }
  }
  if (r.aborted) r.warnings.push_back(std::to_string(r.aborted) + " trials aborted");
  r.wall_time_s = seconds_since(start);
  return r;
}

namespace {

struct SpikeTrial {
  bool absorbed = false;
  double overlap = 0.0;         // spike_spike: <Phi_1|Psi_1>^2
  std::vector<double> bin_mean; // spike_bulk
  double mass = 0.0;            // spike_bulk: sum_i <Phi_i|Psi_1>^2
  AuditSummary audit;
};

std::size_t count_absorbed(const std::vector<detail::TrialSlot<SpikeTrial>>& slots) {
  std::size_t k = 0;
  for (const auto& s : slots) k += s.value && s.value->absorbed;
  return k;
}

void absorbed_warning(ExperimentReport& r) {
  if (r.absorbed) {
    r.warnings.push_back(std::to_string(r.absorbed) + " trials excluded: spike absorbed into the bulk");
  }
  if (r.aborted) r.warnings.push_back(std::to_string(r.aborted) + " trials aborted");
}

}  // namespace

ExperimentReport run_spike_spike(const ExperimentConfig& config) {
  require(config.kind == ExperimentKind::spike_spike, "run_spike_spike: config kind is not spike_spike");
  config.validate();
  const auto start = Clock::now();
  const Index N = config.N, n = config.n();
  const double t = config.t, q = actual_q(N, n);
  const Eigen::VectorXd psi = psi_of(config.a, N, n);
  const double lambda = psi.squaredNorm();
  const double mu = psi.head(n).squaredNorm();
  if (!(mu > 0.0)) throw DomainError("run_spike_spike: the minor of A has no spike (mu = 0)");
  if (!(t < lambda * lambda && t < mu * mu / q)) {
    throw DomainError("run_spike_spike: t = " + std::to_string(t) +
                      " outside the validity window t < min(lambda^2, mu^2/q) = " +
                      std::to_string(std::min(lambda * lambda, mu * mu / q)));
  }
  const SymmetricMatrixd A = rank_one(psi);
  const double absorb_at = kAbsorbedEdgeFactor * std::sqrt(t);

  const auto slots = detail::run_trials<SpikeTrial>(
      static_cast<std::size_t>(config.trials), config.threads, [&](std::size_t k) {
        SpikeTrial out;
        const SymmetricMatrixd X = A + sample_goe(N, t, derive_stream(config.master_seed, k));
        const Pair p = decompose_pair(X, n, config.audit, out.audit);
        out.absorbed = p.full.eigenvalues(0) < absorb_at;
        out.overlap = p.grid.values(0, 0);
        return out;
      });

  ExperimentReport r;
  r.config = config;
  r.aborted = check_aborts(slots, "run_spike_spike");
  r.absorbed = count_absorbed(slots);
  std::vector<double> samples;
  for (const auto& s : slots) {
    if (!s.value) continue;
    r.audit.merge(s.value->audit);
    if (!s.value->absorbed) samples.push_back(s.value->overlap);
  }
  r.estimates.push_back(estimate_from_samples(t, samples));
  r.theory.push_back(f_spike(lambda, mu, q, t));
  r.theory_plain.push_back(r.theory.back());
  r.theory_weighted.push_back(r.theory.back());
  r.interior.push_back(samples.size() >= 2);
  finish_coverage(r);
  absorbed_warning(r);
  r.wall_time_s = seconds_since(start);
  return r;
}

ExperimentReport run_spike_bulk(const ExperimentConfig& config) {
  require(config.kind == ExperimentKind::spike_bulk, "run_spike_bulk: config kind is not spike_bulk");
  config.validate();
  const auto start = Clock::now();
  const Index N = config.N, n = config.n();
  const double t = config.t, q = actual_q(N, n);
  const Eigen::VectorXd psi = psi_of(config.a, N, n);
  require(psi.head(n).cwiseAbs().maxCoeff() == 0.0,
          "run_spike_bulk: the rank-one vector must vanish on the first n coordinates");
  const double lambda = psi.squaredNorm();
  if (!(t < lambda * lambda)) {
    throw DomainError("run_spike_bulk: t = " + std::to_string(t) +
                      " outside the validity window t < lambda^2 = " + std::to_string(lambda * lambda));
  }
  const SymmetricMatrixd A = rank_one(psi);
  const double absorb_at = kAbsorbedEdgeFactor * std::sqrt(t);
  const double edge = 2.0 * std::sqrt(q * t);
  const double delta = kBinMargin * std::sqrt(q * t);
  const double lo = config.range_lo.value_or(-edge + delta);
  const double hi = config.range_hi.value_or(edge - delta);
  const int bins = config.bins;
  const auto ubins = static_cast<std::size_t>(bins);
  auto rho_minor = [q, t](double m) { return semicircle_density(m, q * t); };

  const auto slots = detail::run_trials<SpikeTrial>(
      static_cast<std::size_t>(config.trials), config.threads, [&](std::size_t k) {
        SpikeTrial out;
        const SymmetricMatrixd X = A + sample_goe(N, t, derive_stream(config.master_seed, k));
        const Pair p = decompose_pair(X, n, config.audit, out.audit);
        out.absorbed = p.full.eigenvalues(0) < absorb_at;
        std::vector<double> sum(ubins, 0.0);
        std::vector<int> count(ubins, 0);
        for (Index i = 0; i < n; ++i) {
          const double o = p.grid.values(i, 0);
          out.mass += o;
          const double m = p.grid.minor_evals(i);
          const long b = bin_of(m, ubins, lo, hi);
          if (b < 0) continue;
          double v = static_cast<double>(N) * o;
          if (config.figure_mode) v *= rho_minor(m);
          sum[static_cast<std::size_t>(b)] += v;
          count[static_cast<std::size_t>(b)] += 1;
        }
        out.bin_mean.assign(ubins, kNaN);
        for (std::size_t b = 0; b < ubins; ++b) {
          if (count[b] > 0) out.bin_mean[b] = sum[b] / count[b];
        }
        return out;
      });

  ExperimentReport r;
  r.config = config;
  r.aborted = check_aborts(slots, "run_spike_bulk");
  r.absorbed = count_absorbed(slots);
  std::vector<std::vector<double>> per_bin(ubins);
  std::vector<double> masses;
  for (const auto& s : slots) {
    if (!s.value) continue;
    r.audit.merge(s.value->audit);
    if (s.value->absorbed) continue;
    masses.push_back(s.value->mass);
    for (std::size_t b = 0; b < ubins; ++b) {
      if (!std::isnan(s.value->bin_mean[b])) per_bin[b].push_back(s.value->bin_mean[b]);
    }
  }
  const double interior_gap = kInteriorFraction * edge;
  for (int b = 0; b < bins; ++b) {
    const double c = bin_center(lo, hi, bins, b);
    r.estimates.push_back(estimate_from_samples(c, per_bin[static_cast<std::size_t>(b)]));
    const auto [plain, weighted] =
        weighted_averages([&](double m) { return g_spike_bulk(lambda, q, t, m); }, rho_minor,
                          bin_lo(lo, hi, bins, b), bin_lo(lo, hi, bins, b + 1));
    r.theory.push_back(config.figure_mode ? weighted : plain);
    r.theory_plain.push_back(plain);
    r.theory_weighted.push_back(weighted);
    const bool inside = c + edge >= interior_gap && edge - c >= interior_gap;
    r.interior.push_back(inside && r.estimates.back().n_samples >= 2);
  }
  finish_coverage(r);
  r.total_mass = estimate_from_samples(t, masses);
  r.total_mass_theory = spike_mass(lambda, q, t);
  absorbed_warning(r);
  r.wall_time_s = seconds_since(start);
  return r;
}

ExperimentReport run_spike_path(const ExperimentConfig& config) {
  require(config.kind == ExperimentKind::spike_path, "run_spike_path: config kind is not spike_path");
  config.validate();
  const auto start = Clock::now();
  const Index N = config.N, n = config.n();
  std::vector<double> grid = config.t_grid;
  if (grid.empty()) {
    for (int k = 0; k <= 120; ++k) grid.push_back(0.01 * k);
  }
  const SymmetricMatrixd A = build_initial_matrix(config.a, N, n);
  const auto path = sample_path(N, grid, derive_stream(config.master_seed, 0));

  using Solver = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>;
  const auto slots = detail::run_trials<TrajectoryPoint>(grid.size(), config.threads, [&](std::size_t k) {
    const SymmetricMatrixd X = A + path[k];
    Solver full(X.matrix(), Eigen::EigenvaluesOnly);
    Solver minor(X.matrix().topLeftCorner(n, n), Eigen::EigenvaluesOnly);
    if (full.info() != Eigen::Success || minor.info() != Eigen::Success) {
      throw NumericError("run_spike_path: eigensolver failed at t = " + std::to_string(grid[k]));
    }
    TrajectoryPoint pt;
    pt.t = grid[k];
    pt.lambda1 = full.eigenvalues()(N - 1);
    pt.edge_full = full.eigenvalues()(N - 2);
    pt.mu1 = minor.eigenvalues()(n - 1);
    pt.edge_minor = n >= 2 ? minor.eigenvalues()(n - 2) : kNaN;
    return pt;
  });

  ExperimentReport r;
  r.config = config;
  for (const auto& s : slots) {
    if (!s.value) throw NumericError(s.error);
    r.trajectory.push_back(*s.value);
  }
  r.wall_time_s = seconds_since(start);
  return r;
}

namespace {

ExperimentReport run_bernoulli_bulk(const ExperimentConfig& config) {
  const auto start = Clock::now();
  const Index N = config.N, n = config.n();
  const double p = config.a.p;
  const double t = p * (1.0 - p), q = actual_q(N, n);
  const double half = config.lambda_halfwidth.value_or(kBinMargin * std::sqrt(t));
  const double lam_lo = config.lambda_center - half, lam_hi = config.lambda_center + half;
  const double edge = 2.0 * std::sqrt(q * t);
  const double delta = kBinMargin * std::sqrt(q * t);
  const double lo = config.range_lo.value_or(-edge + delta);
  const double hi = config.range_hi.value_or(edge - delta);
  const int bins = config.bins;
  const auto ubins = static_cast<std::size_t>(bins);

  const auto slots = detail::run_trials<BulkTrial>(
      static_cast<std::size_t>(config.trials), config.threads, [&](std::size_t k) {
        BulkTrial out;
        const SymmetricMatrixd X = sample_bernoulli(N, p, derive_stream(config.master_seed, k));
        const Pair pr = decompose_pair(X, n, config.audit, out.audit);
        std::vector<Index> window;
        for (Index j = 1; j < N; ++j) {
          const double l = pr.full.eigenvalues(j);
          if (l >= lam_lo && l < lam_hi) window.push_back(j);
        }
        std::vector<double> sum(ubins, 0.0);
        std::vector<int> count(ubins, 0);
        for (Index i = 1; i < n; ++i) {
          const long b = bin_of(pr.grid.minor_evals(i), ubins, lo, hi);
          if (b < 0) continue;
          for (Index j : window) {
            sum[static_cast<std::size_t>(b)] += static_cast<double>(N) * pr.grid.values(i, j);
            count[static_cast<std::size_t>(b)] += 1;
          }
        }
        out.bin_mean.assign(ubins, kNaN);
        for (std::size_t b = 0; b < ubins; ++b) {
          if (count[b] > 0) out.bin_mean[b] = sum[b] / count[b];
        }
        return out;
      });

  ExperimentReport r;
  r.config = config;
  r.aborted = check_aborts(slots, "run_bernoulli");
  std::vector<std::vector<double>> per_bin(ubins);
  for (const auto& s : slots) {
    if (!s.value) continue;
    r.audit.merge(s.value->audit);
    for (std::size_t b = 0; b < ubins; ++b) {
      if (!std::isnan(s.value->bin_mean[b])) per_bin[b].push_back(s.value->bin_mean[b]);
    }
  }
  auto rho = [t](double l) { return semicircle_density(l, t); };
  auto rho_minor = [q, t](double m) { return semicircle_density(m, q * t); };
  const double window_mass = integrate(rho, lam_lo, lam_hi, 2, 8);
  auto window_average = [&](double m) {
    return integrate([&](double l) { return W_goe(m, l, t, q).value * rho(l); }, lam_lo, lam_hi, 2, 8) /
           window_mass;
  };
  const double interior_gap = kInteriorFraction * edge;
  for (int b = 0; b < bins; ++b) {
    const double c = bin_center(lo, hi, bins, b);
    r.estimates.push_back(estimate_from_samples(c, per_bin[static_cast<std::size_t>(b)]));
    double plain = kNaN, weighted = kNaN;
    try {
      std::tie(plain, weighted) =
          weighted_averages(window_average, rho_minor, bin_lo(lo, hi, bins, b), bin_lo(lo, hi, bins, b + 1));
    } catch (const DomainError&) {
    }
    r.theory.push_back(plain);
    r.theory_plain.push_back(plain);
    r.theory_weighted.push_back(weighted);
    const bool inside = c + edge >= interior_gap && edge - c >= interior_gap;
    r.interior.push_back(inside && std::isfinite(plain) && r.estimates.back().n_samples >= 2);
  }
  finish_coverage(r);
  if (r.aborted) r.warnings.push_back(std::to_string(r.aborted) + " trials aborted");
  r.wall_time_s = seconds_since(start);
  return r;
}

struct DeficitTrial {
  double deficit = 0.0;
  AuditSummary audit;
};

ExperimentReport run_bernoulli_spike(const ExperimentConfig& config) {
  const auto start = Clock::now();
  const double p = config.a.p;
  ExperimentReport r;
  r.config = config;
  const auto trials = static_cast<std::size_t>(config.trials);
  for (std::size_t size_index = 0; size_index < config.N_list.size(); ++size_index) {
    const Index N = config.N_list[size_index];
    const auto n = static_cast<Index>(std::llround(config.q * static_cast<double>(N)));
    const double frac = actual_q(N, n);
    const auto slots = detail::run_trials<DeficitTrial>(trials, config.threads, [&](std::size_t k) {
      DeficitTrial out;
      const std::uint64_t stream = (static_cast<std::uint64_t>(size_index) << 32) | k;
      const SymmetricMatrixd X = sample_bernoulli(N, p, derive_stream(config.master_seed, stream));
      const Pair pr = decompose_pair(X, n, config.audit, out.audit);
      out.deficit = frac - pr.grid.values(0, 0);
      return out;
    });
    r.aborted += check_aborts(slots, "run_bernoulli");
    std::vector<double> samples;
    for (const auto& s : slots) {
      if (!s.value) continue;
      r.audit.merge(s.value->audit);
      samples.push_back(s.value->deficit);
    }
    r.estimates.push_back(estimate_from_samples(static_cast<double>(N), samples));
    r.theory.push_back(frac - bernoulli_spike(N, n, p));
    r.theory_plain.push_back(r.theory.back());
  r.theory_weighted.push_back(r.theory.back());
    r.interior.push_back(true);
  }
  // Agreement here means within three half-widths of the 1/N prediction.
  r.interior_count = r.estimates.size();
  for (std::size_t k = 0; k < r.estimates.size(); ++k) {
    const auto& e = r.estimates[k];
    if (std::abs(e.mean - r.theory[k]) <= std::max(3.0 * e.half_width(), 1e-12)) ++r.covered;
  }
  r.coverage = static_cast<double>(r.covered) / static_cast<double>(r.interior_count);
  if (r.aborted) r.warnings.push_back(std::to_string(r.aborted) + " trials aborted");
  r.wall_time_s = seconds_since(start);
  return r;
}

}  // namespace

ExperimentReport run_bernoulli(const ExperimentConfig& config) {
  require(config.kind == ExperimentKind::bernoulli_bulk || config.kind == ExperimentKind::bernoulli_spike,
          "run_bernoulli: config kind is not a Bernoulli experiment");
  config.validate();
  return config.kind == ExperimentKind::bernoulli_bulk ? run_bernoulli_bulk(config)
                                                       : run_bernoulli_spike(config);
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::bulk:
      return run_bulk_experiment(config);
    case ExperimentKind::spike_spike:
      return run_spike_spike(config);
    case ExperimentKind::spike_bulk:
      return run_spike_bulk(config);
    case ExperimentKind::spike_path:
      return run_spike_path(config);
    case ExperimentKind::bernoulli_bulk:
    case ExperimentKind::bernoulli_spike:
      return run_bernoulli(config);
  }
  throw InvalidArgument("run_experiment: unknown experiment kind");
}

}  // namespace dbm
