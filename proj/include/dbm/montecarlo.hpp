#ifndef DBM_MONTECARLO_HPP_
#define DBM_MONTECARLO_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dbm/ensembles.hpp"
#include "dbm/freeprob.hpp"
#include "dbm/spectral.hpp"

namespace dbm {

using Eigen::Index;

enum class ExperimentKind { bulk, spike_spike, spike_bulk, spike_path, bernoulli_bulk, bernoulli_spike };

enum class MatrixKind { null, rank_one, explicit_matrix, bernoulli };

/// rank-one recipes: `uniform` spreads psi over all coordinates, `tail`
/// puts it on the last N - n coordinates only (the minor of A is then zero).
enum class RankOneRecipe { uniform, tail };

/// The deterministic part A of X_t = A + H_t.
struct ASpec {
  MatrixKind kind = MatrixKind::null;
  RankOneRecipe recipe = RankOneRecipe::uniform;
  double spike = 1.0;                     // nonzero eigenvalue |psi|^2 for recipes
  std::optional<Eigen::VectorXd> psi;     // explicit rank-one vector, overrides the recipe
  std::optional<SymmetricMatrixd> matrix; // explicit_matrix
  double p = 0.5;                         // bernoulli
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::bulk;
  Index N = 400;
  double q = 0.5;
  double t = 1.0;
  int trials = 200;
  std::uint64_t master_seed = 42;
  unsigned threads = 0;  // 0 = hardware concurrency
  ASpec a;

  // bulk: the minor eigenvector is picked by quantile x, or by the
  // eigenvalue closest to mu_target when set.
  double x = 0.5;
  std::optional<double> mu_target;
  int bins = 25;
  std::optional<double> range_lo;
  std::optional<double> range_hi;
  bool figure_mode = false;  // estimates and theory weighted by rho(lambda)

  // bernoulli_bulk: the full eigenvalue window around lambda_center.
  double lambda_center = 0.0;
  std::optional<double> lambda_halfwidth;
  // bernoulli_spike: one estimate per matrix size.
  std::vector<Index> N_list;

  // spike_path
  std::vector<double> t_grid;

  bool audit = true;  // interlacing, row sums and reconstruction on every pair

  Index n() const { return static_cast<Index>(std::llround(q * static_cast<double>(N))); }
  /// Throws InvalidArgument on any precondition violation.
  void validate() const;
};

/// Trial-level mean with a 99% normal-approximation interval
/// (mean +- 2.576 standard errors).
struct OverlapEstimate {
  double center = 0.0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_samples = 0;

  double half_width() const { return 0.5 * (ci_high - ci_low); }
  bool contains(double value) const { return ci_low <= value && value <= ci_high; }
};

inline constexpr double kZ99 = 2.576;

OverlapEstimate estimate_from_samples(double center, const std::vector<double>& samples);

struct AuditSummary {
  std::size_t pairs = 0;
  double max_row_sum_deviation = 0.0;
  double min_interlacing_margin = std::numeric_limits<double>::infinity();
  std::size_t interlacing_failures = 0;
  double max_reconstruction_error = 0.0;
  double max_orthonormality_error = 0.0;

  void merge(const AuditSummary& other);
};

struct TrajectoryPoint {
  double t = 0.0;
  double lambda1 = 0.0;
  double mu1 = 0.0;
  double edge_full = 0.0;   // top bulk eigenvalue of X
  double edge_minor = 0.0;  // top bulk eigenvalue of the minor
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<OverlapEstimate> estimates;
  std::vector<double> theory;           // compared with estimates; NaN where refused
  std::vector<double> theory_plain;     // bin-averaged kernel
  std::vector<double> theory_weighted;  // bin-averaged kernel times the density (figure curves)
  std::vector<bool> interior;
  std::size_t interior_count = 0;
  std::size_t covered = 0;
  double coverage = std::numeric_limits<double>::quiet_NaN();

  double mu_hat = std::numeric_limits<double>::quiet_NaN();  // bulk: realized minor eigenvalue
  std::optional<std::pair<double, double>> interlace;        // bulk, quantile mode
  long argmax_bin = -1;
  bool argmax_in_interval = false;

  std::optional<OverlapEstimate> total_mass;  // spike_bulk
  double total_mass_theory = std::numeric_limits<double>::quiet_NaN();

  std::vector<TrajectoryPoint> trajectory;  // spike_path

  std::size_t aborted = 0;
  std::size_t absorbed = 0;
  AuditSummary audit;
  double wall_time_s = 0.0;
  std::vector<std::string> warnings;
};

/// Builds A for an N x N experiment with minor size n.
SymmetricMatrixd build_initial_matrix(const ASpec& a, Index N, Index n);

/// Diagonal matrix whose entries follow the model's atoms in proportion,
/// interleaved so every leading block sees the same proportions. Spikes take
/// the last diagonal slots.
SymmetricMatrixd diagonal_from_model(const SpectrumModel& model, Index N);

ExperimentReport run_bulk_experiment(const ExperimentConfig& config);
ExperimentReport run_spike_spike(const ExperimentConfig& config);
ExperimentReport run_spike_bulk(const ExperimentConfig& config);
ExperimentReport run_spike_path(const ExperimentConfig& config);
/// bernoulli_bulk or bernoulli_spike, per config.kind.
ExperimentReport run_bernoulli(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config);

// Probes of the stochastic identities behind the limit equations.

/// Ranks are 0-based in descending eigenvalue order: i, l index the minor,
/// j, k the full matrix.
struct CorrelationIndex {
  Index i = 0;
  Index l = 0;
  Index j = 0;
  Index k = 0;
};

struct CorrelationEntry {
  CorrelationIndex index;
  double estimate = 0.0;        // E[<Phi_i|dX~ Phi_l><Psi_j|dX Psi_k>] / dt
  double standard_error = 0.0;
  double theory = 0.0;          // (a_ij a_lk + a_ik a_lj) / N
  double z_score() const { return standard_error > 0 ? (estimate - theory) / standard_error : 0.0; }
};

struct CorrelationProbeReport {
  Index N = 0;
  Index n = 0;
  double t = 0.0;
  std::size_t samples = 0;
  std::vector<CorrelationEntry> entries;
  double max_abs_z = 0.0;
};

/// Minor ranks {0, n/2, n-1} x full ranks {0, N/2, N-1}, all (i <= l, j <= k).
std::vector<CorrelationIndex> default_correlation_design(Index N, Index n);

/// The (minor, full) rank pair with the largest squared overlap in the state.
CorrelationIndex strongest_pair(const SymmetricMatrixd& X, Index n);

CorrelationProbeReport correlation_probe(Index N, Index n, double t, std::size_t samples,
                                         std::uint64_t seed,
                                         std::vector<CorrelationIndex> design = {},
                                         double dt = 1e-3, unsigned threads = 0);

/// The three dt terms of d(<i|j>^2) evaluated on a frozen state.
double overlap_drift(const SpectralDecomposition<double>& full,
                     const SpectralDecomposition<double>& minor_block, Index i, Index j);

struct DriftProbeReport {
  Index N = 0;
  Index n = 0;
  double t = 0.0;
  double dt = 0.0;
  std::size_t trials = 0;
  Index i = 0;
  Index j = 0;
  double overlap = 0.0;  // <i|j>^2 in the frozen state
  double estimate = 0.0; // E[<i|j>^2(t+dt) - <i|j>^2(t)] / dt
  double standard_error = 0.0;
  double theory = 0.0;
  double martingale_mean = 0.0;  // average of the dW terms
  double martingale_se = 0.0;
  bool antithetic = true;

  double relative_deviation() const { return std::abs(estimate - theory) / std::abs(theory); }
};

/// Freezes X_t = H_t, perturbs it by independent increments of variance dt
/// and compares the mean change of <i|j>^2 with overlap_drift. With
/// `antithetic`, each increment is paired with its negative.
DriftProbeReport drift_probe(Index N, Index n, double t, double dt, std::size_t trials,
                             std::uint64_t seed, std::optional<std::pair<Index, Index>> pair = {},
                             bool antithetic = true, unsigned threads = 0);

}  // namespace dbm

#endif  // DBM_MONTECARLO_HPP_
