#ifndef DBM_THEORY_HPP_
#define DBM_THEORY_HPP_

#include <optional>
#include <utility>
#include <variant>

#include <Eigen/Dense>

#include "dbm/ensembles.hpp"
#include "dbm/freeprob.hpp"
#include "dbm/spectral.hpp"

namespace dbm {

/// Limiting rescaled mean squared overlap N E[<Phi|Psi>^2] between the minor
/// eigenvector at mu and the full eigenvector at lambda.
struct OverlapKernelPoint {
  double mu = 0.0;
  double lambda = 0.0;
  double t = 0.0;
  double q = 0.0;
  double value = 0.0;
};

/// The double Stieltjes transform at t = 0, S(z, z~, 0).
///
/// Two forms: the null-A closed form q / (z z~), or the rational sum
///   (1/N0) sum_ij O_ij / ((z~ - mu_i)(z - lambda_j))
/// over a representative finite matrix A, its minor, and their overlap grid.
class InitialOverlapTransform {
 public:
  static InitialOverlapTransform null(double q);
  static InitialOverlapTransform from_grid(const OverlapGrid<double>& grid);
  /// Decomposes A and its n x n minor and builds the rational sum.
  static InitialOverlapTransform from_matrix(const SymmetricMatrixd& A, Eigen::Index n);

  double q() const { return q_; }
  bool is_null() const { return !finite_.has_value(); }
  Complex operator()(Complex z, Complex z_tilde) const;

 private:
  struct Finite {
    Eigen::VectorXd full_evals;
    Eigen::VectorXd minor_evals;
    Eigen::MatrixXd overlaps;  // n0 x N0
  };

  double q_ = 1.0;
  std::optional<Finite> finite_;
};

/// S(z, z~, t) = S0(y, y~) / (1 - t S0(y, y~)), y = z - t G(z), y~ = z~ - q t G~(z~).
/// q comes from S0. Throws PoleError when the denominator is within 1e-12 of 0.
Complex S_general(const InitialOverlapTransform& S0, Complex z, Complex z_tilde, double t,
                  const StieltjesFn& G, const StieltjesFn& G_tilde);

/// W(mu, lambda, t) for a general initial matrix, by double Stieltjes
/// inversion of S_general. G and G_tilde must describe the same A and q as S0.
/// Refuses (DomainError) points where rho or rho~ is below the edge threshold.
OverlapKernelPoint W_general(const InitialOverlapTransform& S0, double mu, double lambda, double t,
                             const StieltjesFn& G, const StieltjesFn& G_tilde);

/// Pure-noise kernel (1-q) t / ((1-q)^2 t + (lambda - mu)(q lambda - mu)).
OverlapKernelPoint W_goe(double mu, double lambda, double t, double q);

/// W_goe on a (mu, lambda) grid: entry (a, b) is W(mu(a), lambda(b)).
Eigen::MatrixXd W_goe_grid(const Eigen::VectorXd& mu, const Eigen::VectorXd& lambda, double t,
                           double q);

/// Everything needed to evaluate W for a general A: the spectrum models of A
/// and of its minor, and the initial transform, all from one finite matrix.
class GeneralKernel {
 public:
  GeneralKernel(const SymmetricMatrixd& A, Eigen::Index n, double t);

  double t() const { return t_; }
  double q() const { return S0_.q(); }
  BoundaryValues full_boundary(double lambda) const;
  BoundaryValues minor_boundary(double mu) const;
  OverlapKernelPoint W(double mu, double lambda) const;
  const SpectrumModel& full_model() const { return full_model_; }
  const SpectrumModel& minor_model() const { return minor_model_; }
  StieltjesFn G() const;
  StieltjesFn G_tilde() const;

 private:
  double t_;
  SpectrumModel full_model_;
  SpectrumModel minor_model_;
  InitialOverlapTransform S0_;
};

/// Root of q X^3 - ((1 + 6q + q^2) t + mu^2) X + 4 (1+q) t mu inside
/// [-2 sqrt t, 2 sqrt t], by bisection on the sign change P(-2 sqrt t) > 0 > P(2 sqrt t).
/// Requires |mu| <= 2 sqrt(q t).
double lambda_star(double mu, double t, double q);

/// (lambda(q x + 1 - q, t), lambda(q x, t)).
std::pair<double, double> interlace_interval(double x, double t, double q);

struct SpikeTrajectory {
  double lambda1 = 0.0;   // lambda + t / lambda
  std::optional<double> mu1;  // mu + q t / mu, spike-spike case only
  bool full_valid = false;    // t < lambda^2
  bool minor_valid = false;   // t < mu^2 / q
};

SpikeTrajectory spike_trajectories(double lambda, std::optional<double> mu, double q, double t);

/// Initial spike recovered from an observed one: (x1 + sqrt(x1^2 - 4 s)) / 2,
/// with s = t for the full matrix and s = q t for the minor.
double initial_spike_from_observed(double observed, double s);

/// Spike-spike squared overlap (mu/lambda) (lambda^2 - t)(mu^2 - q t) / (lambda mu - q t)^2.
double f_spike(double lambda, double mu, double q, double t);

/// Spike-bulk kernel (lambda^2 - q t) t / (lambda^2 - lambda mu + q t)^2.
double g_spike_bulk(double lambda, double q, double t, double mu);

/// Total spike mass on the minor's bulk, q t / lambda^2.
double spike_mass(double lambda, double q, double t);

/// n/N - (1 - n/N)(1/p - 1)/N: mean top-pair squared overlap for Bernoulli
/// matrices, to order 1/N (remainder O(N^{-3/2})).
double bernoulli_spike(Eigen::Index N, Eigen::Index n, double p);

}  // namespace dbm

#endif  // DBM_THEORY_HPP_
