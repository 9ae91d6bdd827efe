#include "dbm/theory.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dbm {

namespace {

using std::numbers::pi;

void require_q(double q, const char* where) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument(std::string(where) + ": q must lie in (0, 1]");
}

}  // namespace

InitialOverlapTransform InitialOverlapTransform::null(double q) {
  require_q(q, "InitialOverlapTransform::null");
  InitialOverlapTransform s;
  s.q_ = q;
  return s;
}

InitialOverlapTransform InitialOverlapTransform::from_grid(const OverlapGrid<double>& grid) {
  InitialOverlapTransform s;
  s.q_ = static_cast<double>(grid.n) / static_cast<double>(grid.N);
  s.finite_ = Finite{grid.full_evals, grid.minor_evals, grid.values};
  return s;
}

InitialOverlapTransform InitialOverlapTransform::from_matrix(const SymmetricMatrixd& A,
                                                             Eigen::Index n) {
  const auto full = eig_sym(A);
  const auto minor = eig_embedded_minor(A, n);
  return from_grid(overlap_grid(full, minor, n));
}

Complex InitialOverlapTransform::operator()(Complex z, Complex z_tilde) const {
  if (!finite_) return q_ / (z * z_tilde);
  const auto& f = *finite_;
  const Eigen::VectorXcd a = (z - f.full_evals.array().cast<Complex>()).inverse().matrix();
  const Eigen::VectorXcd b = (z_tilde - f.minor_evals.array().cast<Complex>()).inverse().matrix();
  const Complex sum = b.transpose() * (f.overlaps.cast<Complex>() * a);
  return sum / static_cast<double>(f.full_evals.size());
}

namespace {

Complex resolvent_ratio(const InitialOverlapTransform& S0, Complex y, Complex y_tilde, double t) {
  const Complex s = S0(y, y_tilde);
  const Complex denom = 1.0 - t * s;
  if (std::abs(denom) < 1e-12) {
    throw PoleError("S_general: 1 - t S0 vanishes (|denominator| = " +
                    std::to_string(std::abs(denom)) + ")");
  }
  return s / denom;
}

}  // namespace

Complex S_general(const InitialOverlapTransform& S0, Complex z, Complex z_tilde, double t,
                  const StieltjesFn& G, const StieltjesFn& G_tilde) {
  if (z.imag() == 0.0 || z_tilde.imag() == 0.0) {
    throw InvalidArgument("S_general: z and z~ must lie off the real axis");
  }
  if (!(t >= 0.0)) throw InvalidArgument("S_general: t must be >= 0");
  if (t == 0.0) return resolvent_ratio(S0, z, z_tilde, 0.0);
  const Complex y = z - t * G(z);
  const Complex y_tilde = z_tilde - S0.q() * t * G_tilde(z_tilde);
  return resolvent_ratio(S0, y, y_tilde, t);
}

OverlapKernelPoint W_general(const InitialOverlapTransform& S0, double mu, double lambda, double t,
                             const StieltjesFn& G, const StieltjesFn& G_tilde) {
  if (!(t > 0.0)) throw InvalidArgument("W_general: t must be positive");
  const double q = S0.q();
  const BoundaryValues full = boundary_values(G, lambda, t);
  const BoundaryValues minor = boundary_values(G_tilde, mu, t);
  if (full.near_edge) {
    throw DomainError("W_general: rho(lambda = " + std::to_string(lambda) + ") = " +
                      std::to_string(full.rho) + " is below the edge threshold");
  }
  if (minor.near_edge) {
    throw DomainError("W_general: rho~(mu = " + std::to_string(mu) + ") = " +
                      std::to_string(minor.rho) + " is below the edge threshold");
  }
  const Complex y(lambda - t * full.v, -pi * t * full.rho);
  const Complex y_tilde(mu - q * t * minor.v, -q * pi * t * minor.rho);
  const Complex diff =
      resolvent_ratio(S0, y, std::conj(y_tilde), t) - resolvent_ratio(S0, y, y_tilde, t);
  const double value = diff.real() / (2.0 * q * pi * pi * full.rho * minor.rho);
  return OverlapKernelPoint{mu, lambda, t, q, value};
}

OverlapKernelPoint W_goe(double mu, double lambda, double t, double q) {
  if (!(t > 0.0)) throw InvalidArgument("W_goe: t must be positive");
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("W_goe: q must lie in (0, 1)");
  const double denom = (1.0 - q) * (1.0 - q) * t + (lambda - mu) * (q * lambda - mu);
  if (!(denom > 0.0)) {
    throw DomainError("W_goe: (mu, lambda) = (" + std::to_string(mu) + ", " +
                      std::to_string(lambda) + ") lies outside the kernel's domain");
  }
  return OverlapKernelPoint{mu, lambda, t, q, (1.0 - q) * t / denom};
}

Eigen::MatrixXd W_goe_grid(const Eigen::VectorXd& mu, const Eigen::VectorXd& lambda, double t,
                           double q) {
  if (!(t > 0.0)) throw InvalidArgument("W_goe_grid: t must be positive");
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("W_goe_grid: q must lie in (0, 1)");
  const Eigen::ArrayXXd L = lambda.transpose().replicate(mu.size(), 1).array();
  const Eigen::ArrayXXd M = mu.replicate(1, lambda.size()).array();
  const Eigen::ArrayXXd denom = (1.0 - q) * (1.0 - q) * t + (L - M) * (q * L - M);
  if ((denom <= 0.0).any()) throw DomainError("W_goe_grid: grid leaves the kernel's domain");
  return ((1.0 - q) * t / denom).matrix();
}

GeneralKernel::GeneralKernel(const SymmetricMatrixd& A, Eigen::Index n, double t)
    : t_(t), S0_(InitialOverlapTransform::null(1.0)) {
  if (!(t > 0.0)) throw InvalidArgument("GeneralKernel: t must be positive");
  const auto full = eig_sym(A);
  const auto block = eig_sym(A.top_left(n));
  const auto grid = overlap_grid(full, embed_minor_decomposition(block, A.dim()), n);
  S0_ = InitialOverlapTransform::from_grid(grid);
  full_model_ = SpectrumModel::empirical(full.eigenvalues);
  minor_model_ = SpectrumModel::empirical(block.eigenvalues);
  minor_model_.q = S0_.q();
}

StieltjesFn GeneralKernel::G() const {
  return [model = full_model_, t = t_](Complex z) { return solve_G(model, z, t); };
}

StieltjesFn GeneralKernel::G_tilde() const {
  return [model = minor_model_, t = t_](Complex z) { return solve_Gtilde(model, z, t, model.q); };
}

BoundaryValues GeneralKernel::full_boundary(double lambda) const {
  return boundary_values(G(), lambda, t_);
}

BoundaryValues GeneralKernel::minor_boundary(double mu) const {
  return boundary_values(G_tilde(), mu, t_);
}

OverlapKernelPoint GeneralKernel::W(double mu, double lambda) const {
  return W_general(S0_, mu, lambda, t_, G(), G_tilde());
}

double lambda_star(double mu, double t, double q) {
  if (!(t > 0.0)) throw InvalidArgument("lambda_star: t must be positive");
  require_q(q, "lambda_star");
  const double minor_edge = 2.0 * std::sqrt(q * t);
  if (std::abs(mu) > minor_edge * (1.0 + 1e-12)) {
    throw DomainError("lambda_star: |mu| = " + std::to_string(std::abs(mu)) +
                      " exceeds the minor edge 2 sqrt(q t) = " + std::to_string(minor_edge));
  }
  const double c1 = (1.0 + 6.0 * q + q * q) * t + mu * mu;
  const double c0 = 4.0 * (1.0 + q) * t * mu;
  const auto P = [&](double x) { return q * x * x * x - c1 * x + c0; };
  double lo = -2.0 * std::sqrt(t);
  double hi = 2.0 * std::sqrt(t);
  if (P(lo) == 0.0) return lo;
  if (P(hi) == 0.0) return hi;
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) return mid;
    const double p = P(mid);
    if (p == 0.0) return mid;
    (p > 0.0 ? lo : hi) = mid;
  }
}

std::pair<double, double> interlace_interval(double x, double t, double q) {
  require_q(q, "interlace_interval");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("interlace_interval: x must lie in [0, 1]");
  return {semicircle_quantile(q * x + 1.0 - q, t), semicircle_quantile(q * x, t)};
}

SpikeTrajectory spike_trajectories(double lambda, std::optional<double> mu, double q, double t) {
  if (!(lambda > 0.0)) throw InvalidArgument("spike_trajectories: lambda must be positive");
  if (mu && !(*mu > 0.0)) throw InvalidArgument("spike_trajectories: mu must be positive");
  require_q(q, "spike_trajectories");
  if (!(t >= 0.0)) throw InvalidArgument("spike_trajectories: t must be >= 0");
  SpikeTrajectory out;
  out.lambda1 = lambda + t / lambda;
  out.full_valid = t < lambda * lambda;
  if (mu) {
    out.mu1 = *mu + q * t / *mu;
    out.minor_valid = t < *mu * *mu / q;
  }
  return out;
}

double initial_spike_from_observed(double observed, double s) {
  const double disc = observed * observed - 4.0 * s;
  if (disc < 0.0) throw DomainError("initial_spike_from_observed: observed spike inside the bulk");
  return 0.5 * (observed + std::sqrt(disc));
}

double f_spike(double lambda, double mu, double q, double t) {
  if (!(lambda > 0.0 && mu > 0.0 && mu <= lambda)) {
    throw InvalidArgument("f_spike: need 0 < mu <= lambda");
  }
  require_q(q, "f_spike");
  if (!(t >= 0.0)) throw InvalidArgument("f_spike: t must be >= 0");
  if (t >= lambda * lambda) {
    throw DomainError("f_spike: t >= lambda^2, the full spike has been absorbed by the bulk");
  }
  if (t >= mu * mu / q) {
    throw DomainError("f_spike: t >= mu^2 / q, the minor spike has been absorbed by the bulk");
  }
  const double cross = lambda * mu - q * t;
  return mu / lambda * (lambda * lambda - t) * (mu * mu - q * t) / (cross * cross);
}

double g_spike_bulk(double lambda, double q, double t, double mu) {
  if (!(lambda > 0.0)) throw InvalidArgument("g_spike_bulk: lambda must be positive");
  require_q(q, "g_spike_bulk");
  if (!(t >= 0.0)) throw InvalidArgument("g_spike_bulk: t must be >= 0");
  if (t >= lambda * lambda) {
    throw DomainError("g_spike_bulk: t >= lambda^2, the spike has been absorbed by the bulk");
  }
  if (std::abs(mu) > 2.0 * std::sqrt(q * t) * (1.0 + 1e-12)) {
    throw DomainError("g_spike_bulk: mu lies outside the minor's bulk");
  }
  const double d = lambda * lambda - lambda * mu + q * t;
  return (lambda * lambda - q * t) * t / (d * d);
}

double spike_mass(double lambda, double q, double t) {
  if (!(lambda > 0.0)) throw InvalidArgument("spike_mass: lambda must be positive");
  require_q(q, "spike_mass");
  if (!(t >= 0.0)) throw InvalidArgument("spike_mass: t must be >= 0");
  if (t >= lambda * lambda) throw DomainError("spike_mass: t >= lambda^2");
  return q * t / (lambda * lambda);
}

double bernoulli_spike(Eigen::Index N, Eigen::Index n, double p) {
  if (N < 1 || n < 1 || n > N) throw InvalidArgument("bernoulli_spike: need 1 <= n <= N");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("bernoulli_spike: p must lie in (0, 1]");
  if (p == 0.0) throw DomainError("bernoulli_spike: the expansion diverges at p = 0");
  const double ratio = static_cast<double>(n) / static_cast<double>(N);
  return ratio - (1.0 - ratio) * (1.0 / p - 1.0) / static_cast<double>(N);
}

}  // namespace dbm
