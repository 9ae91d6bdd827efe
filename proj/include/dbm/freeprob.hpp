#ifndef DBM_FREEPROB_HPP_
#define DBM_FREEPROB_HPP_

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dbm/errors.hpp"

namespace dbm {

using Complex = std::complex<double>;

/// A Stieltjes transform z -> G(z), defined off the real axis.
using StieltjesFn = std::function<Complex(Complex)>;

struct Atom {
  double location = 0.0;
  double weight = 1.0;
};

/// Limiting spectrum: weighted atoms (weights sum to 1) plus measure-null
/// isolated spikes. `q` is the minor fraction and only matters for a
/// minor's model.
struct SpectrumModel {
  std::vector<Atom> atoms;
  std::vector<double> spikes;
  double q = 1.0;

  /// Throws InvalidArgument unless the invariants hold.
  void validate() const;

  static SpectrumModel point_mass(double location = 0.0);
  /// Equal-weight atoms at the given values, merging values closer than `merge_tol`.
  static SpectrumModel empirical(const Eigen::VectorXd& eigenvalues, double merge_tol = 1e-12);
};

/// Parses {"atoms": [[loc, weight], ...], "spikes": [loc, ...], "q": number}.
SpectrumModel spectrum_model_from_json(const std::string& text);
std::string to_json(const SpectrumModel& model);

struct BoundaryValues {
  double v = 0.0;       // Hilbert transform
  double rho = 0.0;     // density
  double lambda = 0.0;
  double t = 0.0;
  bool near_edge = false;          // rho below kEdgeDensity; callers dividing by rho refuse it
  bool extrapolation_warning = false;  // the two epsilon levels disagree by > 1e-4 relative

  static constexpr double kEdgeDensity = 1e-3;
};

/// sum_k weight_k / (w - atom_k). Spikes carry no mass and are skipped.
Complex stieltjes_atomic(const SpectrumModel& model, Complex w);

/// Derivative of stieltjes_atomic in w.
Complex stieltjes_atomic_derivative(const SpectrumModel& model, Complex w);

/// Stieltjes transform of the semicircle of radius 2 sqrt(t),
///   G = (z - sqrt(z^2 - 4t)) / (2t),
/// on the branch with G ~ 1/z at infinity. sqrt(z - 2 sqrt t) sqrt(z + 2 sqrt t)
/// follows the sign of Im z, so from below the axis Im G = +pi rho.
template <typename Real>
std::complex<Real> semicircle_G(std::complex<Real> z, Real t) {
  if (t == Real(0)) return Real(1) / z;
  const Real edge = Real(2) * std::sqrt(t);
  std::complex<Real> root = std::sqrt(z - edge) * std::sqrt(z + edge);
  if (z.imag() == Real(0)) {
    // Real z outside the support: pick the root with the sign of z.
    const Real r = std::sqrt(std::max(z.real() * z.real() - Real(4) * t, Real(0)));
    root = std::complex<Real>(z.real() >= Real(0) ? r : -r, Real(0));
  }
  return (z - root) / (Real(2) * t);
}

template <typename Real>
Real semicircle_density(Real lambda, Real t) {
  const Real radius = Real(2) * std::sqrt(t);
  const Real gap = radius - std::abs(lambda);
  if (!(gap > Real(0))) return Real(0);
  const Real inside = gap * (radius + std::abs(lambda));
  return std::sqrt(inside) / (Real(2) * std::numbers::pi_v<Real> * t);
}

/// lambda / 2t inside the bulk, Re G(lambda) outside.
template <typename Real>
Real semicircle_hilbert(Real lambda, Real t) {
  if (lambda * lambda <= Real(4) * t) return lambda / (Real(2) * t);
  return semicircle_G(std::complex<Real>(lambda, Real(0)), t).real();
}

/// Mass of the semicircle of radius 2 sqrt(t) * scale above lambda.
double semicircle_tail_mass(double lambda, double t, double scale = 1.0);

/// lambda(x, t): the point with spectral mass x above it. With
/// radius_scale = sqrt(q) this is the minor quantile mu(x, t).
double semicircle_quantile(double x, double t, double radius_scale = 1.0);

struct FixedPointOptions {
  double damping = 0.5;
  int max_iterations = 500;
  int max_newton_iterations = 100;
  double tolerance = 1e-10;
};

struct FixedPointResult {
  Complex value;
  double residual = 0.0;
  int iterations = 0;
  bool used_newton = false;
};

/// Solves G = G0(z - shift * G) with G0 = stieltjes_atomic(model): damped
/// iteration started at G0(z), then Newton on the residual if it stalls.
FixedPointResult solve_subordination(const SpectrumModel& model, Complex z, double shift,
                                     const FixedPointOptions& options = {});

/// G(z, t) for X_t = A + H_t, A's limiting spectrum given by `model`.
Complex solve_G(const SpectrumModel& model, Complex z, double t, const FixedPointOptions& options = {});

/// G~(z, t) for the minor: characteristic shift q t instead of t.
Complex solve_Gtilde(const SpectrumModel& model, Complex z, double t, double q,
                     const FixedPointOptions& options = {});

/// Boundary values at lambda from G evaluated at lambda - i eps and
/// lambda - i eps/2, Richardson-extrapolated to eps -> 0.
BoundaryValues boundary_values(const StieltjesFn& G, double lambda, double t, double eps0 = 1e-6);

}  // namespace dbm

#endif  // DBM_FREEPROB_HPP_
