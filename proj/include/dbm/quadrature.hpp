#ifndef DBM_QUADRATURE_HPP_
#define DBM_QUADRATURE_HPP_

#include <functional>

#include <Eigen/Dense>

namespace dbm {

/// Gauss-Legendre rule on [-1, 1] from the Golub-Welsch eigenproblem.
struct GaussLegendre {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  explicit GaussLegendre(int order);
};

/// Composite Gauss-Legendre: `panels` equal panels of an `order`-point rule.
double integrate(const std::function<double(double)>& f, double a, double b, int panels = 64,
                 int order = 8);

/// Integral of f against the semicircle of the given radius,
///   int_{-R}^{R} f(x) sqrt(R^2 - x^2) * 2 / (pi R^2) dx,
/// computed after x = R sin(theta), which removes the square-root edges.
double integrate_semicircle(const std::function<double(double)>& f, double radius,
                            int panels = 256, int order = 8);

}  // namespace dbm

#endif  // DBM_QUADRATURE_HPP_
