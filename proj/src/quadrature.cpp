#include "dbm/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "dbm/errors.hpp"

namespace dbm {

GaussLegendre::GaussLegendre(int order) {
  if (order < 1) throw InvalidArgument("GaussLegendre: order must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  nodes = solver.eigenvalues();
  weights = 2.0 * solver.eigenvectors().row(0).transpose().array().square();
}

double integrate(const std::function<double(double)>& f, double a, double b, int panels,
                 int order) {
  if (panels < 1) throw InvalidArgument("integrate: panels must be >= 1");
  static thread_local int cached_order = 0;
  static thread_local GaussLegendre rule(1);
  if (cached_order != order) {
    rule = GaussLegendre(order);
    cached_order = order;
  }
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    double panel = 0.0;
    for (int k = 0; k < order; ++k) panel += rule.weights(k) * f(mid + 0.5 * h * rule.nodes(k));
    total += 0.5 * h * panel;
  }
  return total;
}

double integrate_semicircle(const std::function<double(double)>& f, double radius, int panels,
                            int order) {
  using std::numbers::pi;
  const auto integrand = [&](double theta) {
    const double c = std::cos(theta);
    return f(radius * std::sin(theta)) * 2.0 / pi * c * c;
  };
  return integrate(integrand, -pi / 2, pi / 2, panels, order);
}

}  // namespace dbm
