// Reference implementations for tests. Nothing here calls the library.
#ifndef DBM_TESTS_ORACLES_HPP_
#define DBM_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Cyclic Jacobi rotations; eigenvalues sorted descending.
inline Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a, int sweeps = 100) {
  const Eigen::Index n = a.rows();
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> d(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(d.begin(), d.end(), std::greater<>());
  return Eigen::Map<Eigen::VectorXd>(d.data(), n);
}

/// Real roots of c3 x^3 + c2 x^2 + c1 x + c0 from the companion matrix.
inline std::vector<double> cubic_real_roots(double c3, double c2, double c1, double c0) {
  Eigen::Matrix3d comp = Eigen::Matrix3d::Zero();
  comp(0, 0) = -c2 / c3;
  comp(0, 1) = -c1 / c3;
  comp(0, 2) = -c0 / c3;
  comp(1, 0) = 1.0;
  comp(2, 1) = 1.0;
  Eigen::EigenSolver<Eigen::Matrix3d> es(comp);
  std::vector<double> out;
  for (int k = 0; k < 3; ++k) {
    const auto r = es.eigenvalues()(k);
    if (std::abs(r.imag()) < 1e-9) out.push_back(r.real());
  }
  return out;
}

/// The root of the most-overlap cubic inside [-2 sqrt t, 2 sqrt t], polished by Newton.
inline double lambda_star(double mu, double t, double q) {
  const double c1 = -((1 + 6 * q + q * q) * t + mu * mu), c0 = 4 * (1 + q) * t * mu;
  auto P = [&](double x) { return q * x * x * x + c1 * x + c0; };
  auto dP = [&](double x) { return 3 * q * x * x + c1; };
  for (double r : cubic_real_roots(q, 0.0, c1, c0)) {
    if (std::abs(r) <= 2 * std::sqrt(t) + 1e-9) {
      for (int k = 0; k < 5; ++k) r -= P(r) / dP(r);
      return r;
    }
  }
  return std::nan("");
}

/// Composite Simpson on [a, b] with m (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

/// Semicircle Stieltjes transform in long double, branch picked by Herglotz sign.
inline std::complex<double> semicircle_G(std::complex<double> z, double t) {
  using C = std::complex<long double>;
  const C zz(z.real(), z.imag());
  const long double tt = t;
  const C root = std::sqrt(zz * zz - 4.0L * tt);
  C g = (zz - root) / (2.0L * tt);
  if (z.imag() * static_cast<double>(g.imag()) > 0.0) g = (zz + root) / (2.0L * tt);
  return {static_cast<double>(g.real()), static_cast<double>(g.imag())};
}

inline double semicircle_density(double x, double t) {
  const double in = 4 * t - x * x;
  return in > 0 ? std::sqrt(in) / (2 * std::numbers::pi * t) : 0.0;
}

inline double W_goe(double mu, double lambda, double t, double q) {
  return (1 - q) * t / ((1 - q) * (1 - q) * t + (lambda - mu) * (q * lambda - mu));
}

/// Mean and standard error.
inline std::pair<double, double> mean_se(const std::vector<double>& xs) {
  double m = 0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (static_cast<double>(xs.size()) - 1) / static_cast<double>(xs.size()))};
}

}  // namespace oracle

#endif  // DBM_TESTS_ORACLES_HPP_
