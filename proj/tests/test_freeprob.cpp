#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "dbm/ensembles.hpp"
#include "dbm/freeprob.hpp"
#include "dbm/montecarlo.hpp"
#include "dbm/spectral.hpp"
#include "oracles.hpp"

using namespace dbm;
using std::numbers::pi;

namespace {

SpectrumModel two_atoms() {
  SpectrumModel m;
  m.atoms = {{-1.0, 0.5}, {1.0, 0.5}};
  return m;
}

std::vector<Complex> complex_grid() {
  std::vector<Complex> zs;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 4; ++b) {
      const double im = (b % 2 ? -1.0 : 1.0) * (0.05 + 0.6 * b);
      zs.emplace_back(-3.0 + 1.5 * a, im);
    }
  return zs;
}

/// Density integral over [a, b], with x = a + (b - a)(1 - cos s)/2 taming square-root edges.
double edge_integral(const std::function<double(double)>& rho, double a, double b, int m) {
  return oracle::simpson(
      [&](double s) { return rho(a + 0.5 * (b - a) * (1.0 - std::cos(s))) * 0.5 * (b - a) * std::sin(s); }, 0.0,
      pi, m);
}

/// Largest x in [lo, hi] with rho(x) above the threshold, by bisection.
double right_edge(const std::function<double(double)>& rho, double lo, double hi, double threshold) {
  for (int k = 0; k < 80; ++k) {
    const double mid = 0.5 * (lo + hi);
    (rho(mid) > threshold ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("freeprob") {
  TEST_CASE("atomic Stieltjes transform") {
    const auto zero = SpectrumModel::point_mass(0.0);
    CHECK(std::abs(stieltjes_atomic(zero, Complex(0, 1)) - Complex(0, -1)) < 1e-15);
    CHECK(std::abs(stieltjes_atomic(two_atoms(), Complex(0, 2)) - Complex(0, -0.4)) < 1e-15);

    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> re(-5, 5), im(1e-6, 5);
    int bad = 0;
    for (int k = 0; k < 1000; ++k) {
      bad += stieltjes_atomic(two_atoms(), Complex(re(gen), im(gen))).imag() >= 0.0;
    }
    CHECK(bad == 0);
    CHECK_THROWS(stieltjes_atomic(two_atoms(), Complex(0.3, 0.0)));
  }

  TEST_CASE("spectrum models") {
    SpectrumModel bad = two_atoms();
    bad.atoms[0].weight = 0.7;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    SpectrumModel spiked = two_atoms();
    spiked.spikes = {1.0};
    CHECK_THROWS_AS(spiked.validate(), InvalidArgument);

    const auto emp = SpectrumModel::empirical(Eigen::Vector4d(1.0, 1.0, -2.0, 3.0));
    REQUIRE(emp.atoms.size() == 3);
    double total = 0;
    for (const auto& a : emp.atoms) total += a.weight;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));

    const auto round = spectrum_model_from_json(to_json(two_atoms()));
    REQUIRE(round.atoms.size() == 2);
    CHECK(round.atoms[1].location == 1.0);
    CHECK(round.atoms[1].weight == 0.5);
    CHECK_THROWS(spectrum_model_from_json("{\"atoms\": [[0, 0.4]]}"));
  }

  TEST_CASE("semicircle closed form") {
    CHECK(std::abs(semicircle_G(Complex(100, 0), 1.0).real() - 0.010001) < 1e-8);
    const Complex expect(0, (1 - std::sqrt(5.0)) / 2);
    CHECK(std::abs(semicircle_G(Complex(0, 1), 1.0) - expect) < 1e-14);
    CHECK(std::abs(semicircle_G(Complex(0, -1e-8), 1.0) - Complex(0, 1)) < 1e-7);
    for (const auto& z : complex_grid()) {
      CHECK(std::abs(semicircle_G(z, 1.7) - oracle::semicircle_G(z, 1.7)) < 1e-13);
    }
  }

  TEST_CASE("semicircle density") {
    CHECK(semicircle_density(0.0, 1.0) == doctest::Approx(1.0 / pi).epsilon(1e-15));
    CHECK(semicircle_density(2.0, 1.0) == 0.0);
    CHECK(semicircle_density(-2.0 * std::sqrt(0.3), 0.3) == 0.0);
    const double total =
        edge_integral([](double x) { return semicircle_density(x, 1.0); }, -2.0, 2.0, 2000);
    CHECK(std::abs(total - 1.0) < 1e-10);
  }

  TEST_CASE("quantiles") {
    CHECK(semicircle_quantile(0.5, 1.3) == 0.0);
    CHECK(semicircle_quantile(0.0, 1.0) == 2.0);
    CHECK(semicircle_quantile(1.0, 1.0) == -2.0);
    const double q = 0.3;
    for (int k = 1; k < 100; ++k) {
      const double x = k / 100.0;
      CHECK(std::abs(semicircle_quantile(x, 1.0, std::sqrt(q)) - std::sqrt(q) * semicircle_quantile(x, 1.0)) <
            1e-10);
      const double lx = semicircle_quantile(x, 1.0);
      const double above = oracle::simpson(
              [&](double s) { return oracle::semicircle_density(2.0 * std::sin(s), 1.0) * 2.0 * std::cos(s); },
              std::asin(lx / 2.0), pi / 2, 400);
      CHECK(std::abs(above - x) < 1e-9);
    }
  }

  TEST_CASE("subordination matches the semicircle for a point mass") {
    const auto zero = SpectrumModel::point_mass(0.0);
    for (const auto& z : complex_grid()) {
      CHECK(std::abs(solve_G(zero, z, 1.0) - semicircle_G(z, 1.0)) < 1e-10);
      CHECK(std::abs(solve_Gtilde(zero, z, 1.0, 0.5) - semicircle_G(z, 0.5)) < 1e-10);
    }
  }

  TEST_CASE("no-noise limit and q = 1") {
    for (const auto& z : complex_grid()) {
      CHECK(std::abs(solve_G(two_atoms(), z, 0.0) - stieltjes_atomic(two_atoms(), z)) < 1e-10);
      CHECK(std::abs(solve_G(two_atoms(), z, 1e-13) - stieltjes_atomic(two_atoms(), z)) < 1e-10);
      CHECK(std::abs(solve_Gtilde(two_atoms(), z, 0.8, 1.0) - solve_G(two_atoms(), z, 0.8)) < 1e-12);
    }
  }

  TEST_CASE("solutions satisfy the fixed point and Herglotz") {
    for (const auto& z : complex_grid()) {
      const auto r = solve_subordination(two_atoms(), z, 1.0);
      CHECK(r.residual < 1e-10);
      CHECK(std::abs(r.value - stieltjes_atomic(two_atoms(), z - 1.0 * r.value)) < 1e-9);
      CHECK(r.value.imag() * z.imag() < 0.0);
    }
  }

  TEST_CASE("boundary values") {
    auto G = [](Complex z) { return semicircle_G(z, 1.0); };
    const auto mid = boundary_values(G, 0.0, 1.0);
    CHECK(std::abs(mid.v) < 1e-8);
    CHECK(mid.rho == doctest::Approx(1.0 / pi).epsilon(1e-8));
    const auto out = boundary_values(G, 3.0, 1.0);
    CHECK(out.rho < 1e-8);
    CHECK(out.v == doctest::Approx((3 - std::sqrt(5.0)) / 2).epsilon(1e-8));
    CHECK(out.near_edge);

    auto G2 = [](Complex z) { return solve_G(two_atoms(), z, 1.0); };
    for (double x : {0.2, 0.7, 1.3, 2.1}) {
      CHECK(std::abs(boundary_values(G2, x, 1.0).rho - boundary_values(G2, -x, 1.0).rho) < 1e-8);
    }
  }

  TEST_CASE("minor semicircle edge") {
    const auto zero = SpectrumModel::point_mass(0.0);
    auto rho = [&](double x) {
      return boundary_values([&](Complex z) { return solve_Gtilde(zero, z, 1.0, 0.5); }, x, 1.0, 1e-12).rho;
    };
    CHECK(std::abs(right_edge(rho, 0.0, 3.0, 1e-5) - 2.0 * std::sqrt(0.5)) < 1e-6);
  }

  TEST_CASE("two-atom density: mass and Monte Carlo histogram") {
    auto G = [](Complex z) { return solve_G(two_atoms(), z, 1.0); };
    auto rho = [&](double x) { return boundary_values(G, x, 1.0).rho; };
    const double edge = right_edge(rho, 0.0, 5.0, 1e-7);
    // Symmetric about 0, which is a cusp at t = 1.
    const double half = edge_integral(rho, 0.0, edge, 4000);
    CHECK(std::abs(2.0 * half - 1.0) < 1e-6);

    const Eigen::Index N = 600;
    const auto A = diagonal_from_model(two_atoms(), N);
    std::vector<double> evals;
    for (std::uint64_t s = 0; s < 4; ++s) {
      const auto d = eig_sym(A + sample_goe(N, 1.0, SeedSpec{2024, s}));
      for (Eigen::Index k = 0; k < N; ++k) evals.push_back(d.eigenvalues(k));
    }
    const std::size_t bins = 20;
    const auto h = histogram(evals, bins, -3.0, 3.0);
    for (std::size_t b = 0; b < bins; ++b) {
      const double lo = -3.0 + 0.3 * b;
      const double expect = oracle::simpson(rho, lo, lo + 0.3, 60) / 0.3;
      const double count = static_cast<double>(h.counts[b]);
      const double tol = (3.0 * std::sqrt(count) + 8.0) / (static_cast<double>(evals.size()) * 0.3);
      CHECK(std::abs(h.density(b) - expect) < tol);
    }
  }
}
