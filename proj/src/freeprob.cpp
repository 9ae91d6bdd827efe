#include "dbm/freeprob.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace dbm {

void SpectrumModel::validate() const {
  if (atoms.empty()) throw InvalidArgument("SpectrumModel: no atoms");
  double total = 0.0;
  for (const Atom& a : atoms) {
    if (!(a.weight > 0.0)) throw InvalidArgument("SpectrumModel: atom weights must be positive");
    if (!std::isfinite(a.location)) throw InvalidArgument("SpectrumModel: non-finite atom location");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("SpectrumModel: atom weights sum to " + std::to_string(total) +
                          ", expected 1");
  }
  for (double s : spikes) {
    for (const Atom& a : atoms) {
      if (s == a.location) throw InvalidArgument("SpectrumModel: spike coincides with an atom");
    }
  }
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("SpectrumModel: q must lie in (0, 1]");
}

SpectrumModel SpectrumModel::point_mass(double location) {
  return SpectrumModel{{Atom{location, 1.0}}, {}, 1.0};
}

SpectrumModel SpectrumModel::empirical(const Eigen::VectorXd& eigenvalues, double merge_tol) {
  if (eigenvalues.size() == 0) throw InvalidArgument("SpectrumModel::empirical: no eigenvalues");
  std::vector<double> sorted(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  std::sort(sorted.begin(), sorted.end());
  const double w = 1.0 / static_cast<double>(sorted.size());
  SpectrumModel model;
  for (double x : sorted) {
    if (!model.atoms.empty() && x - model.atoms.back().location <= merge_tol) {
      model.atoms.back().weight += w;
    } else {
      model.atoms.push_back(Atom{x, w});
    }
  }
  // Renormalize away the rounding of repeated w additions.
  double total = 0.0;
  for (const Atom& a : model.atoms) total += a.weight;
  for (Atom& a : model.atoms) a.weight /= total;
  return model;
}

SpectrumModel spectrum_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("SpectrumModel JSON: ") + e.what());
  }
  SpectrumModel model;
  try {
    for (const auto& pair : j.at("atoms")) {
      if (!pair.is_array() || pair.size() != 2) {
        throw InvalidArgument("SpectrumModel JSON: each atom must be [location, weight]");
      }
      model.atoms.push_back(Atom{pair[0].get<double>(), pair[1].get<double>()});
    }
    if (j.contains("spikes")) model.spikes = j.at("spikes").get<std::vector<double>>();
    if (j.contains("q")) model.q = j.at("q").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("SpectrumModel JSON: ") + e.what());
  }
  model.validate();
  return model;
}

std::string to_json(const SpectrumModel& model) {
  nlohmann::json j;
  j["atoms"] = nlohmann::json::array();
  for (const Atom& a : model.atoms) j["atoms"].push_back({a.location, a.weight});
  j["spikes"] = model.spikes;
  j["q"] = model.q;
  return j.dump();
}

Complex stieltjes_atomic(const SpectrumModel& model, Complex w) {
  if (w.imag() == 0.0) throw InvalidArgument("stieltjes_atomic: w must lie off the real axis");
  Complex sum = 0.0;
  for (const Atom& a : model.atoms) sum += a.weight / (w - a.location);
  return sum;
}

Complex stieltjes_atomic_derivative(const SpectrumModel& model, Complex w) {
  Complex sum = 0.0;
  for (const Atom& a : model.atoms) {
    const Complex d = w - a.location;
    sum -= a.weight / (d * d);
  }
  return sum;
}

double semicircle_tail_mass(double lambda, double t, double scale) {
  const double radius = 2.0 * std::sqrt(t) * scale;
  const double u = std::clamp(lambda / radius, -1.0, 1.0);
  return 0.5 - (u * std::sqrt(1.0 - u * u) + std::asin(u)) / std::numbers::pi;
}

double semicircle_quantile(double x, double t, double radius_scale) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("semicircle_quantile: x must lie in [0, 1]");
  if (!(t > 0.0)) throw InvalidArgument("semicircle_quantile: t must be positive");
  const double radius = 2.0 * std::sqrt(t) * radius_scale;
  if (x == 0.0) return radius;
  if (x == 1.0) return -radius;
  if (x == 0.5) return 0.0;
  if (x > 0.5) return -semicircle_quantile(1.0 - x, t, radius_scale);
  // Tail mass decreases in lambda.
  double lo = -radius;
  double hi = radius;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * radius; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (semicircle_tail_mass(mid, t, radius_scale) > x) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

bool herglotz_ok(Complex z, Complex G) {
  // Im z and Im G have opposite signs (or G is real only where z is).
  return z.imag() > 0.0 ? G.imag() <= 0.0 : G.imag() >= 0.0;
}

std::string describe(Complex z, double shift, double residual) {
  std::ostringstream os;
  os.precision(17);
  os << "z = " << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag())
     << "i, shift = " << shift << ", residual = " << residual;
  return os.str();
}

}  // namespace

FixedPointResult solve_subordination(const SpectrumModel& model, Complex z, double shift,
                                     const FixedPointOptions& options) {
  if (z.imag() == 0.0) throw InvalidArgument("solve_G: z must lie off the real axis");
  if (!(shift >= 0.0)) throw InvalidArgument("solve_G: t must be >= 0");
  const auto residual_of = [&](Complex G) {
    return std::abs(G - stieltjes_atomic(model, z - shift * G));
  };

  FixedPointResult out;
  Complex G = stieltjes_atomic(model, z);
  if (shift == 0.0) {
    out.value = G;
    return out;
  }
  Complex best = G;
  double best_residual = residual_of(G);
  // Stop well below the acceptance tolerance; the damped map contracts
  // linearly, so a few more steps are cheap.
  const double target = options.tolerance * 1e-3;
  int it = 0;
  for (; it < options.max_iterations && best_residual > target; ++it) {
    const Complex mapped = stieltjes_atomic(model, z - shift * G);
    G = (1.0 - options.damping) * G + options.damping * mapped;
    const double r = residual_of(G);
    if (r < best_residual) {
      best_residual = r;
      best = G;
    }
  }
  out.iterations = it;
  // Newton polish from a starting point; returns the best iterate.
  const auto newton = [&](Complex zz, Complex start, double& res) {
    const auto resid = [&](Complex g) { return std::abs(g - stieltjes_atomic(model, zz - shift * g)); };
    Complex g = start;
    Complex keep = start;
    res = resid(start);
    int stalled = 0;
    for (int k = 0; k < options.max_newton_iterations && stalled < 3 && res > target; ++k) {
      const Complex w = zz - shift * g;
      const Complex F = g - stieltjes_atomic(model, w);
      const Complex dF = 1.0 + shift * stieltjes_atomic_derivative(model, w);
      Complex next = g - F / dF;
      // Stay on the Herglotz side of the axis.
      if (!herglotz_ok(zz, next)) next = 0.5 * (g + Complex(next.real(), 0.0));
      g = next;
      const double r = resid(g);
      ++out.iterations;
      if (r < res) {
        stalled = 0;
        res = r;
        keep = g;
      } else {
        ++stalled;
      }
    }
    return keep;
  };
  if (best_residual > target) {
    out.used_newton = true;
    double r = 0.0;
    const Complex polished = newton(z, best, r);
    if (r < best_residual) {
      best = polished;
      best_residual = r;
    }
  }
  if (best_residual > target) {
    // Continuation in Im z: solve far from the axis, then walk back down.
    const double sign = z.imag() > 0.0 ? 1.0 : -1.0;
    double eta = std::max(1.0, 4.0 * std::abs(z.imag()));
    Complex g = stieltjes_atomic(model, Complex(z.real(), sign * eta));
    for (int k = 0; k < 2000; ++k) {
      g = 0.5 * g + 0.5 * stieltjes_atomic(model, Complex(z.real(), sign * eta) - shift * g);
    }
    bool ok = true;
    while (ok) {
      eta = std::max(0.7 * eta, std::abs(z.imag()));
      const Complex zz(z.real(), sign * eta);
      double r = 0.0;
      g = newton(zz, g, r);
      ok = r < options.tolerance;
      if (eta == std::abs(z.imag())) {
        if (r < best_residual) {
          best_residual = r;
          best = g;
        }
        break;
      }
    }
  }
  out.value = best;
  out.residual = best_residual;
  if (!(best_residual < options.tolerance) || !herglotz_ok(z, best)) {
    throw NumericError("solve_G did not converge: " + describe(z, shift, best_residual));
  }
  return out;
}

Complex solve_G(const SpectrumModel& model, Complex z, double t, const FixedPointOptions& options) {
  return solve_subordination(model, z, t, options).value;
}

Complex solve_Gtilde(const SpectrumModel& model, Complex z, double t, double q,
                     const FixedPointOptions& options) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("solve_Gtilde: q must lie in (0, 1]");
  return solve_subordination(model, z, q * t, options).value;
}

BoundaryValues boundary_values(const StieltjesFn& G, double lambda, double t, double eps0) {
  const Complex coarse = G(Complex(lambda, -eps0));
  const Complex fine = G(Complex(lambda, -0.5 * eps0));
  const Complex limit = 2.0 * fine - coarse;
  BoundaryValues out;
  out.lambda = lambda;
  out.t = t;
  out.v = limit.real();
  out.rho = std::max(limit.imag(), 0.0) / std::numbers::pi;
  out.near_edge = out.rho < BoundaryValues::kEdgeDensity;
  const double scale = std::max(std::abs(fine), 1e-300);
  out.extrapolation_warning = std::abs(fine - coarse) > 1e-4 * scale;
  return out;
}

}  // namespace dbm
