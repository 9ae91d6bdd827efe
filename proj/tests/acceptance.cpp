// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "dbm/freeprob.hpp"
#include "dbm/io.hpp"
#include "dbm/montecarlo.hpp"
#include "dbm/quadrature.hpp"
#include "dbm/theory.hpp"
#include "oracles.hpp"

using namespace dbm;

namespace {

constexpr std::uint64_t kSeed = 7;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fail]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

AuditSummary g_audit;

ExperimentReport audited(ExperimentReport r) {
  g_audit.merge(r.audit);
  return r;
}

Verdict bulk_kernel() {
  Verdict v;
  for (double q : {0.5, 0.9}) {
    for (double x : {0.1, 0.5, 0.95}) {
      ExperimentConfig c;
      c.kind = ExperimentKind::bulk;
      c.N = 400;
      c.q = q;
      c.t = 1.0;
      c.x = x;
      c.trials = 200;
      c.master_seed = kSeed;
      const auto r = audited(run_bulk_experiment(c));
      std::ostringstream tag;
      tag << "q=" << q << " x=" << x << " coverage " << r.covered << "/" << r.interior_count;
      v.require(r.coverage >= 0.95, tag.str());
      v.require(r.argmax_in_interval, "argmax in interval");
    }
  }
  return v;
}

Verdict invariants() {
  Verdict v;
  v.require(g_audit.pairs > 0, std::to_string(g_audit.pairs) + " pairs");
  v.require(g_audit.min_interlacing_margin >= -1e-9, fmt("interlacing margin %.3g", g_audit.min_interlacing_margin));
  v.require(g_audit.interlacing_failures == 0, "no interlacing failures");
  v.require(g_audit.max_row_sum_deviation <= 1e-10, fmt("row sums %.3g", g_audit.max_row_sum_deviation));
  v.require(g_audit.max_reconstruction_error <= 1e-8, fmt("reconstruction %.3g", g_audit.max_reconstruction_error));
  return v;
}

Verdict cross_consistency() {
  Verdict v;
  const double q = 0.5, t = 1.0;
  const auto S0 = InitialOverlapTransform::null(q);
  const StieltjesFn G = [t](Complex z) { return semicircle_G(z, t); };
  const StieltjesFn Gt = [q, t](Complex z) { return semicircle_G(z, q * t); };
  double worst = 0;
  for (int a = 0; a < 21; ++a) {
    for (int b = 0; b < 21; ++b) {
      const double mu = (-0.9 + 1.8 * a / 20) * 2 * std::sqrt(q * t);
      const double lambda = (-0.9 + 1.8 * b / 20) * 2 * std::sqrt(t);
      worst = std::max(worst, std::abs(W_general(S0, mu, lambda, t, G, Gt).value - W_goe(mu, lambda, t, q).value));
    }
  }
  v.require(worst < 1e-8, fmt("W_general vs W_goe %.3g", worst));

  const auto A = sample_goe(12, 1.0, SeedSpec{kSeed, 0});
  const auto S0A = InitialOverlapTransform::from_matrix(A, 5);
  bool exact = true;
  for (const Complex z : {Complex(0.2, 0.7), Complex(-1.5, -0.3)})
    for (const Complex zt : {Complex(-0.4, -0.3), Complex(2.0, 0.1)})
      exact = exact && S_general(S0A, z, zt, 0.0, G, Gt) == S0A(z, zt);
  v.require(exact, "S at t=0 equals S0");

  const auto atom = SpectrumModel::point_mass(0.0);
  double worst_g = 0;
  for (int k = 0; k < 20; ++k) {
    const Complex z(-3.0 + 6.0 * k / 19, (k % 2 ? 1.0 : -1.0) * (0.05 + 0.1 * (k % 5)));
    worst_g = std::max(worst_g, std::abs(solve_G(atom, z, 1.0) - oracle::semicircle_G(z, 1.0)));
  }
  v.require(worst_g < 1e-10, fmt("solve_G vs semicircle %.3g", worst_g));
  return v;
}

Verdict normalization() {
  Verdict v;
  double worst = 0;
  for (double q : {0.1, 0.5, 0.9}) {
    for (double t : {0.5, 1.0, 2.0}) {
      const double mu = 0.37 * 2 * std::sqrt(q * t);
      const double total = integrate_semicircle([&](double l) { return W_goe(mu, l, t, q).value; }, 2 * std::sqrt(t));
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  v.require(worst < 1e-5, fmt("kernel rows %.3g", worst));
  struct Point { double lambda, q, t; };
  double worst_g = 0;
  for (const Point p : {Point{3.0, 0.7, 1.0}, Point{2.0, 0.3, 1.5}, Point{4.0, 0.9, 0.5}}) {
    const double integral =
        p.q * integrate_semicircle([&](double m) { return g_spike_bulk(p.lambda, p.q, p.t, m); },
                                   2 * std::sqrt(p.q * p.t));
    worst_g = std::max(worst_g, std::abs(integral - p.q * p.t / (p.lambda * p.lambda)));
  }
  v.require(worst_g < 1e-6, fmt("spike mass %.3g", worst_g));
  return v;
}

Verdict spike_spike() {
  Verdict v;
  ExperimentConfig c;
  c.kind = ExperimentKind::spike_spike;
  c.N = 300;
  c.q = 0.3;
  c.t = 0.2;
  c.trials = 200;
  c.master_seed = kSeed;
  c.a.kind = MatrixKind::rank_one;
  c.a.spike = 1.0;
  c.a.recipe = RankOneRecipe::uniform;
  const auto r = audited(run_spike_spike(c));
  const double rel = std::abs(r.estimates[0].mean - 0.125) / 0.125;
  v.require(rel < 0.05, fmt("mean %.5f", r.estimates[0].mean) + fmt(" (rel %.3g)", rel));

  const double lam = 1.0, mu = 0.3, q = 0.3, h = 1e-6;
  double worst = 0;
  for (int k = 0; k <= 48; ++k) {
    const double t = 0.01 + 0.005 * k;
    const double dlog = (std::log(f_spike(lam, mu, q, t + h)) - std::log(f_spike(lam, mu, q, t - h))) / (2 * h);
    const double rhs = 1 / (t - lam * lam) + q / (q * t - mu * mu) + 2 * q / (lam * mu - q * t);
    worst = std::max(worst, std::abs(dlog - rhs));
  }
  v.require(worst < 1e-7, fmt("ODE residual %.3g", worst));
  return v;
}

Verdict spike_bulk() {
  Verdict v;
  ExperimentConfig c;
  c.kind = ExperimentKind::spike_bulk;
  c.N = 400;
  c.q = 0.7;
  c.t = 1.0;
  c.trials = 200;
  c.master_seed = kSeed;
  c.a.kind = MatrixKind::rank_one;
  c.a.spike = 3.0;
  c.a.recipe = RankOneRecipe::tail;
  const auto r = audited(run_spike_bulk(c));
  v.require(r.coverage >= 0.95,
            "coverage " + std::to_string(r.covered) + "/" + std::to_string(r.interior_count));
  const double rel = std::abs(r.total_mass->mean - r.total_mass_theory) / r.total_mass_theory;
  v.require(std::abs(r.total_mass_theory - 0.7 / 9) < 1e-15 && rel < 0.05,
            fmt("mass %.5f", r.total_mass->mean) + fmt(" (rel %.3g)", rel));
  return v;
}

Verdict bernoulli() {
  Verdict v;
  ExperimentConfig b;
  b.kind = ExperimentKind::bernoulli_bulk;
  b.N = 300;
  b.q = 0.5;
  b.trials = 200;
  b.master_seed = kSeed;
  b.a.kind = MatrixKind::bernoulli;
  b.a.p = 0.5;
  const auto rb = audited(run_bernoulli(b));
  v.require(rb.coverage >= 0.90,
            "bulk coverage " + std::to_string(rb.covered) + "/" + std::to_string(rb.interior_count));

  ExperimentConfig s = b;
  s.kind = ExperimentKind::bernoulli_spike;
  s.a.p = 0.7;
  s.N_list = {100, 200, 400};
  const auto rs = audited(run_bernoulli(s));
  for (std::size_t k = 0; k < rs.estimates.size(); ++k) {
    const auto& e = rs.estimates[k];
    const double expect = (1 - 0.5) * (1 / 0.7 - 1) / static_cast<double>(s.N_list[k]);
    const bool ok = std::abs(rs.theory[k] - expect) < 1e-15 && std::abs(e.mean - expect) <= 3 * e.half_width();
    v.require(ok, "N=" + std::to_string(s.N_list[k]) + fmt(" dev %.2f hw", std::abs(e.mean - expect) / e.half_width()));
  }
  return v;
}

Verdict probes() {
  Verdict v;
  const auto c = correlation_probe(50, 25, 1.0, 100000, kSeed);
  v.require(c.entries.size() == 36 && c.max_abs_z < 5.0, fmt("correlation max |z| %.3g", c.max_abs_z));
  const auto d = drift_probe(60, 30, 1.0, 1e-4, 100000, kSeed);
  v.require(d.relative_deviation() < 0.10, fmt("drift rel %.3g", d.relative_deviation()));
  return v;
}

Verdict most_overlapping() {
  Verdict v;
  bool bounds = true, agree = true;
  double worst = 0;
  for (double q : {0.1, 0.5, 0.9}) {
    for (int k = 1; k < 100; ++k) {
      const double mu = (-1.0 + 2.0 * k / 100) * 2 * std::sqrt(q);
      const double l = lambda_star(mu, 1.0, q);
      const double m = std::abs(mu), L = std::abs(l);
      bounds = bounds && m <= L + 1e-12 && L <= m / std::sqrt(q) + 1e-12 && (mu == 0 || l * mu > 0 || l == 0);
      worst = std::max(worst, std::abs(l - oracle::lambda_star(mu, 1.0, q)));
    }
  }
  agree = worst < 1e-10;
  v.require(bounds, "mu <= lambda* <= mu/sqrt(q)");
  v.require(agree, fmt("vs cubic roots %.3g", worst));
  double q1 = 0;
  for (double mu : {-1.7, -0.4, 0.0, 0.3, 1.9}) q1 = std::max(q1, std::abs(lambda_star(mu, 1.0, 1.0) - mu));
  v.require(q1 <= 1e-12, fmt("q=1 %.3g", q1));
  return v;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dbm-overlaps");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Verdict determinism() {
  Verdict v;
  const auto dir = std::filesystem::temp_directory_path() / "dbm_acceptance";
  std::filesystem::create_directories(dir);
  const std::vector<std::vector<std::string>> commands = {
      {"simulate", "--N", "120", "--trials", "100", "--format", "json"},
      {"compare", "--N", "120", "--trials", "100", "--q", "0.9", "--x", "0.95", "--threshold", "0"},
      {"spike", "--lambda", "1", "--mu", "0.3", "--q", "0.3", "--t", "0.2", "--N", "120", "--trials", "100"},
      {"spike", "--mode", "bulk", "--lambda", "3", "--q", "0.7", "--N", "120", "--trials", "100"},
      {"bernoulli", "--mode", "spike", "--p", "0.7", "--N-list", "60,120", "--trials", "100"},
      {"probe", "--kind", "correlation", "--N", "20", "--samples", "10000"},
  };
  int idx = 0;
  for (const auto& base : commands) {
    std::vector<std::string> files;
    for (const char* threads : {"1", "1", "2", "7"}) {
      auto args = base;
      const auto path = (dir / (std::to_string(idx) + "_" + std::to_string(files.size()))).string();
      args.insert(args.end(), {"--seed", "11", "--threads", threads, "--out", path});
      const int code = cli(args);
      files.push_back(code == 0 ? read_text_file(path) : std::string("exit ") + std::to_string(code));
    }
    bool same = true;
    for (const auto& f : files) same = same && f == files[0] && !files[0].empty();
    v.require(same, base[0]);
    ++idx;
  }
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"bulk kernel coverage", bulk_kernel},
      {"exact invariants", invariants},
      {"formula cross-consistency", cross_consistency},
      {"normalization identities", normalization},
      {"spike-spike overlap", spike_spike},
      {"spike-bulk overlap", spike_bulk},
      {"bernoulli universality", bernoulli},
      {"sde probes", probes},
      {"most-overlapping lambda", most_overlapping},
      {"determinism", determinism},
  };
  // The invariant line aggregates every simulated pair, so it runs after the rest.
  std::vector<Verdict> verdicts(criteria.size());
  std::vector<double> seconds(criteria.size());
  const std::vector<std::size_t> order = {0, 2, 3, 4, 5, 6, 7, 8, 9, 1};
  for (std::size_t k : order) {
    const auto start = std::chrono::steady_clock::now();
    try {
      verdicts[k] = criteria[k].run();
    } catch (const std::exception& e) {
      verdicts[k].pass = false;
      verdicts[k].detail = std::string("exception: ") + e.what();
    }
    seconds[k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    std::printf("%s %2zu %s (%.0f s): %s\n", verdicts[k].pass ? "PASS" : "FAIL", k + 1, criteria[k].name,
                seconds[k], verdicts[k].detail.c_str());
    failures += !verdicts[k].pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
