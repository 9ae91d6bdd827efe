#include "cli.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dbm/errors.hpp"
#include "dbm/freeprob.hpp"
#include "dbm/io.hpp"
#include "dbm/montecarlo.hpp"
#include "dbm/theory.hpp"

namespace dbm {
namespace {

using nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Common {
  std::uint64_t seed = 42;
  std::string out;
  std::string format = "csv";
  unsigned threads = 0;
  bool timing = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  sub->add_option("--out", c.out, "Output file; stdout when omitted");
  sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads, 0 = all cores")->capture_default_str();
  sub->add_flag("--timing", c.timing, "Record wall time in JSON reports");
}

/// Writes the primary result to --out or `out`; side outputs go next to
/// --out with a suffix, or to `err`.
class Sink {
 public:
  Sink(const Common& c, std::ostream& out, std::ostream& err) : c_(c), out_(out), err_(err) {}

  void primary(const std::string& text) {
    if (c_.out.empty()) {
      out_ << text;
    } else {
      write_text_file(c_.out, text);
    }
  }

  void side(const std::string& suffix, const std::string& text) {
    if (c_.out.empty()) {
      err_ << text;
    } else {
      write_text_file(c_.out + suffix, text);
    }
  }

  bool json() const { return c_.format == "json"; }

 private:
  const Common& c_;
  std::ostream& out_;
  std::ostream& err_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

std::string curve_json(const std::string& mode, const json& params, std::string_view header,
                       const std::vector<CurveRow>& rows) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = std::string(kToolVersion);
  j["mode"] = mode;
  j["config"] = params;
  json cols = json::array();
  std::string h(header);
  std::size_t pos = 0;
  for (int k = 0; k < 6; ++k) {
    const std::size_t comma = h.find(',', pos);
    cols.push_back(h.substr(pos, comma - pos));
    pos = comma + 1;
  }
  j["columns"] = cols;
  json data = json::array();
  for (const auto& r : rows) {
    json row = json::array();
    for (double v : {r.lead, r.second, r.t, r.q, r.theory_W, r.theory_W_rho}) {
      row.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    }
    data.push_back(row);
  }
  j["theory"] = data;
  return j.dump(2) + "\n";
}

std::string scalars_json(const std::string& mode, const json& params,
                         const std::vector<std::pair<std::string, double>>& values) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = std::string(kToolVersion);
  j["mode"] = mode;
  j["config"] = params;
  json v;
  for (const auto& [k, x] : values) v[k] = std::isfinite(x) ? json(x) : json(nullptr);
  j["theory"] = v;
  return j.dump(2) + "\n";
}

// theory

struct TheoryArgs {
  std::string kernel;
  bool lambda_star = false;
  bool interlace = false;
  bool spike_f = false;
  bool spike_g = false;
  bool bernoulli = false;
  double q = 0.5;
  double t = 1.0;
  double x = 0.5;
  double mu = kNaN;
  double lambda = kNaN;
  double t_max = kNaN;
  double p = 0.5;
  int bins = 50;
  int points = 100;
  long N = 400;
  std::string model;
};

void emit_scalars(Sink& sink, const std::string& mode, const json& params,
                  const std::vector<std::pair<std::string, double>>& values) {
  sink.primary(sink.json() ? scalars_json(mode, params, values) : scalar_csv(values));
}

void emit_curve(Sink& sink, const std::string& mode, const json& params, std::string_view header,
                const std::vector<CurveRow>& rows) {
  sink.primary(sink.json() ? curve_json(mode, params, header, rows) : curve_csv(header, rows));
}

int cmd_theory(const TheoryArgs& a, Sink& sink) {
  const int modes = !a.kernel.empty() + a.lambda_star + a.interlace + a.spike_f + a.spike_g + a.bernoulli;
  require(modes == 1,
          "theory: choose exactly one of --kernel, --lambda-star, --interlace, --spike-f, --spike-g, "
          "--bernoulli-expansion");
  require(a.t > 0.0, "theory: --t must be positive");
  const json params = {{"q", a.q}, {"t", a.t}};

  if (a.lambda_star) {
    require(std::isfinite(a.mu), "theory --lambda-star needs --mu");
    emit_scalars(sink, "lambda_star", params, {{"mu", a.mu}, {"lambda_star", lambda_star(a.mu, a.t, a.q)}});
    return kExitOk;
  }
  if (a.interlace) {
    const auto [lo, hi] = interlace_interval(a.x, a.t, a.q);
    emit_scalars(sink, "interlace", params, {{"x", a.x}, {"interlace_low", lo}, {"interlace_high", hi}});
    return kExitOk;
  }
  if (a.bernoulli) {
    require(a.N >= 2, "theory: --N must be >= 2");
    const auto N = static_cast<Eigen::Index>(a.N);
    const auto n = static_cast<Eigen::Index>(std::llround(a.q * static_cast<double>(N)));
    const double top = bernoulli_spike(N, n, a.p);
    const double frac = static_cast<double>(n) / static_cast<double>(N);
    emit_scalars(sink, "bernoulli_expansion", params,
                 {{"N", static_cast<double>(N)}, {"n", static_cast<double>(n)}, {"p", a.p},
                  {"top_overlap", top}, {"deficit", frac - top}});
    return kExitOk;
  }
  if (a.spike_f) {
    require(std::isfinite(a.lambda) && std::isfinite(a.mu), "theory --spike-f needs --lambda and --mu");
    if (!std::isfinite(a.t_max)) {
      emit_scalars(sink, "spike_f", params, {{"f_spike", f_spike(a.lambda, a.mu, a.q, a.t)}});
      return kExitOk;
    }
    require(a.t_max > 0.0 && a.points >= 2, "theory --spike-f: --t-max > 0 and --points >= 2 required");
    std::vector<std::pair<std::string, double>> rows;
    std::string csv = "t,f_spike\n";
    json data = json::array();
    for (int k = 0; k < a.points; ++k) {
      const double tk = a.t_max * k / (a.points - 1);
      double f = kNaN;
      try {
        f = f_spike(a.lambda, a.mu, a.q, tk);
      } catch (const DomainError&) {
      }
      csv += format_double(tk) + ',' + format_double(f) + '\n';
      data.push_back({tk, std::isfinite(f) ? json(f) : json(nullptr)});
    }
    if (sink.json()) {
      json j = {{"schema_version", kSchemaVersion}, {"tool_version", std::string(kToolVersion)},
                {"mode", "spike_f_curve"}, {"config", params}, {"columns", {"t", "f_spike"}},
                {"theory", data}};
      sink.primary(j.dump(2) + "\n");
    } else {
      sink.primary(csv);
    }
    return kExitOk;
  }
  require(a.bins >= 1, "theory: --bins must be >= 1");
  if (a.spike_g) {
    require(std::isfinite(a.lambda), "theory --spike-g needs --lambda");
    const double edge = 2.0 * std::sqrt(a.q * a.t);
    std::vector<CurveRow> rows;
    for (int b = 0; b < a.bins; ++b) {
      const double m = -edge + 2.0 * edge * (b + 0.5) / a.bins;
      const double g = g_spike_bulk(a.lambda, a.q, a.t, m);
      rows.push_back({m, a.lambda, a.t, a.q, g, g * semicircle_density(m, a.q * a.t)});
    }
    emit_curve(sink, "spike_g", params, kSpikeBulkHeader, rows);
    return kExitOk;
  }

  // W(mu, lambda) on a lambda grid.
  require(a.kernel == "goe" || a.kernel == "general", "theory: --kernel must be goe or general");
  require(a.q > 0.0 && a.q < 1.0, "theory: --q must lie in (0, 1)");
  std::vector<CurveRow> rows;
  if (a.kernel == "goe") {
    const double mu = std::isfinite(a.mu) ? a.mu : semicircle_quantile(a.x, a.t, std::sqrt(a.q));
    const double minor_edge = 2.0 * std::sqrt(a.q * a.t);
    if (!(std::abs(mu) < minor_edge)) {
      throw DomainError("theory: mu = " + format_double(mu) + " outside the minor bulk |mu| < 2 sqrt(q t) = " +
                        format_double(minor_edge));
    }
    const double edge = 2.0 * std::sqrt(a.t);
    for (int b = 0; b < a.bins; ++b) {
      const double l = -edge + 2.0 * edge * (b + 0.5) / a.bins;
      const double w = W_goe(mu, l, a.t, a.q).value;
      rows.push_back({l, mu, a.t, a.q, w, w * semicircle_density(l, a.t)});
    }
  } else {
    require(!a.model.empty(), "theory --kernel general needs --model");
    require(std::isfinite(a.mu), "theory --kernel general needs --mu");
    require(a.N >= 2, "theory: --N must be >= 2");
    const SpectrumModel model = spectrum_model_from_json(read_text_file(a.model));
    const auto N = static_cast<Eigen::Index>(a.N);
    const auto n = static_cast<Eigen::Index>(std::llround(a.q * static_cast<double>(N)));
    require(n >= 1 && n <= N - 1, "theory: round(q N) must lie in [1, N-1]");
    const GeneralKernel kernel(diagonal_from_model(model, N), n, a.t);
    double lo = model.atoms.front().location, hi = lo;
    for (const auto& at : model.atoms) {
      lo = std::min(lo, at.location);
      hi = std::max(hi, at.location);
    }
    lo -= 2.0 * std::sqrt(a.t);
    hi += 2.0 * std::sqrt(a.t);
    const double q = kernel.q();
    for (int b = 0; b < a.bins; ++b) {
      const double l = lo + (hi - lo) * (b + 0.5) / a.bins;
      const double rho = kernel.full_boundary(l).rho;
      double w = kNaN;
      try {
        w = kernel.W(a.mu, l).value;
      } catch (const DomainError&) {
      }
      rows.push_back({l, a.mu, a.t, q, w, w * rho});
    }
  }
  emit_curve(sink, "kernel_" + a.kernel, params, kBulkHeader, rows);
  return kExitOk;
}

// experiments

struct ExperimentArgs {
  ExperimentConfig config;
  std::string model;
  std::string matrix;
  double lo = kNaN;
  double hi = kNaN;
  double mu_target = kNaN;
  bool no_audit = false;
  double threshold = 0.95;
  // spike
  std::string mode;
  double lambda = 1.0;
  double mu = kNaN;
  double t_max = 1.2;
  double dt = 0.01;
  // bernoulli
  std::vector<long> N_list;
  double window = kNaN;
};

void add_experiment_options(CLI::App* sub, ExperimentArgs& a) {
  auto& c = a.config;
  sub->add_option("--N", c.N, "Matrix size")->capture_default_str();
  sub->add_option("--q,--qfrac", c.q, "Minor fraction, n = round(q N)")->capture_default_str();
  sub->add_option("--t", c.t, "Time")->capture_default_str();
  sub->add_option("--trials", c.trials, "Monte Carlo trials")->capture_default_str();
  sub->add_option("--bins", c.bins, "Number of bins")->capture_default_str();
  sub->add_option("--lo", a.lo, "Lower end of the bin range");
  sub->add_option("--hi", a.hi, "Upper end of the bin range");
  sub->add_flag("--figure", c.figure_mode, "Weight estimates and theory by the density");
  sub->add_flag("--no-audit", a.no_audit, "Skip the per-pair invariant audits");
}

void finish_config(ExperimentArgs& a, const Common& common) {
  auto& c = a.config;
  c.master_seed = common.seed;
  c.threads = common.threads;
  c.audit = !a.no_audit;
  if (std::isfinite(a.lo)) c.range_lo = a.lo;
  if (std::isfinite(a.hi)) c.range_hi = a.hi;
}

int emit_report(const ExperimentReport& r, const Common& common, Sink& sink, bool summary, double threshold) {
  if (sink.json()) {
    sink.primary(report_json(r, common.timing));
  } else {
    sink.primary(report_csv(r));
    if (summary) sink.side(".summary.csv", report_summary_csv(r, threshold));
  }
  return kExitOk;
}

ExperimentReport run_bulk(ExperimentArgs& a, const Common& common) {
  finish_config(a, common);
  auto& c = a.config;
  c.kind = ExperimentKind::bulk;
  if (std::isfinite(a.mu_target)) c.mu_target = a.mu_target;
  require(a.model.empty() || a.matrix.empty(), "give at most one of --model and --matrix");
  if (!a.model.empty()) {
    c.a.kind = MatrixKind::explicit_matrix;
    c.a.matrix = diagonal_from_model(spectrum_model_from_json(read_text_file(a.model)), c.N);
  } else if (!a.matrix.empty()) {
    c.a.kind = MatrixKind::explicit_matrix;
    c.a.matrix = parse_matrix_text(read_text_file(a.matrix));
  }
  c.validate();
  return run_bulk_experiment(c);
}

int cmd_simulate(ExperimentArgs& a, const Common& common, Sink& sink) {
  return emit_report(run_bulk(a, common), common, sink, false, a.threshold);
}

int cmd_compare(ExperimentArgs& a, const Common& common, Sink& sink, std::ostream& err) {
  require(a.threshold >= 0.0 && a.threshold <= 1.0, "compare: --threshold must lie in [0, 1]");
  const ExperimentReport r = run_bulk(a, common);
  emit_report(r, common, sink, true, a.threshold);
  if (!(r.coverage >= a.threshold)) {
    err << "coverage " << format_double(r.coverage) << " below threshold " << format_double(a.threshold)
        << " (" << r.covered << " of " << r.interior_count << " interior bins)\n";
    return kExitCoverage;
  }
  return kExitOk;
}

int cmd_spike(ExperimentArgs& a, const Common& common, Sink& sink) {
  finish_config(a, common);
  auto& c = a.config;
  c.a.kind = MatrixKind::rank_one;
  c.a.spike = a.lambda;
  require(a.lambda > 0.0, "spike: --lambda must be positive");
  if (a.mode == "bulk") {
    require(!std::isfinite(a.mu), "spike --mode bulk takes no --mu: the minor of A is zero");
    c.kind = ExperimentKind::spike_bulk;
    c.a.recipe = RankOneRecipe::tail;
  } else {
    c.kind = a.mode == "path" ? ExperimentKind::spike_path : ExperimentKind::spike_spike;
    c.a.recipe = RankOneRecipe::uniform;
    if (std::isfinite(a.mu)) {
      require(a.mu > 0.0 && a.mu <= a.lambda, "spike: --mu must lie in (0, lambda]");
      const Eigen::Index n = c.n();
      require(n >= 1 && n <= c.N - 1, "spike: round(q N) must lie in [1, N-1]");
      Eigen::VectorXd psi(c.N);
      psi.head(n).setConstant(std::sqrt(a.mu / static_cast<double>(n)));
      psi.tail(c.N - n).setConstant(std::sqrt((a.lambda - a.mu) / static_cast<double>(c.N - n)));
      c.a.psi = psi;
    }
    if (c.kind == ExperimentKind::spike_path) {
      require(a.t_max > 0.0 && a.dt > 0.0, "spike --mode path: --t-max and --dt must be positive");
      const auto steps = static_cast<long>(std::llround(a.t_max / a.dt));
      for (long k = 0; k <= steps; ++k) c.t_grid.push_back(a.dt * static_cast<double>(k));
    }
  }
  c.validate();
  const ExperimentReport r = run_experiment(c);
  return emit_report(r, common, sink, c.kind == ExperimentKind::spike_bulk, a.threshold);
}

int cmd_bernoulli(ExperimentArgs& a, const Common& common, Sink& sink) {
  finish_config(a, common);
  auto& c = a.config;
  c.a.kind = MatrixKind::bernoulli;
  if (a.mode == "spike") {
    c.kind = ExperimentKind::bernoulli_spike;
    if (a.N_list.empty()) a.N_list = {100, 200, 400};
    for (long m : a.N_list) c.N_list.push_back(static_cast<Eigen::Index>(m));
  } else {
    c.kind = ExperimentKind::bernoulli_bulk;
    if (std::isfinite(a.window)) c.lambda_halfwidth = a.window;
  }
  c.validate();
  const ExperimentReport r = run_bernoulli(c);
  return emit_report(r, common, sink, c.kind == ExperimentKind::bernoulli_bulk, a.threshold);
}

// probes

struct ProbeArgs {
  std::string kind = "correlation";
  long N = 50;
  long n = -1;
  double t = 1.0;
  long samples = 100000;
  double dt = kNaN;
  long i = -1;
  long j = -1;
  bool no_antithetic = false;
};

int cmd_probe(const ProbeArgs& a, const Common& common, Sink& sink) {
  const auto N = static_cast<Eigen::Index>(a.N);
  const auto n = static_cast<Eigen::Index>(a.n >= 0 ? a.n : a.N / 2);
  require(a.samples >= 2, "probe: --samples must be >= 2");
  const auto samples = static_cast<std::size_t>(a.samples);
  json params = {{"kind", a.kind}, {"N", a.N}, {"n", n}, {"t", a.t}, {"samples", a.samples}, {"seed", common.seed}};
  if (a.kind == "correlation") {
    const double dt = std::isfinite(a.dt) ? a.dt : 1e-3;
    const auto r = correlation_probe(N, n, a.t, samples, common.seed, {}, dt, common.threads);
    if (sink.json()) {
      json rows = json::array();
      for (const auto& e : r.entries) {
        rows.push_back({{"i", e.index.i + 1}, {"l", e.index.l + 1}, {"j", e.index.j + 1}, {"k", e.index.k + 1},
                        {"estimate", e.estimate}, {"standard_error", e.standard_error},
                        {"theory", e.theory}, {"z_score", e.z_score()}});
      }
      params["dt"] = dt;
      json j = {{"schema_version", kSchemaVersion}, {"tool_version", std::string(kToolVersion)},
                {"config", params}, {"estimates", rows}, {"max_abs_z", r.max_abs_z}};
      sink.primary(j.dump(2) + "\n");
    } else {
      std::string csv = "i,l,j,k,estimate,standard_error,theory,z_score\n";
      for (const auto& e : r.entries) {
        csv += std::to_string(e.index.i + 1) + ',' + std::to_string(e.index.l + 1) + ',' +
               std::to_string(e.index.j + 1) + ',' + std::to_string(e.index.k + 1) + ',' +
               format_double(e.estimate) + ',' + format_double(e.standard_error) + ',' +
               format_double(e.theory) + ',' + format_double(e.z_score()) + '\n';
      }
      sink.primary(csv);
    }
    return kExitOk;
  }
  require(a.kind == "drift", "probe: --kind must be correlation or drift");
  require((a.i < 0) == (a.j < 0), "probe: give both --i and --j or neither");
  const double dt = std::isfinite(a.dt) ? a.dt : 1e-4;
  std::optional<std::pair<Eigen::Index, Eigen::Index>> pair;
  if (a.i >= 1) pair = std::make_pair(static_cast<Eigen::Index>(a.i - 1), static_cast<Eigen::Index>(a.j - 1));
  require(a.i < 0 || a.i >= 1, "probe: --i and --j are 1-based ranks");
  const auto r = drift_probe(N, n, a.t, dt, samples, common.seed, pair, !a.no_antithetic, common.threads);
  params["dt"] = dt;
  emit_scalars(sink, "drift_probe", params,
               {{"i", static_cast<double>(r.i + 1)},
                {"j", static_cast<double>(r.j + 1)},
                {"overlap", r.overlap},
                {"estimate", r.estimate},
                {"standard_error", r.standard_error},
                {"theory", r.theory},
                {"relative_deviation", r.relative_deviation()},
                {"martingale_mean", r.martingale_mean},
                {"martingale_se", r.martingale_se}});
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Eigenvector overlaps of a matrix and its minor under Dyson Brownian motion"};
  app.require_subcommand(1, 1);

  Common common;
  TheoryArgs theory;
  ExperimentArgs sim, cmp, spike, bern;
  ProbeArgs probe;

  auto* th = app.add_subcommand("theory", "Evaluate limit formulas on grids");
  add_common(th, common);
  th->add_option("--kernel", theory.kernel, "W kernel on a lambda grid: goe or general");
  th->add_flag("--lambda-star", theory.lambda_star, "Most overlapping lambda for a given mu");
  th->add_flag("--interlace", theory.interlace, "Interlacing interval at quantile x");
  th->add_flag("--spike-f", theory.spike_f, "Spike-spike squared overlap");
  th->add_flag("--spike-g", theory.spike_g, "Spike-bulk kernel over the minor bulk");
  th->add_flag("--bernoulli-expansion", theory.bernoulli, "1/N expansion of the Bernoulli top overlap");
  th->add_option("--q,--qfrac", theory.q, "Minor fraction")->capture_default_str();
  th->add_option("--t", theory.t, "Time")->capture_default_str();
  th->add_option("--x", theory.x, "Minor quantile")->capture_default_str();
  th->add_option("--mu", theory.mu, "Minor eigenvalue (or minor spike)");
  th->add_option("--lambda", theory.lambda, "Full spike");
  th->add_option("--t-max", theory.t_max, "Emit f over [0, t-max]");
  th->add_option("--points", theory.points, "Points of the f curve")->capture_default_str();
  th->add_option("--p", theory.p, "Bernoulli probability")->capture_default_str();
  th->add_option("--bins", theory.bins, "Grid points")->capture_default_str();
  th->add_option("--N", theory.N, "Matrix size")->capture_default_str();
  th->add_option("--model", theory.model, "SpectrumModel JSON for --kernel general");

  auto* si = app.add_subcommand("simulate", "Bulk overlap experiment");
  add_common(si, common);
  add_experiment_options(si, sim);
  si->add_option("--x", sim.config.x, "Minor quantile")->capture_default_str();
  si->add_option("--mu-target", sim.mu_target, "Use the minor eigenvalue closest to this value");
  si->add_option("--model", sim.model, "SpectrumModel JSON for A");
  si->add_option("--matrix", sim.matrix, "Explicit symmetric A, one row per line");

  auto* co = app.add_subcommand("compare", "Bulk experiment against theory with a coverage verdict");
  add_common(co, common);
  add_experiment_options(co, cmp);
  bool bulk_flag = true;
  co->add_flag("--bulk", bulk_flag, "Bulk kernel comparison (the only kind)");
  co->add_option("--x", cmp.config.x, "Minor quantile")->capture_default_str();
  co->add_option("--mu-target", cmp.mu_target, "Use the minor eigenvalue closest to this value");
  co->add_option("--model", cmp.model, "SpectrumModel JSON for A");
  co->add_option("--matrix", cmp.matrix, "Explicit symmetric A, one row per line");
  co->add_option("--threshold", cmp.threshold, "Minimum coverage for exit code 0")->capture_default_str();

  auto* sp = app.add_subcommand("spike", "Rank-one initial condition");
  add_common(sp, common);
  add_experiment_options(sp, spike);
  spike.mode = "spike";
  sp->add_option("--mode", spike.mode, "spike, bulk or path")
      ->check(CLI::IsMember({"spike", "bulk", "path"}))
      ->capture_default_str();
  sp->add_option("--lambda", spike.lambda, "Spike of A")->capture_default_str();
  sp->add_option("--mu", spike.mu, "Spike of the minor of A (default lambda n/N)");
  sp->add_option("--t-max", spike.t_max, "Path mode: final time")->capture_default_str();
  sp->add_option("--dt", spike.dt, "Path mode: time step")->capture_default_str();

  auto* be = app.add_subcommand("bernoulli", "Bernoulli random matrices");
  add_common(be, common);
  add_experiment_options(be, bern);
  bern.mode = "bulk";
  bern.config.N = 300;
  be->add_option("--mode", bern.mode, "bulk or spike")->check(CLI::IsMember({"bulk", "spike"}))->capture_default_str();
  be->add_option("--p", bern.config.a.p, "Entry probability")->capture_default_str();
  be->add_option("--N-list", bern.N_list, "Spike mode sizes")->delimiter(',');
  be->add_option("--lambda-center", bern.config.lambda_center, "Bulk mode: full eigenvalue window center")
      ->capture_default_str();
  be->add_option("--window", bern.window, "Bulk mode: window half-width (default 0.1 sqrt(p(1-p)))");

  auto* pr = app.add_subcommand("probe", "Monte Carlo checks of the increment identities");
  add_common(pr, common);
  pr->add_option("--kind", probe.kind, "correlation or drift")
      ->check(CLI::IsMember({"correlation", "drift"}))
      ->capture_default_str();
  pr->add_option("--N", probe.N, "Matrix size")->capture_default_str();
  pr->add_option("--n", probe.n, "Minor size (default N/2)");
  pr->add_option("--t", probe.t, "Time of the frozen state")->capture_default_str();
  pr->add_option("--samples,--trials", probe.samples, "Increments drawn")->capture_default_str();
  pr->add_option("--dt", probe.dt, "Increment variance scale (1e-3 correlation, 1e-4 drift)");
  pr->add_option("--i", probe.i, "Drift: minor rank, 1-based");
  pr->add_option("--j", probe.j, "Drift: full rank, 1-based");
  pr->add_flag("--no-antithetic", probe.no_antithetic, "Drift: plain increments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  Sink sink(common, out, err);
  try {
    if (th->parsed()) return cmd_theory(theory, sink);
    if (si->parsed()) return cmd_simulate(sim, common, sink);
    if (co->parsed()) return cmd_compare(cmp, common, sink, err);
    if (sp->parsed()) return cmd_spike(spike, common, sink);
    if (be->parsed()) return cmd_bernoulli(bern, common, sink);
    if (pr->parsed()) return cmd_probe(probe, common, sink);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitInvalid;
}

}  // namespace dbm
