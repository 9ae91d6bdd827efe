#include "dbm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dbm/errors.hpp"

namespace dbm {
namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& xs) {
  json out = json::array();
  for (double x : xs) out.push_back(number_or_null(x));
  return out;
}

std::string recipe_name(RankOneRecipe r) { return r == RankOneRecipe::uniform ? "uniform" : "tail"; }

std::string matrix_kind_name(MatrixKind k) {
  switch (k) {
    case MatrixKind::null: return "null";
    case MatrixKind::rank_one: return "rank_one";
    case MatrixKind::explicit_matrix: return "explicit";
    case MatrixKind::bernoulli: return "bernoulli";
  }
  return "unknown";
}

json config_object(const ExperimentConfig& c) {
  json a;
  a["kind"] = matrix_kind_name(c.a.kind);
  if (c.a.kind == MatrixKind::rank_one) {
    if (c.a.psi) {
      a["psi"] = std::vector<double>(c.a.psi->data(), c.a.psi->data() + c.a.psi->size());
    } else {
      a["recipe"] = recipe_name(c.a.recipe);
      a["spike"] = c.a.spike;
    }
  }
  if (c.a.kind == MatrixKind::explicit_matrix && c.a.matrix) a["dim"] = c.a.matrix->dim();
  if (c.kind == ExperimentKind::bernoulli_bulk || c.kind == ExperimentKind::bernoulli_spike) a["p"] = c.a.p;

  json j;
  j["kind"] = experiment_kind_name(c.kind);
  j["N"] = c.N;
  j["q"] = c.q;
  j["n"] = c.n();
  j["t"] = c.t;
  j["trials"] = c.trials;
  j["master_seed"] = c.master_seed;
  j["A"] = a;
  j["bins"] = c.bins;
  j["range_lo"] = c.range_lo ? json(*c.range_lo) : json(nullptr);
  j["range_hi"] = c.range_hi ? json(*c.range_hi) : json(nullptr);
  j["figure_mode"] = c.figure_mode;
  j["audit"] = c.audit;
  switch (c.kind) {
    case ExperimentKind::bulk:
      j["x"] = c.x;
      j["mu_target"] = c.mu_target ? json(*c.mu_target) : json(nullptr);
      break;
    case ExperimentKind::bernoulli_bulk:
      j["lambda_center"] = c.lambda_center;
      j["lambda_halfwidth"] = c.lambda_halfwidth ? json(*c.lambda_halfwidth) : json(nullptr);
      break;
    case ExperimentKind::bernoulli_spike:
      j["N_list"] = c.N_list;
      break;
    case ExperimentKind::spike_path:
      j["t_grid"] = c.t_grid;
      break;
    default:
      break;
  }
  return j;
}

json estimate_object(const OverlapEstimate& e) {
  return json{{"center", number_or_null(e.center)}, {"mean", number_or_null(e.mean)},
              {"ci_low", number_or_null(e.ci_low)}, {"ci_high", number_or_null(e.ci_high)},
              {"n_samples", e.n_samples}};
}

json audit_object(const AuditSummary& a) {
  return json{{"pairs", a.pairs},
              {"max_row_sum_deviation", a.max_row_sum_deviation},
              {"min_interlacing_margin", number_or_null(a.min_interlacing_margin)},
              {"interlacing_failures", a.interlacing_failures},
              {"max_reconstruction_error", a.max_reconstruction_error},
              {"max_orthonormality_error", a.max_orthonormality_error}};
}

double bin_edge_q(const ExperimentReport& r) {
  const auto& c = r.config;
  return static_cast<double>(c.n()) / static_cast<double>(c.N);
}

double spike_of(const ExperimentConfig& c) {
  if (c.a.psi) return c.a.psi->squaredNorm();
  return c.a.spike;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string curve_csv(std::string_view header, const std::vector<CurveRow>& rows) {
  std::string out(header);
  out += '\n';
  for (const auto& r : rows) {
    out += format_double(r.lead) + ',' + format_double(r.second) + ',' + format_double(r.t) + ',' +
           format_double(r.q) + ',' + format_double(r.theory_W) + ',' + format_double(r.theory_W_rho) + ',';
    if (r.n_samples >= 0) {
      out += format_double(r.mc_mean) + ',' + format_double(r.mc_ci_low) + ',' +
             format_double(r.mc_ci_high) + ',' + std::to_string(r.n_samples);
    } else {
      out += ",,,";
    }
    out += '\n';
  }
  return out;
}

std::string scalar_csv(const std::vector<std::pair<std::string, double>>& rows) {
  std::string out(kScalarHeader);
  out += '\n';
  for (const auto& [k, v] : rows) out += k + ',' + format_double(v) + '\n';
  return out;
}

std::string trajectory_csv(const std::vector<TrajectoryPoint>& points) {
  std::string out(kTrajectoryHeader);
  out += '\n';
  for (const auto& p : points) {
    out += format_double(p.t) + ',' + format_double(p.lambda1) + ',' + format_double(p.mu1) + ',' +
           format_double(p.edge_full) + ',' + format_double(p.edge_minor) + '\n';
  }
  return out;
}

std::string report_csv(const ExperimentReport& r) {
  const auto& c = r.config;
  const double q = bin_edge_q(r);
  auto rows_with = [&](double second, double t) {
    std::vector<CurveRow> rows;
    for (std::size_t b = 0; b < r.estimates.size(); ++b) {
      const auto& e = r.estimates[b];
      rows.push_back({e.center, second, t, q, r.theory_plain[b], r.theory_weighted[b], e.mean, e.ci_low,
                      e.ci_high, static_cast<long>(e.n_samples)});
    }
    return rows;
  };
  switch (c.kind) {
    case ExperimentKind::bulk:
      return curve_csv(kBulkHeader, rows_with(r.mu_hat, c.t));
    case ExperimentKind::spike_bulk:
      return curve_csv(kSpikeBulkHeader, rows_with(spike_of(c), c.t));
    case ExperimentKind::bernoulli_bulk:
      return curve_csv(kSpikeBulkHeader, rows_with(c.lambda_center, c.a.p * (1.0 - c.a.p)));
    case ExperimentKind::spike_path:
      return trajectory_csv(r.trajectory);
    case ExperimentKind::spike_spike: {
      const auto& e = r.estimates.at(0);
      return scalar_csv({{"t", c.t},
                         {"q", q},
                         {"theory_f", r.theory.at(0)},
                         {"mc_mean", e.mean},
                         {"mc_ci_low", e.ci_low},
                         {"mc_ci_high", e.ci_high},
                         {"n_samples", static_cast<double>(e.n_samples)},
                         {"absorbed", static_cast<double>(r.absorbed)}});
    }
    case ExperimentKind::bernoulli_spike: {
      std::string out(kDeficitHeader);
      out += '\n';
      for (std::size_t k = 0; k < r.estimates.size(); ++k) {
        const auto& e = r.estimates[k];
        const auto N = c.N_list[k];
        const auto n = std::llround(c.q * static_cast<double>(N));
        out += std::to_string(N) + ',' + std::to_string(n) + ',' + format_double(c.a.p) + ',' +
               format_double(r.theory[k]) + ',' + format_double(e.mean) + ',' + format_double(e.ci_low) +
               ',' + format_double(e.ci_high) + ',' + std::to_string(e.n_samples) + '\n';
      }
      return out;
    }
  }
  throw InvalidArgument("report_csv: unknown experiment kind");
}

std::string report_summary_csv(const ExperimentReport& r, double threshold) {
  std::vector<std::pair<std::string, double>> rows = {
      {"coverage", r.coverage},
      {"covered", static_cast<double>(r.covered)},
      {"interior_bins", static_cast<double>(r.interior_count)},
      {"threshold", threshold},
  };
  if (std::isfinite(r.mu_hat)) rows.emplace_back("mu_hat", r.mu_hat);
  if (r.interlace) {
    rows.emplace_back("interlace_low", r.interlace->first);
    rows.emplace_back("interlace_high", r.interlace->second);
    rows.emplace_back("argmax_bin", static_cast<double>(r.argmax_bin));
    rows.emplace_back("argmax_in_interval", r.argmax_in_interval ? 1.0 : 0.0);
  }
  if (r.total_mass) {
    rows.emplace_back("total_mass_mean", r.total_mass->mean);
    rows.emplace_back("total_mass_ci_low", r.total_mass->ci_low);
    rows.emplace_back("total_mass_ci_high", r.total_mass->ci_high);
    rows.emplace_back("total_mass_theory", r.total_mass_theory);
  }
  rows.emplace_back("aborted", static_cast<double>(r.aborted));
  rows.emplace_back("absorbed", static_cast<double>(r.absorbed));
  rows.emplace_back("pairs_audited", static_cast<double>(r.audit.pairs));
  rows.emplace_back("max_row_sum_deviation", r.audit.max_row_sum_deviation);
  rows.emplace_back("min_interlacing_margin", r.audit.min_interlacing_margin);
  rows.emplace_back("max_reconstruction_error", r.audit.max_reconstruction_error);
  return scalar_csv(rows);
}

std::string config_json(const ExperimentConfig& config) { return config_object(config).dump(2); }

std::string report_json(const ExperimentReport& r, bool include_wall_time) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = std::string(kToolVersion);
  j["config"] = config_object(r.config);
  json est = json::array();
  for (const auto& e : r.estimates) est.push_back(estimate_object(e));
  j["estimates"] = est;
  j["theory"] = numbers(r.theory);
  j["theory_W"] = numbers(r.theory_plain);
  j["theory_W_rho"] = numbers(r.theory_weighted);
  j["coverage"] = json{{"fraction", number_or_null(r.coverage)},
                       {"covered", r.covered},
                       {"interior_bins", r.interior_count},
                       {"interior", r.interior}};
  j["wall_time_s"] = include_wall_time ? json(r.wall_time_s) : json(nullptr);

  json diag;
  diag["aborted"] = r.aborted;
  diag["absorbed"] = r.absorbed;
  diag["audit"] = audit_object(r.audit);
  diag["warnings"] = r.warnings;
  if (std::isfinite(r.mu_hat)) diag["mu_hat"] = r.mu_hat;
  if (r.interlace) {
    diag["interlace_interval"] = {r.interlace->first, r.interlace->second};
    diag["argmax_bin"] = r.argmax_bin;
    diag["argmax_in_interval"] = r.argmax_in_interval;
  }
  if (r.total_mass) {
    diag["total_mass"] = estimate_object(*r.total_mass);
    diag["total_mass_theory"] = number_or_null(r.total_mass_theory);
  }
  j["diagnostics"] = diag;
  if (!r.trajectory.empty()) {
    json traj = json::array();
    for (const auto& p : r.trajectory) {
      traj.push_back(json{{"t", p.t}, {"lambda1", p.lambda1}, {"mu1", p.mu1}, {"edge_full", p.edge_full},
                          {"edge_minor", number_or_null(p.edge_minor)}});
    }
    j["trajectory"] = traj;
  }
  return j.dump(2) + "\n";
}

std::string experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::bulk: return "bulk";
    case ExperimentKind::spike_spike: return "spike_spike";
    case ExperimentKind::spike_bulk: return "spike_bulk";
    case ExperimentKind::spike_path: return "spike_path";
    case ExperimentKind::bernoulli_bulk: return "bernoulli_bulk";
    case ExperimentKind::bernoulli_spike: return "bernoulli_spike";
  }
  return "unknown";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw InvalidArgument("write failed for " + path);
}

SymmetricMatrixd parse_matrix_text(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    for (char& ch : line) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream cells(line);
    std::vector<double> row;
    std::string cell;
    while (cells >> cell) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw InvalidArgument("matrix: cannot parse '" + cell + "'");
      }
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const auto N = static_cast<Eigen::Index>(rows.size());
  if (N == 0) throw InvalidArgument("matrix: no rows");
  Eigen::MatrixXd M(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != N) {
      throw InvalidArgument("matrix: row " + std::to_string(i + 1) + " has the wrong length");
    }
    for (Eigen::Index j = 0; j < N; ++j) M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return SymmetricMatrixd::from_dense(M);
}

}  // namespace dbm
