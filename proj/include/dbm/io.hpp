#ifndef DBM_IO_HPP_
#define DBM_IO_HPP_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dbm/montecarlo.hpp"

namespace dbm {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

inline constexpr std::string_view kBulkHeader =
    "lambda,mu,t,q,theory_W,theory_W_rho,mc_mean,mc_ci_low,mc_ci_high,n_samples";
inline constexpr std::string_view kSpikeBulkHeader =
    "mu,lambda,t,q,theory_W,theory_W_rho,mc_mean,mc_ci_low,mc_ci_high,n_samples";
inline constexpr std::string_view kTrajectoryHeader = "t,lambda1,mu1,edge_full,edge_minor";
inline constexpr std::string_view kScalarHeader = "quantity,value";
inline constexpr std::string_view kDeficitHeader =
    "N,n,p,theory_deficit,mc_mean,mc_ci_low,mc_ci_high,n_samples";

/// Shortest decimal that parses back to the same double; "nan", "inf", "-inf"
/// for non-finite values.
std::string format_double(double value);

/// One row of a curve file. Simulation columns are left empty when `n_samples`
/// is negative (theory-only curves).
struct CurveRow {
  double lead = 0.0;    // lambda (bulk) or mu (spike-bulk)
  double second = 0.0;  // mu (bulk) or lambda (spike-bulk)
  double t = 0.0;
  double q = 0.0;
  double theory_W = 0.0;
  double theory_W_rho = 0.0;
  double mc_mean = 0.0;
  double mc_ci_low = 0.0;
  double mc_ci_high = 0.0;
  long n_samples = -1;
};

std::string curve_csv(std::string_view header, const std::vector<CurveRow>& rows);
std::string scalar_csv(const std::vector<std::pair<std::string, double>>& rows);
std::string trajectory_csv(const std::vector<TrajectoryPoint>& points);

/// CSV for any report; the schema follows config.kind.
std::string report_csv(const ExperimentReport& report);
/// Coverage, diagnostics and audit figures as quantity,value rows.
std::string report_summary_csv(const ExperimentReport& report, double threshold);

/// Full report with the config echo. wall_time_s is null unless
/// `include_wall_time`, which keeps repeated runs byte-identical.
std::string report_json(const ExperimentReport& report, bool include_wall_time = false);
std::string config_json(const ExperimentConfig& config);

std::string experiment_kind_name(ExperimentKind kind);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

/// Rows of whitespace- or comma-separated numbers; must be square and exactly symmetric.
SymmetricMatrixd parse_matrix_text(const std::string& text);

}  // namespace dbm

#endif  // DBM_IO_HPP_
