#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <nsdp/sqp.hpp>

namespace nsdp::cli {

enum class Format { Table, Csv, Json };

/// 0 KKT, 2 FeasibleCQFail, 3/4 infeasible stationary, 5 MaxIter, 1 otherwise.
int exit_code(TerminationClass tc);

nlohmann::json to_json(const SolverConfig& cfg);
nlohmann::json to_json(const SolveReport& report);

/// Iteration table: k, ρ_k, x_k, ‖d_k‖, l^v(d_fea), v, f, α, R_fea, R_opt,
/// followed by a short summary block.
void write_table(const SolveReport& report, std::ostream& out);
void write_csv(const SolveReport& report, std::ostream& out);
void write_report(const SolveReport& report, Format format, std::ostream& out);

/// One numeric row as printed by write_table / write_csv.
struct ParsedRow {
  int k = 0;
  double rho = 0.0;
  Eigen::VectorXd x;
  double norm_d = 0.0;
  double lv_dfea = 0.0;
  double v = 0.0;
  double f = 0.0;
  std::optional<double> alpha;
  double r_fea = 0.0;
  double r_opt = 0.0;
};

/// Reads back the rows of write_table output; throws std::runtime_error on
/// malformed rows.
std::vector<ParsedRow> parse_table(std::istream& in);
std::vector<ParsedRow> parse_csv(std::istream& in);

/// "1,2.5,-3" → vector; throws std::invalid_argument.
Eigen::VectorXd parse_vector(const std::string& text);

/// Full command line entry point. Returns the process exit code.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nsdp::cli
