#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nsdp/model.hpp"
#include "nsdp/sqp.hpp"

namespace nsdp {

/// The six built-in problems, in registry order. make_problem also accepts
/// "rosen-suzuki-literal" (see problems.cpp).
const std::vector<std::string>& problem_names();

/// Throws std::invalid_argument for an unknown name.
std::unique_ptr<NsdpProblem> make_problem(std::string_view name);

struct ExpectedOutcome {
  /// Any of these termination classes is acceptable.
  std::vector<TerminationClass> classes;
  std::optional<Eigen::VectorXd> x_star;
  double x_tol = 0.0;
  /// Compare x against x_star in the max norm instead of the Euclidean one.
  bool x_max_norm = false;
  std::optional<double> v_star;
  double v_tol = 0.0;
  /// Upper bound on the final violation (feasible cases).
  std::optional<double> v_max;
  std::optional<double> f_star;
  double f_tol = 0.0;
  /// Closed interval for f (used instead of f_star when set).
  std::optional<std::pair<double, double>> f_range;
  /// Maximum wall time in seconds.
  std::optional<double> time_limit;
  std::string source;
  /// Hard cases must pass on their own; soft ones count only toward their
  /// group quota (if any).
  bool hard = true;
  std::string group;
};

struct Case {
  std::string problem;
  Eigen::VectorXd x0;
  ExpectedOutcome expected;

  /// "problem@(x0)" for display.
  std::string label() const;
};

std::vector<Case> list_cases();

/// A group passes when at least min_pass of its cases pass.
struct GroupQuota {
  std::string group;
  int min_pass = 0;
};

std::vector<GroupQuota> group_quotas();

struct CaseVerdict {
  bool pass = true;
  std::vector<std::string> failures;
};

/// Compares the final state of a solve against the expectation.
CaseVerdict check_outcome(const SolveReport& report, const ExpectedOutcome& expected);

}  // namespace nsdp
