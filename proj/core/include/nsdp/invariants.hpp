#pragma once

#include <string>
#include <vector>

#include "nsdp/model.hpp"
#include "nsdp/sqp.hpp"

namespace nsdp {

/// Tolerances for after-the-fact checks of a finished run.
struct InvariantTolerances {
  /// Slack on each link of the reduction chain.
  double chain = 1e-7;
  double multiplier_box = 1e-7;
  double psd = 1e-8;
  double shifted_penalty = 1e-8;
  /// Relative slack on the recomputed Armijo test.
  double armijo = 1e-12;
  double subproblem_kkt = 1e-7;
};

struct InvariantViolation {
  int k = 0;
  std::string what;
};

enum class InvariantKind {
  ReductionChain,
  PenaltyMonotone,
  MultiplierBoxes,
  ShiftedPenalty,
  Armijo,
  SubproblemAccuracy,
  DirectionOrdering,
  ModelSpectrum,
};

struct InvariantReport {
  std::vector<std::pair<InvariantKind, InvariantViolation>> violations;

  bool ok() const { return violations.empty(); }
  bool ok(InvariantKind kind) const;
  std::string summary() const;
};

/// Re-checks the per-iteration guarantees of the method on the records of a
/// finished run; the Armijo test is recomputed from fresh evaluations.
InvariantReport check_invariants(const NsdpProblem& problem, const SolveReport& report,
                                 const InvariantTolerances& tol = {});

std::string_view to_string(InvariantKind kind);

}  // namespace nsdp
