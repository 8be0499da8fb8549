#include "nsdp/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nsdp {

std::string_view to_string(InvariantKind kind) {
  switch (kind) {
    case InvariantKind::ReductionChain:
      return "reduction-chain";
    case InvariantKind::PenaltyMonotone:
      return "penalty-monotone";
    case InvariantKind::MultiplierBoxes:
      return "multiplier-boxes";
    case InvariantKind::ShiftedPenalty:
      return "shifted-penalty";
    case InvariantKind::Armijo:
      return "armijo";
    case InvariantKind::SubproblemAccuracy:
      return "subproblem-accuracy";
    case InvariantKind::DirectionOrdering:
      return "direction-ordering";
    case InvariantKind::ModelSpectrum:
      return "model-spectrum";
  }
  return "?";
}

bool InvariantReport::ok(InvariantKind kind) const {
  return std::none_of(violations.begin(), violations.end(),
                      [kind](const auto& v) { return v.first == kind; });
}

std::string InvariantReport::summary() const {
  std::ostringstream os;
  for (const auto& [kind, v] : violations) {
    os << to_string(kind) << " k=" << v.k << ": " << v.what << '\n';
  }
  return os.str();
}

InvariantReport check_invariants(const NsdpProblem& problem, const SolveReport& report,
                                 const InvariantTolerances& tol) {
  InvariantReport out;
  const auto& cfg = report.config;
  const auto& recs = report.records;
  auto flag = [&](InvariantKind kind, int k, const std::string& what, double value) {
    std::ostringstream os;
    os.precision(6);
    os << what << " (" << value << ")";
    out.violations.push_back({kind, {k, os.str()}});
  };

  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    const bool stepped = r.alpha.has_value();

    if (!(r.rho > 0.0)) flag(InvariantKind::PenaltyMonotone, r.k, "rho not positive", r.rho);
    if (i > 0 && r.rho > recs[i - 1].rho) {
      flag(InvariantKind::PenaltyMonotone, r.k, "rho increased", r.rho - recs[i - 1].rho);
    }
    if (stepped && !(r.rho_after_update > 0.0 && r.rho_after_update <= r.rho)) {
      flag(InvariantKind::PenaltyMonotone, r.k, "update left (0, rho]", r.rho_after_update);
    }
    if (i > 0 && recs[i - 1].alpha && r.rho != recs[i - 1].rho_after_update) {
      flag(InvariantKind::PenaltyMonotone, r.k, "rho not carried over",
           r.rho - recs[i - 1].rho_after_update);
    }

    if (r.mu_bar_inf > 1.0 + tol.multiplier_box) {
      flag(InvariantKind::MultiplierBoxes, r.k, "|mu_bar|_inf > 1", r.mu_bar_inf);
    }
    if (r.tr_y_bar > 1.0 + tol.multiplier_box) {
      flag(InvariantKind::MultiplierBoxes, r.k, "tr(Y_bar) > 1", r.tr_y_bar);
    }
    if (r.lmin_y_bar < -tol.psd) {
      flag(InvariantKind::MultiplierBoxes, r.k, "Y_bar not PSD", r.lmin_y_bar);
    }
    if (r.lmin_y_hat < -tol.psd) {
      flag(InvariantKind::MultiplierBoxes, r.k, "Y_hat not PSD", r.lmin_y_hat);
    }

    // absolute residuals
    const double fea_abs = r.fea_kkt * r.fea_kkt_scale, dir_abs = r.dir_kkt * r.dir_kkt_scale;
    if (r.fea_status == ConicStatus::Optimal && fea_abs > tol.subproblem_kkt) {
      flag(InvariantKind::SubproblemAccuracy, r.k, "feasibility kkt", fea_abs);
    }
    if (r.dir_status == ConicStatus::Optimal && dir_abs > tol.subproblem_kkt) {
      flag(InvariantKind::SubproblemAccuracy, r.k, "direction kkt", dir_abs);
    }

    // recomputed eigenvalues carry an absolute error of order eps * |B|
    const double eig_slack = 64.0 * std::numeric_limits<double>::epsilon() * r.b_eig_max;
    const bool have_b = r.b_eig_max > 0.0;
    if (have_b && (r.b_eig_min < cfg.b_min * (1.0 - 1e-9) - eig_slack ||
                   r.b_eig_max > cfg.b_max * (1.0 + 1e-9))) {
      flag(InvariantKind::ModelSpectrum, r.k, "B spectrum outside bounds", r.b_eig_min);
    }

    if (stepped) {
      const double a = r.dl_rho_next;
      const double b = cfg.eps * r.dl_v_d;
      const double c = cfg.eps * r.dl_v_dfea;
      if (a < b - tol.chain) flag(InvariantKind::ReductionChain, r.k, "dl_rho < eps dl_v(d)", a - b);
      // a relaxed t lets l_v(d) exceed l_v(d_fea) by the margin
      const double slack = r.dir_margin;
      if (b < c - tol.chain - cfg.eps * slack) {
        flag(InvariantKind::ReductionChain, r.k, "dl_v(d) < dl_v(d_fea)", b - c);
      }
      if (c < -tol.chain) flag(InvariantKind::ReductionChain, r.k, "dl_v(d_fea) < 0", c);
      if (r.lv_d > r.lv_dfea + slack + tol.chain * std::max(1.0, r.v)) {
        flag(InvariantKind::DirectionOrdering, r.k, "l_v(d) > l_v(d_fea)", r.lv_d - r.lv_dfea);
      }

      if (i + 1 < recs.size()) {
        const Evaluation e0 = evaluate(problem, r.x);
        const Evaluation e1 = evaluate(problem, recs[i + 1].x);
        const double p0 = penalty(e0, r.rho_after_update);
        const double p1 = penalty(e1, r.rho_after_update);
        const double lhs = p1 - p0;
        const double rhs = -cfg.eta * *r.alpha * r.dl_rho_next;
        if (lhs > rhs + tol.armijo * std::max(1.0, std::abs(p0))) {
          flag(InvariantKind::Armijo, r.k, "sufficient decrease fails", lhs - rhs);
        }
      }
    }
  }

  const auto phi = shifted_penalty_diagnostic(report);
  for (std::size_t i = 1; i < phi.size(); ++i) {
    if (phi[i] > phi[i - 1] + tol.shifted_penalty) {
      flag(InvariantKind::ShiftedPenalty, recs[i].k, "phi increased", phi[i] - phi[i - 1]);
    }
  }
  return out;
}

}  // namespace nsdp
