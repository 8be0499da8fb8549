#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nsdp/conic_qp.hpp"
#include "nsdp/model.hpp"
#include "nsdp/symmat.hpp"

namespace nsdp {

struct SolverConfig {
  double eps = 1e-4;
  double delta = 0.9;
  double eta = 1e-4;
  double gamma = 0.6;
  double rho0 = 1.0;
  int nmax = 500;
  double tol_step = 1e-4;
  double tol_viol = 1e-4;
  double bfea_scale = 1e-3;
  double bfgs_floor = 1e-5;
  double b_min = 1e-8;
  double b_max = 1e8;
  /// ρ below this counts as "ρ → 0" when classifying the limit.
  double rho_floor_class = 1e-8;
  /// Backtracking gives up once α drops below this.
  double alpha_min = 1e-16;
  /// Added to t in the direction subproblem's matrix constraint. With an
  /// exact t that constraint can pin d to a single point (no interior), so
  /// when the subproblem fails it is retried with the margin raised tenfold
  /// from 1e-9·(1 + |t|) up to direction_t_margin_max·(1 + |t|). A standing
  /// margin is avoided: it lets flat constraints be overshot by its cube root.
  double direction_t_margin = 0.0;
  double direction_t_margin_max = 1e-6;
  /// A subproblem that stops at its iteration cap is still used when its
  /// KKT residual is below this.
  double subsolver_accept_tol = 1e-6;
  /// Divide (μ̂, Ŷ) by max(bfgs_floor, ρ_k) when forming the BFGS
  /// Lagrangian-gradient difference. Off by default: the direction
  /// subproblem's multipliers already carry the ρ-scaling of its objective.
  bool bfgs_scaled_multipliers = false;
  SubsolverConfig subsolver;

  /// Throws std::invalid_argument naming the first violated bound.
  void validate() const;
};

enum class TerminationClass {
  KKT,
  FeasibleCQFail,
  InfeasibleStationaryKKTShifted,
  InfeasibleStationaryCQFailShifted,
  MaxIter,
  NumericalFailure,
};

std::string_view to_string(TerminationClass tc);
std::optional<TerminationClass> termination_from_string(std::string_view text);
bool is_infeasible_stationary(TerminationClass tc);

/// One outer iteration. `rho` is ρ_k before the penalty update; the first
/// group of fields mirrors the usual iteration table, the rest are the
/// quantities needed to re-check the method's invariants after the fact.
struct IterationRecord {
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
  double rho_after_update = 0.0;

  double norm_dfea = 0.0;
  double lv_d = 0.0;
  double dl_v_d = 0.0;
  double dl_v_dfea = 0.0;
  double dl_rho_next = 0.0;
  std::optional<double> zeta;
  double mu_bar_inf = 0.0;
  double tr_y_bar = 0.0;
  double lmin_y_bar = 0.0;
  double mu_hat_inf = 0.0;
  double tr_y_hat = 0.0;
  double lmin_y_hat = 0.0;
  ConicStatus fea_status = ConicStatus::Optimal;
  /// Relative KKT residual; times the scale gives the absolute one.
  double fea_kkt = 0.0;
  double fea_kkt_scale = 1.0;
  int fea_iterations = 0;
  ConicStatus dir_status = ConicStatus::Optimal;
  double dir_kkt = 0.0;
  double dir_kkt_scale = 1.0;
  int dir_iterations = 0;
  /// Margin on t the direction subproblem was finally solved with.
  double dir_margin = 0.0;
  int ls_trials = 0;
  double b_eig_min = 0.0;
  double b_eig_max = 0.0;
};

struct Multipliers {
  Eigen::VectorXd mu_bar;
  BlockSymMatrix y_bar;
  Eigen::VectorXd mu_hat;
  BlockSymMatrix y_hat;
};

struct SolveReport {
  std::string problem;
  Eigen::VectorXd x0;
  SolverConfig config;
  std::vector<IterationRecord> records;
  TerminationClass termination = TerminationClass::MaxIter;
  std::string message;
  Eigen::VectorXd final_x;
  double final_v = 0.0;
  double final_f = 0.0;
  double final_rho = 0.0;
  Multipliers final_multipliers;
  Eigen::VectorXd final_r;
  Eigen::VectorXd final_s;
  double final_t = 0.0;
  double wall_time = 0.0;
};

// -------------------------------------------------------- merit machinery

/// v(x) = ‖h‖₁ + [λ₁(G)]₊
double violation(const Evaluation& e);
/// P^ρ(x) = ρ f(x) + v(x)
double penalty(const Evaluation& e, double rho);
/// l^v(d) = ‖h + Dh d‖₁ + [λ₁(G + DG d)]₊
double linearized_violation(const Evaluation& e, const Eigen::VectorXd& d);

struct LinearizedReduction {
  double rho = 0.0;
  double v = 0.0;
  double f = 0.0;
};

/// Δl^ρ, Δl^v, Δl^f of the linear models between 0 and d.
LinearizedReduction delta_l(const Evaluation& e, const Eigen::VectorXd& d, double rho);

/// Stationarity residual of the violation measure at (x, μ, Y).
double residual_fea(const Evaluation& e, const Eigen::VectorXd& mu, const BlockSymMatrix& y);
/// ‖∇ₓF(x, ρ, μ, Y)‖∞ + ‖Y G(x)‖_F
double residual_opt(const Evaluation& e, double rho, const Eigen::VectorXd& mu,
                    const BlockSymMatrix& y);

/// ∇ₓF(x, ρ, μ, Y) = ρ g + Dhᵀμ + DG*Y
Eigen::VectorXd fj_gradient(const Evaluation& e, double rho, const Eigen::VectorXd& mu,
                            const BlockSymMatrix& y);

// ---------------------------------------------------------- penalty update

struct PenaltyInputs {
  double rho = 1.0;
  /// ‖μ̄‖∞ + tr(Ȳ)
  double mass_bar = 0.0;
  /// ‖μ̂‖∞ + tr(Ŷ)
  double mass_hat = 0.0;
  double g_dot_d = 0.0;
  /// Δl^v(d)
  double dl_v = 0.0;
  /// dᵀ B d
  double d_b_d = 0.0;
};

struct PenaltyUpdate {
  double rho_prime = 0.0;
  double rho_next = 0.0;
  bool multiplier_branch = false;
  std::optional<double> zeta;
};

class PenaltyUpdateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two-stage update: multiplier-mass safeguard, then the reduction test
/// Δl^{ρ'}(d) ≥ ε Δl^v(d). Throws PenaltyUpdateError when the ζ branch is
/// entered with a nonpositive denominator.
PenaltyUpdate update_penalty(const PenaltyInputs& in, const SolverConfig& cfg);

// ------------------------------------------------------------- line search

struct LineSearchResult {
  bool accepted = false;
  double alpha = 0.0;
  int trials = 0;
  std::optional<Evaluation> next;
};

/// Armijo backtracking on P^ρ over α ∈ {1, γ, γ², …}.
LineSearchResult line_search(const NsdpProblem& problem, const Evaluation& e,
                             const Eigen::VectorXd& d, double rho, double dl_rho,
                             const SolverConfig& cfg);

// ------------------------------------------------------------ quasi-Newton

/// Powell-damped BFGS update of b from the pair (s, y). Skips the update
/// when ‖s‖ ≤ 1e-14.
Eigen::MatrixXd damped_bfgs(const Eigen::MatrixXd& b, const Eigen::VectorXd& s,
                            const Eigen::VectorXd& y);

/// BFGS update with s = x_new − x_old and y the change of ∇ₓ(f + μᵀh + ⟨Y, G⟩).
Eigen::MatrixXd bfgs_update(const Eigen::MatrixXd& b, const Evaluation& e_old,
                            const Evaluation& e_new, const Eigen::VectorXd& mu,
                            const BlockSymMatrix& y);

/// max(bfgs_floor, ρ) · B_bfgs with eigenvalues clipped into [b_min, b_max].
Eigen::MatrixXd assemble_b(const Eigen::MatrixXd& b_bfgs, double rho, const SolverConfig& cfg);

// ------------------------------------------------------------- outer loop

/// φ(x_k, ρ_{k+1}) = ρ_{k+1}(f_k − f_min) + v_k with f_min the smallest f on
/// the trajectory.
std::vector<double> shifted_penalty_diagnostic(const SolveReport& report);

TerminationClass classify(double rho, double v, const SolverConfig& cfg);

SolveReport solve(const NsdpProblem& problem, const Eigen::VectorXd& x0,
                  const SolverConfig& cfg = {});

}  // namespace nsdp
