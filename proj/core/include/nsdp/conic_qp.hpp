#pragma once

#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nsdp/model.hpp"
#include "nsdp/symmat.hpp"

namespace nsdp {

/// z ↦ offset + Σ_i z_i coeffs[i]
struct AffineBlockMap {
  BlockSymMatrix offset;
  std::vector<BlockSymMatrix> coeffs;

  BlockSymMatrix operator()(const Eigen::VectorXd& z) const;
  /// (⟨coeffs[i], y⟩)_i
  Eigen::VectorXd adjoint(const BlockSymMatrix& y) const;
};

/**
 * Convex quadratic program over a product of cones:
 *
 *   min  ½ zᵀQz + cᵀz
 *   s.t. A_eq z = b_eq
 *        z_j ≥ 0            for j in nonneg
 *        psd(z) ⪯ 0
 *
 * Q must be positive semidefinite. With the Lagrangian
 * L = ½zᵀQz + cᵀz + muᵀ(A_eq z − b_eq) + ⟨Y, psd(z)⟩ − nuᵀz_nonneg
 * stationarity reads Qz + c + A_eqᵀmu + psd*(Y) − E nu = 0, Y ⪰ 0, nu ≥ 0.
 */
struct ConicQP {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  std::vector<std::size_t> nonneg;
  AffineBlockMap psd;

  std::size_t num_vars() const { return static_cast<std::size_t>(c.size()); }
  std::size_t num_equalities() const { return static_cast<std::size_t>(b_eq.size()); }

  double objective(const Eigen::VectorXd& z) const;
  /// Throws DimensionMismatch when shapes are inconsistent.
  void validate() const;
};

enum class ConicStatus { Optimal, MaxIter, NumericalFailure };

std::string_view to_string(ConicStatus status);

struct ConicSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd mu;
  BlockSymMatrix Y;
  Eigen::VectorXd nu;
  ConicStatus status = ConicStatus::NumericalFailure;
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct SubsolverConfig {
  double tol_kkt = 1e-9;
  int max_iter = 200;
  double step_fraction = 0.99;
  /// Scale of the initial cone slacks S0 = Y0 = initial_slack · I.
  double initial_slack = 1.0;
  /// Active-set Newton steps applied to the interior-point result. The
  /// returned point is the one with the smallest KKT residual.
  int polish_steps = 4;
};

/// Scale used to relativize kkt_residual: 1 + ‖b_eq‖∞ + ‖c‖∞.
double residual_scale(const ConicQP& qp);

/**
 * A posteriori KKT certificate of (z, mu, Y, nu) for qp: the largest of
 * stationarity, equality and cone feasibility, dual cone violation and the
 * two complementarity products, divided by residual_scale(qp).
 */
double kkt_residual(const ConicQP& qp, const ConicSolution& sol);

/// Infeasible-start primal-dual path-following method (Nesterov–Todd
/// scaling, Mehrotra predictor–corrector).
ConicSolution solve_conic_qp(const ConicQP& qp, const SubsolverConfig& cfg = {});

/// Writes a debug dump of qp: dims, dense Q, c, A_eq, b_eq, nonneg and the
/// psd offset/coefficient blocks as dense row lists.
void write_json(const ConicQP& qp, std::ostream& out);

// ------------------------------------------------------------- subproblems

/// Variable layout of the feasibility subproblem: z = (d, r, s, t).
struct FeasibilityLayout {
  std::size_t n = 0;
  std::size_t l = 0;

  std::size_t num_vars() const { return n + 2 * l + 1; }
  std::size_t r_offset() const { return n; }
  std::size_t s_offset() const { return n + l; }
  std::size_t t_index() const { return n + 2 * l; }
};

/**
 * min eᵀ(r+s) + t + ½dᵀB_fea d
 * s.t. h + Dh d − r + s = 0,  G + DG d − tI ⪯ 0,  r, s, t ≥ 0.
 */
ConicQP build_feasibility_qp(const Evaluation& e, const Eigen::MatrixXd& b_fea);

/**
 * min ρ gᵀd + ½dᵀBd
 * s.t. h + Dh d = r − s,  G + DG d ⪯ (t + t_margin) I.
 */
ConicQP build_direction_qp(const Evaluation& e, const Eigen::MatrixXd& b, double rho,
                           const Eigen::VectorXd& r, const Eigen::VectorXd& s, double t,
                           double t_margin = 0.0);

}  // namespace nsdp
