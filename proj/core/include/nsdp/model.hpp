#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nsdp/symmat.hpp"

namespace nsdp {

/**
 * Nonlinear semidefinite program
 *
 *   min f(x)  s.t.  h(x) = 0,  G(x) ⪯ 0,
 *
 * with x ∈ R^n, h : R^n → R^l and G mapping into block-diagonal symmetric
 * matrices. Implementations supply analytic first derivatives and must be
 * stateless: every evaluator is a pure function of x.
 */
class NsdpProblem {
 public:
  virtual ~NsdpProblem() = default;

  virtual std::string_view name() const = 0;
  virtual std::size_t num_vars() const = 0;
  virtual std::size_t num_equalities() const = 0;
  virtual std::vector<std::size_t> block_dims() const = 0;

  virtual double f(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd h(const Eigen::VectorXd& x) const = 0;
  /// l × n Jacobian of h.
  virtual Eigen::MatrixXd jacobian_h(const Eigen::VectorXd& x) const = 0;
  virtual BlockSymMatrix G(const Eigen::VectorXd& x) const = 0;
  /// ∂G/∂x_i, 0-based i.
  virtual BlockSymMatrix dG(const Eigen::VectorXd& x, std::size_t i) const = 0;

  virtual std::vector<Eigen::VectorXd> initial_points() const { return {}; }
};

class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(std::string function, const Eigen::VectorXd& x);

  const std::string& function() const { return function_; }
  const Eigen::VectorXd& point() const { return x_; }

 private:
  std::string function_;
  Eigen::VectorXd x_;
};

/// Snapshot of every problem function at one point.
struct Evaluation {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd g;
  Eigen::VectorXd h;
  Eigen::MatrixXd Dh;
  BlockSymMatrix G;
  std::vector<BlockSymMatrix> dG;

  std::size_t num_vars() const { return static_cast<std::size_t>(x.size()); }
  std::size_t num_equalities() const { return static_cast<std::size_t>(h.size()); }
};

/// Evaluates all functions; throws EvaluationError on non-finite output and
/// DimensionMismatch when x or an evaluator output has the wrong shape.
Evaluation evaluate(const NsdpProblem& problem, const Eigen::VectorXd& x);

/// DG(x) d = Σ_i d_i ∂G/∂x_i
BlockSymMatrix dg_apply(const Evaluation& e, const Eigen::VectorXd& d);

/// DG(x)^* Y = (⟨∂G/∂x_i, Y⟩)_i
Eigen::VectorXd dg_adjoint(const Evaluation& e, const BlockSymMatrix& y);

struct DerivativeReport {
  double gradient_error = 0.0;
  double jacobian_error = 0.0;
  double dG_error = 0.0;

  double max_error() const;
};

/// Central-difference check of g, Dh and ∂G/∂x_i. Errors are
/// |fd − analytic| / max(1, |analytic|), maximized over entries.
DerivativeReport check_derivatives(const NsdpProblem& problem,
                                   const Eigen::VectorXd& x, double step);

}  // namespace nsdp
