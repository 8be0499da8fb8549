#include "nsdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nsdp {

namespace {

std::string describe_point(const Eigen::VectorXd& x) {
  std::ostringstream out;
  out.precision(17);
  out << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x(i);
  out << ')';
  return out.str();
}

bool all_finite(const BlockSymMatrix& m) {
  for (const auto& b : m.blocks()) {
    for (std::size_t j = 0; j < b.order(); ++j) {
      for (std::size_t i = 0; i <= j; ++i) {
        if (!std::isfinite(b(i, j))) return false;
      }
    }
  }
  return true;
}

void require_dims(const BlockSymMatrix& m, const std::vector<std::size_t>& dims,
                  std::string_view what) {
  if (m.dims() != dims) {
    throw DimensionMismatch(std::string(what) + ": block layout does not match problem");
  }
}

double rel_err(double fd, double exact) {
  return std::abs(fd - exact) / std::max(1.0, std::abs(exact));
}

}  // namespace

EvaluationError::EvaluationError(std::string function, const Eigen::VectorXd& x)
    : std::runtime_error("non-finite value from " + function + " at x = " +
                         describe_point(x)),
      function_(std::move(function)),
      x_(x) {}

Evaluation evaluate(const NsdpProblem& problem, const Eigen::VectorXd& x) {
  const auto n = problem.num_vars();
  const auto l = problem.num_equalities();
  if (static_cast<std::size_t>(x.size()) != n) {
    throw DimensionMismatch("evaluate: x has length " + std::to_string(x.size()) +
                            ", problem expects " + std::to_string(n));
  }
  const auto dims = problem.block_dims();

  Evaluation e;
  e.x = x;
  e.f = problem.f(x);
  if (!std::isfinite(e.f)) throw EvaluationError("f", x);

  e.g = problem.gradient(x);
  if (static_cast<std::size_t>(e.g.size()) != n) throw DimensionMismatch("gradient: wrong length");
  if (!e.g.allFinite()) throw EvaluationError("gradient", x);

  e.h = problem.h(x);
  if (static_cast<std::size_t>(e.h.size()) != l) throw DimensionMismatch("h: wrong length");
  if (!e.h.allFinite()) throw EvaluationError("h", x);

  e.Dh = problem.jacobian_h(x);
  if (static_cast<std::size_t>(e.Dh.rows()) != l || static_cast<std::size_t>(e.Dh.cols()) != n) {
    throw DimensionMismatch("jacobian_h: wrong shape");
  }
  if (!e.Dh.allFinite()) throw EvaluationError("jacobian_h", x);

  e.G = problem.G(x);
  require_dims(e.G, dims, "G");
  if (!all_finite(e.G)) throw EvaluationError("G", x);

  e.dG.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    e.dG.push_back(problem.dG(x, i));
    require_dims(e.dG.back(), dims, "dG");
    if (!all_finite(e.dG.back())) throw EvaluationError("dG[" + std::to_string(i) + "]", x);
  }
  return e;
}

BlockSymMatrix dg_apply(const Evaluation& e, const Eigen::VectorXd& d) {
  if (static_cast<std::size_t>(d.size()) != e.num_vars()) {
    throw DimensionMismatch("dg_apply: direction has wrong length");
  }
  BlockSymMatrix out = BlockSymMatrix::zeros(e.G.dims());
  for (std::size_t i = 0; i < e.dG.size(); ++i) {
    out.axpy(d(static_cast<Eigen::Index>(i)), e.dG[i]);
  }
  return out;
}

Eigen::VectorXd dg_adjoint(const Evaluation& e, const BlockSymMatrix& y) {
  if (!y.conformable(e.G)) throw DimensionMismatch("dg_adjoint: block layout mismatch");
  Eigen::VectorXd out(static_cast<Eigen::Index>(e.dG.size()));
  for (std::size_t i = 0; i < e.dG.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = inner(e.dG[i], y);
  }
  return out;
}

double DerivativeReport::max_error() const {
  return std::max({gradient_error, jacobian_error, dG_error});
}

DerivativeReport check_derivatives(const NsdpProblem& problem, const Eigen::VectorXd& x,
                                   double step) {
  if (!(step > 0.0)) throw std::invalid_argument("check_derivatives: step must be positive");
  const Evaluation e = evaluate(problem, x);
  DerivativeReport report;

  for (std::size_t i = 0; i < e.num_vars(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp(ii) += step;
    xm(ii) -= step;

    const double df = (problem.f(xp) - problem.f(xm)) / (2.0 * step);
    report.gradient_error = std::max(report.gradient_error, rel_err(df, e.g(ii)));

    const Eigen::VectorXd dh = (problem.h(xp) - problem.h(xm)) / (2.0 * step);
    for (Eigen::Index r = 0; r < dh.size(); ++r) {
      report.jacobian_error = std::max(report.jacobian_error, rel_err(dh(r), e.Dh(r, ii)));
    }

    const BlockSymMatrix dG = (problem.G(xp) - problem.G(xm)) * (0.5 / step);
    for (std::size_t b = 0; b < dG.num_blocks(); ++b) {
      const SymMatrix& fd = dG.block(b);
      const SymMatrix& exact = e.dG[i].block(b);
      for (std::size_t c = 0; c < fd.order(); ++c) {
        for (std::size_t r = 0; r <= c; ++r) {
          report.dG_error = std::max(report.dG_error, rel_err(fd(r, c), exact(r, c)));
        }
      }
    }
  }
  return report;
}

}  // namespace nsdp
