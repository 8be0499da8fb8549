#include <algorithm>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "nsdp/conic_qp.hpp"

namespace nsdp {

namespace {

nlohmann::json to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

nlohmann::json to_json(const BlockSymMatrix& m) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : m.blocks()) blocks.push_back(to_json(b.dense()));
  return blocks;
}

}  // namespace

BlockSymMatrix AffineBlockMap::operator()(const Eigen::VectorXd& z) const {
  BlockSymMatrix out = offset;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double zi = z(static_cast<Eigen::Index>(i));
    if (zi != 0.0) out.axpy(zi, coeffs[i]);
  }
  return out;
}

Eigen::VectorXd AffineBlockMap::adjoint(const BlockSymMatrix& y) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(coeffs.size()));
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = inner(coeffs[i], y);
  }
  return out;
}

double ConicQP::objective(const Eigen::VectorXd& z) const {
  return 0.5 * z.dot(Q * z) + c.dot(z);
}

void ConicQP::validate() const {
  const auto nv = c.size();
  if (Q.rows() != nv || Q.cols() != nv) throw DimensionMismatch("ConicQP: Q must be nv x nv");
  if (A_eq.cols() != nv && A_eq.rows() > 0) throw DimensionMismatch("ConicQP: A_eq must have nv columns");
  if (A_eq.rows() != b_eq.size()) throw DimensionMismatch("ConicQP: A_eq rows must match b_eq");
  for (std::size_t j : nonneg) {
    if (j >= static_cast<std::size_t>(nv)) throw DimensionMismatch("ConicQP: nonneg index out of range");
  }
  const bool no_cone = psd.offset.num_blocks() == 0 && psd.coeffs.empty();
  if (!no_cone && psd.coeffs.size() != static_cast<std::size_t>(nv)) {
    throw DimensionMismatch("ConicQP: psd map needs one coefficient per variable");
  }
  for (const auto& m : psd.coeffs) {
    if (!m.conformable(psd.offset)) throw DimensionMismatch("ConicQP: psd coefficient layout mismatch");
  }
}

std::string_view to_string(ConicStatus status) {
  switch (status) {
    case ConicStatus::Optimal:
      return "Optimal";
    case ConicStatus::MaxIter:
      return "MaxIter";
    case ConicStatus::NumericalFailure:
      return "NumericalFailure";
  }
  return "?";
}

double residual_scale(const ConicQP& qp) {
  const double b = qp.b_eq.size() ? qp.b_eq.lpNorm<Eigen::Infinity>() : 0.0;
  const double c = qp.c.size() ? qp.c.lpNorm<Eigen::Infinity>() : 0.0;
  return 1.0 + b + c;
}

double kkt_residual(const ConicQP& qp, const ConicSolution& sol) {
  const Eigen::VectorXd& z = sol.z;
  double worst = 0.0;

  Eigen::VectorXd stationarity = qp.Q * z + qp.c;
  if (qp.num_equalities() > 0) stationarity += qp.A_eq.transpose() * sol.mu;
  if (sol.Y.num_blocks() > 0) stationarity += qp.psd.adjoint(sol.Y);
  for (std::size_t k = 0; k < qp.nonneg.size(); ++k) {
    stationarity(static_cast<Eigen::Index>(qp.nonneg[k])) -= sol.nu(static_cast<Eigen::Index>(k));
  }
  if (stationarity.size()) worst = std::max(worst, stationarity.lpNorm<Eigen::Infinity>());

  if (qp.num_equalities() > 0) {
    worst = std::max(worst, (qp.A_eq * z - qp.b_eq).lpNorm<Eigen::Infinity>());
  }

  if (qp.psd.offset.total_order() > 0) {
    const BlockSymMatrix value = qp.psd(z);
    worst = std::max(worst, std::max(0.0, lambda_max(value)));
    worst = std::max(worst, std::max(0.0, -lambda_min(sol.Y)));
    worst = std::max(worst, std::abs(inner(sol.Y, value)));
  }

  double nonneg_gap = 0.0;
  for (std::size_t k = 0; k < qp.nonneg.size(); ++k) {
    const double zj = z(static_cast<Eigen::Index>(qp.nonneg[k]));
    const double nuj = sol.nu(static_cast<Eigen::Index>(k));
    worst = std::max({worst, -zj, -nuj});
    nonneg_gap += zj * nuj;
  }
  worst = std::max(worst, std::abs(nonneg_gap));

  return worst / residual_scale(qp);
}

void write_json(const ConicQP& qp, std::ostream& out) {
  nlohmann::json doc;
  doc["dims"] = {{"nv", qp.num_vars()},
                 {"p", qp.num_equalities()},
                 {"blocks", qp.psd.offset.dims()}};
  doc["Q"] = to_json(qp.Q);
  doc["c"] = to_json(qp.c);
  doc["A_eq"] = to_json(qp.A_eq);
  doc["b_eq"] = to_json(qp.b_eq);
  doc["nonneg"] = qp.nonneg;
  doc["M0"] = to_json(qp.psd.offset);
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& m : qp.psd.coeffs) coeffs.push_back(to_json(m));
  doc["M"] = std::move(coeffs);
  out << doc.dump(2) << '\n';
}

ConicQP build_feasibility_qp(const Evaluation& e, const Eigen::MatrixXd& b_fea) {
  const FeasibilityLayout lay{e.num_vars(), e.num_equalities()};
  const auto n = static_cast<Eigen::Index>(lay.n);
  const auto l = static_cast<Eigen::Index>(lay.l);
  const auto nv = static_cast<Eigen::Index>(lay.num_vars());
  if (b_fea.rows() != n || b_fea.cols() != n) {
    throw DimensionMismatch("build_feasibility_qp: B_fea must be n x n");
  }

  ConicQP qp;
  qp.Q = Eigen::MatrixXd::Zero(nv, nv);
  qp.Q.topLeftCorner(n, n) = b_fea;
  qp.c = Eigen::VectorXd::Zero(nv);
  qp.c.segment(n, 2 * l).setOnes();
  qp.c(nv - 1) = 1.0;

  qp.A_eq = Eigen::MatrixXd::Zero(l, nv);
  qp.A_eq.leftCols(n) = e.Dh;
  qp.A_eq.middleCols(n, l) = -Eigen::MatrixXd::Identity(l, l);
  qp.A_eq.middleCols(n + l, l) = Eigen::MatrixXd::Identity(l, l);
  qp.b_eq = -e.h;

  for (std::size_t j = lay.r_offset(); j < lay.num_vars(); ++j) qp.nonneg.push_back(j);

  const auto dims = e.G.dims();
  qp.psd.offset = e.G;
  qp.psd.coeffs.reserve(lay.num_vars());
  for (std::size_t i = 0; i < lay.n; ++i) qp.psd.coeffs.push_back(e.dG[i]);
  for (Eigen::Index j = 0; j < 2 * l; ++j) qp.psd.coeffs.push_back(BlockSymMatrix::zeros(dims));
  qp.psd.coeffs.push_back(-BlockSymMatrix::identity(dims));
  return qp;
}

ConicQP build_direction_qp(const Evaluation& e, const Eigen::MatrixXd& b, double rho,
                           const Eigen::VectorXd& r, const Eigen::VectorXd& s, double t,
                           double t_margin) {
  const auto n = static_cast<Eigen::Index>(e.num_vars());
  if (b.rows() != n || b.cols() != n) throw DimensionMismatch("build_direction_qp: B must be n x n");
  if (r.size() != e.h.size() || s.size() != e.h.size()) {
    throw DimensionMismatch("build_direction_qp: slack lengths must equal l");
  }

  ConicQP qp;
  qp.Q = b;
  qp.c = rho * e.g;
  qp.A_eq = e.Dh;
  qp.b_eq = r - s - e.h;
  qp.psd.offset = e.G;
  qp.psd.offset.add_identity(-(t + t_margin));
  qp.psd.coeffs = e.dG;
  return qp;
}

}  // namespace nsdp
