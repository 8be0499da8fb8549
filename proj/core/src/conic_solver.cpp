// Infeasible-start primal-dual interior-point method for ConicQP.
//
// Every cone is a symmetric positive semidefinite block; each nonnegative
// variable becomes a 1×1 block with coefficient −1. With slack S = −psd(z)
// the method drives
//
//   r_d = Qz + c + A_eqᵀmu + 𝒜*(Y)   → 0
//   r_p = A_eq z − b_eq              → 0
//   r_c = S + M0 + 𝒜(z)              → 0
//   S Y                              → 0,   S, Y ≻ 0.
//
// Per block the Nesterov–Todd scaling R satisfies RᵀYR = R⁻¹SR⁻ᵀ = Λ
// (diagonal). Directions are computed in the scaled space where the
// linearized complementarity is Λ∘(ΔS̃ + ΔỸ) = rhs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include "log_internal.hpp"
#include "nsdp/conic_qp.hpp"

namespace nsdp {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd sym(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

struct ConeData {
  std::vector<Index> orders;
  std::vector<MatrixXd> offset;                 // per block
  std::vector<std::vector<MatrixXd>> coeff;     // [block][var]
  std::vector<std::vector<bool>> coeff_nonzero; // [block][var]
  std::size_t psd_blocks = 0;                   // leading blocks from qp.psd
  Index degree = 0;
};

ConeData build_cones(const ConicQP& qp) {
  ConeData cones;
  const auto nv = static_cast<Index>(qp.num_vars());
  const auto& off = qp.psd.offset;
  for (std::size_t b = 0; b < off.num_blocks(); ++b) {
    const auto order = static_cast<Index>(off.block(b).order());
    if (order == 0) continue;
    cones.orders.push_back(order);
    cones.offset.push_back(off.block(b).dense());
    std::vector<MatrixXd> col;
    std::vector<bool> nz;
    for (Index i = 0; i < nv; ++i) {
      MatrixXd m = qp.psd.coeffs[static_cast<std::size_t>(i)].block(b).dense();
      nz.push_back(!m.isZero(0.0));
      col.push_back(std::move(m));
    }
    cones.coeff.push_back(std::move(col));
    cones.coeff_nonzero.push_back(std::move(nz));
  }
  cones.psd_blocks = cones.orders.size();
  for (std::size_t j : qp.nonneg) {
    cones.orders.push_back(1);
    cones.offset.push_back(MatrixXd::Zero(1, 1));
    std::vector<MatrixXd> col(static_cast<std::size_t>(nv), MatrixXd::Zero(1, 1));
    std::vector<bool> nz(static_cast<std::size_t>(nv), false);
    col[j](0, 0) = -1.0;
    nz[j] = true;
    cones.coeff.push_back(std::move(col));
    cones.coeff_nonzero.push_back(std::move(nz));
  }
  for (Index o : cones.orders) cones.degree += o;
  return cones;
}

// Nesterov–Todd scaling of one block.
struct Scaling {
  VectorXd lambda;
  MatrixXd R;
  MatrixXd Rinv;
};

std::optional<Scaling> nt_scaling(const MatrixXd& s, const MatrixXd& y) {
  Eigen::LLT<MatrixXd> chol(s);
  if (chol.info() != Eigen::Success) return std::nullopt;
  const MatrixXd L = chol.matrixL();
  const SymEigen eig = sym_eigen(SymMatrix::from_dense(L.transpose() * y * L));
  if (!(eig.values.minCoeff() > 0.0) || !eig.values.allFinite()) return std::nullopt;
  Scaling sc;
  sc.lambda = eig.values.cwiseSqrt();
  const VectorXd root = sc.lambda.cwiseSqrt();
  sc.R = L * eig.vectors * root.cwiseInverse().asDiagonal();
  const MatrixXd Linv = L.triangularView<Eigen::Lower>().solve(
      MatrixXd::Identity(L.rows(), L.cols()));
  sc.Rinv = root.asDiagonal() * eig.vectors.transpose() * Linv;
  return sc;
}

// Largest α ∈ (0, ∞] with Λ + αΔ ⪰ 0.
double max_step(const VectorXd& lambda, const MatrixXd& delta) {
  const VectorXd inv_root = lambda.cwiseSqrt().cwiseInverse();
  const MatrixXd scaled = inv_root.asDiagonal() * delta * inv_root.asDiagonal();
  const double lmin = lambda_min(SymMatrix::from_dense(scaled));
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

class InteriorPoint {
 public:
  InteriorPoint(const ConicQP& qp, const SubsolverConfig& cfg)
      : qp_(qp), cfg_(cfg), cones_(build_cones(qp)) {
    nv_ = static_cast<Index>(qp.num_vars());
    p_ = static_cast<Index>(qp.num_equalities());
    nb_ = cones_.orders.size();
    z_ = VectorXd::Zero(nv_);
    mu_ = VectorXd::Zero(p_);
    for (std::size_t b = 0; b < nb_; ++b) {
      const Index o = cones_.orders[b];
      s_.push_back(cfg.initial_slack * MatrixXd::Identity(o, o));
      y_.push_back(cfg.initial_slack * MatrixXd::Identity(o, o));
    }
  }

  ConicSolution run();

 private:
  struct Direction {
    VectorXd dz;
    VectorXd dmu;
    std::vector<MatrixXd> ds;  // scaled
    std::vector<MatrixXd> dy;  // scaled
  };

  ConicSolution snapshot() const;
  MatrixXd psd_value(std::size_t b) const;
  double step_to_boundary(const Direction& d) const;
  bool solve_newton(const std::vector<MatrixXd>& target, Direction& out) const;

  const ConicQP& qp_;
  const SubsolverConfig& cfg_;
  ConeData cones_;
  Index nv_ = 0;
  Index p_ = 0;
  std::size_t nb_ = 0;

  VectorXd z_;
  VectorXd mu_;
  std::vector<MatrixXd> s_;
  std::vector<MatrixXd> y_;

  // per-iteration state
  std::vector<Scaling> scaling_;
  std::vector<std::vector<MatrixXd>> scaled_coeff_;
  std::vector<MatrixXd> scaled_rc_;
  VectorXd rd_;
  VectorXd rp_;
  Eigen::PartialPivLU<MatrixXd> lu_;
  MatrixXd kkt_;
  VectorXd equil_;
};

MatrixXd InteriorPoint::psd_value(std::size_t b) const {
  MatrixXd m = cones_.offset[b];
  for (Index i = 0; i < nv_; ++i) {
    if (cones_.coeff_nonzero[b][static_cast<std::size_t>(i)]) {
      m += z_(i) * cones_.coeff[b][static_cast<std::size_t>(i)];
    }
  }
  return m;
}

ConicSolution InteriorPoint::snapshot() const {
  ConicSolution sol;
  sol.z = z_;
  sol.mu = mu_;
  std::vector<SymMatrix> yblocks;
  std::size_t k = 0;
  for (std::size_t b = 0; b < qp_.psd.offset.num_blocks(); ++b) {
    if (qp_.psd.offset.block(b).order() == 0) {
      yblocks.emplace_back(0);
    } else {
      yblocks.push_back(SymMatrix::from_dense(y_[k++]));
    }
  }
  sol.Y = BlockSymMatrix(std::move(yblocks));
  sol.nu = VectorXd(static_cast<Index>(qp_.nonneg.size()));
  for (std::size_t j = 0; j < qp_.nonneg.size(); ++j) {
    sol.nu(static_cast<Index>(j)) = y_[cones_.psd_blocks + j](0, 0);
  }
  sol.kkt_residual = kkt_residual(qp_, sol);
  return sol;
}

bool InteriorPoint::solve_newton(const std::vector<MatrixXd>& target, Direction& out) const {
  VectorXd rhs(nv_ + p_);
  VectorXd rhs1 = -rd_;
  for (std::size_t b = 0; b < nb_; ++b) {
    const MatrixXd shifted = target[b] + scaled_rc_[b];
    for (Index i = 0; i < nv_; ++i) {
      if (!cones_.coeff_nonzero[b][static_cast<std::size_t>(i)]) continue;
      rhs1(i) -= (scaled_coeff_[b][static_cast<std::size_t>(i)].array() * shifted.array()).sum();
    }
  }
  rhs << rhs1, -rp_;

  auto scaled_solve = [&](const VectorXd& r) -> VectorXd {
    return equil_.cwiseProduct(lu_.solve(equil_.cwiseProduct(r)));
  };
  VectorXd sol = scaled_solve(rhs);
  double res_norm = (rhs - kkt_ * sol).lpNorm<Eigen::Infinity>();
  for (int refine = 0; refine < 5 && res_norm > 0.0; ++refine) {
    const VectorXd next = sol + scaled_solve(rhs - kkt_ * sol);
    const double next_norm = (rhs - kkt_ * next).lpNorm<Eigen::Infinity>();
    if (!(next_norm < res_norm)) break;
    sol = next;
    res_norm = next_norm;
  }
  if (!sol.allFinite()) return false;

  out.dz = sol.head(nv_);
  out.dmu = sol.tail(p_);
  out.ds.resize(nb_);
  out.dy.resize(nb_);
  for (std::size_t b = 0; b < nb_; ++b) {
    MatrixXd ds = -scaled_rc_[b];
    for (Index i = 0; i < nv_; ++i) {
      if (!cones_.coeff_nonzero[b][static_cast<std::size_t>(i)]) continue;
      ds -= out.dz(i) * scaled_coeff_[b][static_cast<std::size_t>(i)];
    }
    out.dy[b] = target[b] - ds;
    out.ds[b] = std::move(ds);
  }
  return true;
}

double InteriorPoint::step_to_boundary(const Direction& d) const {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < nb_; ++b) {
    alpha = std::min(alpha, max_step(scaling_[b].lambda, d.ds[b]));
    alpha = std::min(alpha, max_step(scaling_[b].lambda, d.dy[b]));
  }
  return alpha;
}

ConicSolution InteriorPoint::run() {
  auto& log = detail::logger();

  ConicSolution best = snapshot();
  best.status = ConicStatus::MaxIter;
  int stalled = 0;

  for (int iter = 0; iter <= cfg_.max_iter; ++iter) {
    ConicSolution current = snapshot();
    current.iterations = iter;
    if (current.kkt_residual <= best.kkt_residual || iter == 0) {
      best = current;
      best.status = ConicStatus::MaxIter;
    }
    log.debug("  ipm {:3d} kkt={:.3e}", iter, current.kkt_residual);
    if (current.kkt_residual <= cfg_.tol_kkt) {
      current.status = ConicStatus::Optimal;
      return current;
    }
    if (iter == cfg_.max_iter) break;

    // residuals
    rd_ = qp_.Q * z_ + qp_.c;
    if (p_ > 0) rd_ += qp_.A_eq.transpose() * mu_;
    for (std::size_t b = 0; b < nb_; ++b) {
      for (Index i = 0; i < nv_; ++i) {
        if (cones_.coeff_nonzero[b][static_cast<std::size_t>(i)]) {
          rd_(i) += (cones_.coeff[b][static_cast<std::size_t>(i)].array() * y_[b].array()).sum();
        }
      }
    }
    rp_ = p_ > 0 ? VectorXd(qp_.A_eq * z_ - qp_.b_eq) : VectorXd();

    // scaling and Schur complement
    scaling_.clear();
    scaled_coeff_.assign(nb_, {});
    scaled_rc_.assign(nb_, {});
    MatrixXd H = qp_.Q;
    double mu_gap = 0.0;
    for (std::size_t b = 0; b < nb_; ++b) {
      auto sc = nt_scaling(s_[b], y_[b]);
      if (!sc) {
        log.debug("  ipm: scaling breakdown in block {}", b);
        best.status = ConicStatus::NumericalFailure;
        return best;
      }
      mu_gap += sc->lambda.squaredNorm();
      const MatrixXd rc = s_[b] + psd_value(b);
      scaled_rc_[b] = sym(sc->Rinv * rc * sc->Rinv.transpose());
      auto& col = scaled_coeff_[b];
      col.resize(static_cast<std::size_t>(nv_));
      for (Index i = 0; i < nv_; ++i) {
        if (cones_.coeff_nonzero[b][static_cast<std::size_t>(i)]) {
          col[static_cast<std::size_t>(i)] =
              sym(sc->Rinv * cones_.coeff[b][static_cast<std::size_t>(i)] * sc->Rinv.transpose());
        }
      }
      for (Index i = 0; i < nv_; ++i) {
        if (!cones_.coeff_nonzero[b][static_cast<std::size_t>(i)]) continue;
        for (Index j = i; j < nv_; ++j) {
          if (!cones_.coeff_nonzero[b][static_cast<std::size_t>(j)]) continue;
          const double hij = (col[static_cast<std::size_t>(i)].array() *
                              col[static_cast<std::size_t>(j)].array())
                                 .sum();
          H(i, j) += hij;
          if (j != i) H(j, i) += hij;
        }
      }
      scaling_.push_back(std::move(*sc));
    }
    const double mu_avg = cones_.degree > 0 ? mu_gap / static_cast<double>(cones_.degree) : 0.0;

    kkt_ = MatrixXd::Zero(nv_ + p_, nv_ + p_);
    kkt_.topLeftCorner(nv_, nv_) = H;
    if (p_ > 0) {
      kkt_.topRightCorner(nv_, p_) = qp_.A_eq.transpose();
      kkt_.bottomLeftCorner(p_, nv_) = qp_.A_eq;
    }
    // symmetric equilibration: barrier terms of nearly active nonneg
    // variables dwarf Q, so a regularization sized by the largest entry
    // would swamp the rest of the system
    equil_.resize(nv_ + p_);
    for (Index i = 0; i < nv_ + p_; ++i) {
      const double m = kkt_.row(i).cwiseAbs().maxCoeff();
      equil_(i) = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
    }
    MatrixXd regularized = equil_.asDiagonal() * kkt_ * equil_.asDiagonal();
    regularized.topLeftCorner(nv_, nv_).diagonal().array() += 1e-13;
    regularized.bottomRightCorner(p_, p_).diagonal().array() -= 1e-13;
    lu_.compute(regularized);

    // predictor
    std::vector<MatrixXd> target(nb_);
    for (std::size_t b = 0; b < nb_; ++b) target[b] = -MatrixXd(scaling_[b].lambda.asDiagonal());
    Direction affine;
    if (!solve_newton(target, affine)) {
      best.status = ConicStatus::NumericalFailure;
      return best;
    }
    const double alpha_aff = std::min(1.0, step_to_boundary(affine));

    double sigma = 0.0;
    if (cones_.degree > 0 && mu_avg > 0.0) {
      double gap_aff = 0.0;
      for (std::size_t b = 0; b < nb_; ++b) {
        const MatrixXd lam = scaling_[b].lambda.asDiagonal();
        gap_aff += ((lam + alpha_aff * affine.ds[b]).array() *
                    (lam + alpha_aff * affine.dy[b]).array())
                       .sum();
      }
      const double ratio = std::max(0.0, gap_aff) / (mu_gap);
      sigma = std::clamp(ratio * ratio * ratio, 0.0, 1.0);
    }

    // corrector
    for (std::size_t b = 0; b < nb_; ++b) {
      const VectorXd& lam = scaling_[b].lambda;
      const Index o = lam.size();
      const MatrixXd cross = sym(affine.ds[b] * affine.dy[b]);
      MatrixXd t(o, o);
      for (Index i = 0; i < o; ++i) {
        for (Index j = 0; j < o; ++j) {
          double rhs = -cross(i, j);
          if (i == j) rhs += sigma * mu_avg - lam(i) * lam(i);
          t(i, j) = 2.0 * rhs / (lam(i) + lam(j));
        }
      }
      target[b] = std::move(t);
    }
    Direction step;
    if (!solve_newton(target, step)) {
      best.status = ConicStatus::NumericalFailure;
      return best;
    }
    const double alpha = std::min(1.0, cfg_.step_fraction * step_to_boundary(step));
    if (!(alpha > 1e-14)) {
      if (++stalled >= 3) {
        best.status = ConicStatus::NumericalFailure;
        return best;
      }
    } else {
      stalled = 0;
    }

    z_ += alpha * step.dz;
    if (p_ > 0) mu_ += alpha * step.dmu;
    for (std::size_t b = 0; b < nb_; ++b) {
      const Scaling& sc = scaling_[b];
      s_[b] = sym(s_[b] + alpha * (sc.R * step.ds[b] * sc.R.transpose()));
      y_[b] = sym(y_[b] + alpha * (sc.Rinv.transpose() * step.dy[b] * sc.Rinv));
    }
  }
  return best;
}

}  // namespace

namespace {

// One active-set Newton step. Directions where the multiplier dominates the
// slack are frozen as active (U_bᵀ psd_b(z) U_b = 0, z_j = 0); the remaining
// equality-constrained QP is solved together with the reduced multipliers
// Y_b = U_b W_b U_bᵀ. Strict complementarity makes this the exact solution
// up to the rotation of the active eigenspace, so a few steps clean up the
// O(√μ) error an interior point leaves on ill-conditioned problems.
std::optional<ConicSolution> polish_step(const ConicQP& qp, const ConicSolution& sol) {
  const auto nv = static_cast<Index>(qp.num_vars());
  const auto p = static_cast<Index>(qp.num_equalities());
  const double r2 = std::sqrt(2.0);

  std::vector<VectorXd> rows;
  std::vector<double> rhs;
  for (Index i = 0; i < p; ++i) {
    rows.emplace_back(qp.A_eq.row(i).transpose());
    rhs.push_back(qp.b_eq(i));
  }
  std::vector<std::size_t> active_nonneg;
  for (std::size_t k = 0; k < qp.nonneg.size(); ++k) {
    const auto j = static_cast<Index>(qp.nonneg[k]);
    if (sol.nu(static_cast<Index>(k)) > sol.z(j)) {
      active_nonneg.push_back(k);
      rows.emplace_back(VectorXd::Unit(nv, j));
      rhs.push_back(0.0);
    }
  }
  std::vector<MatrixXd> basis(qp.psd.offset.num_blocks());
  if (qp.psd.offset.num_blocks() > 0) {
    const BlockSymMatrix value = qp.psd(sol.z);
    for (std::size_t b = 0; b < value.num_blocks(); ++b) {
      const auto m = static_cast<Index>(value.block(b).order());
      if (m == 0) continue;
      const SymEigen eig = sym_eigen(value.block(b));
      const MatrixXd yb = sol.Y.block(b).dense();
      std::vector<Index> cols;
      for (Index i = 0; i < m; ++i) {
        const VectorXd u = eig.vectors.col(i);
        if (u.dot(yb * u) > std::abs(eig.values(i))) cols.push_back(i);
      }
      if (cols.empty()) continue;
      MatrixXd u(m, static_cast<Index>(cols.size()));
      for (Index c = 0; c < u.cols(); ++c) u.col(c) = eig.vectors.col(cols[static_cast<std::size_t>(c)]);
      basis[b] = u;
      const MatrixXd c0 = u.transpose() * qp.psd.offset.block(b).dense() * u;
      std::vector<MatrixXd> ci;
      for (Index i = 0; i < nv; ++i)
        ci.push_back(u.transpose() * qp.psd.coeffs[static_cast<std::size_t>(i)].block(b).dense() * u);
      for (Index a = 0; a < u.cols(); ++a)
        for (Index c = a; c < u.cols(); ++c) {
          const double w = a == c ? 1.0 : r2;
          VectorXd row(nv);
          for (Index i = 0; i < nv; ++i) row(i) = w * ci[static_cast<std::size_t>(i)](a, c);
          rows.push_back(row);
          rhs.push_back(-w * c0(a, c));
        }
    }
  }

  const auto nr = static_cast<Index>(rows.size());
  MatrixXd kkt = MatrixXd::Zero(nv + nr, nv + nr);
  VectorXd r = VectorXd::Zero(nv + nr);
  kkt.topLeftCorner(nv, nv) = qp.Q;
  r.head(nv) = -qp.c;
  for (Index k = 0; k < nr; ++k) {
    kkt.block(nv + k, 0, 1, nv) = rows[static_cast<std::size_t>(k)].transpose();
    kkt.block(0, nv + k, nv, 1) = rows[static_cast<std::size_t>(k)];
    r(nv + k) = rhs[static_cast<std::size_t>(k)];
  }
  const VectorXd x = kkt.completeOrthogonalDecomposition().solve(r);
  if (!x.allFinite()) return std::nullopt;

  ConicSolution out = sol;
  out.z = x.head(nv);
  out.mu = x.segment(nv, p);
  out.nu = VectorXd::Zero(static_cast<Index>(qp.nonneg.size()));
  Index k = nv + p;
  for (auto j : active_nonneg) out.nu(static_cast<Index>(j)) = -x(k++);
  std::vector<SymMatrix> yblocks;
  for (std::size_t b = 0; b < qp.psd.offset.num_blocks(); ++b) {
    const auto m = static_cast<Index>(qp.psd.offset.block(b).order());
    const MatrixXd& u = basis[b];
    if (u.size() == 0) {
      yblocks.emplace_back(static_cast<std::size_t>(m));
      continue;
    }
    MatrixXd w(u.cols(), u.cols());
    for (Index a = 0; a < u.cols(); ++a)
      for (Index c = a; c < u.cols(); ++c) {
        w(a, c) = w(c, a) = a == c ? x(k) : x(k) / r2;
        ++k;
      }
    yblocks.push_back(SymMatrix::from_dense(u * w * u.transpose()));
  }
  out.Y = BlockSymMatrix(std::move(yblocks));
  out.kkt_residual = kkt_residual(qp, out);
  return out;
}

}  // namespace

ConicSolution solve_conic_qp(const ConicQP& qp, const SubsolverConfig& cfg) {
  qp.validate();
  InteriorPoint ipm(qp, cfg);
  ConicSolution sol = ipm.run();
  // a stalled run is still polished; it only becomes Optimal if the
  // residual certificate says so
  if (sol.z.size() == 0 || !sol.z.allFinite()) return sol;
  // successive steps refresh the active eigenspaces; keep the best iterate
  ConicSolution iterate = sol;
  for (int i = 0; i < cfg.polish_steps; ++i) {
    auto cand = polish_step(qp, iterate);
    if (!cand) break;
    detail::logger().debug("  polish {}: kkt {:.3e} -> {:.3e}", i, iterate.kkt_residual,
                           cand->kkt_residual);
    iterate = std::move(*cand);
    if (iterate.kkt_residual < sol.kkt_residual) {
      sol = iterate;
      if (sol.kkt_residual <= cfg.tol_kkt) sol.status = ConicStatus::Optimal;
    }
  }
  return sol;
}

}  // namespace nsdp
