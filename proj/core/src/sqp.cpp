#include "nsdp/sqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "log_internal.hpp"

namespace nsdp {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double inf_norm(const VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

double pos(double a) { return std::max(0.0, a); }

double lambda1_or_neg_inf(const BlockSymMatrix& m) {
  return m.total_order() > 0 ? lambda_max(m) : -std::numeric_limits<double>::infinity();
}

double pos_lambda1(const BlockSymMatrix& m) {
  return m.total_order() > 0 ? pos(lambda_max(m)) : 0.0;
}

// ‖A B‖_F for block-diagonal A, B
double product_frobenius(const BlockSymMatrix& a, const BlockSymMatrix& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.num_blocks(); ++k) {
    sum += (a.block(k).dense() * b.block(k).dense()).squaredNorm();
  }
  return std::sqrt(sum);
}

double multiplier_mass(const VectorXd& mu, const BlockSymMatrix& y) {
  return inf_norm(mu) + y.trace();
}

double lmin_or_zero(const BlockSymMatrix& y) {
  return y.total_order() > 0 ? lambda_min(y) : 0.0;
}

}  // namespace

void SolverConfig::validate() const {
  auto open_unit = [](double value, const char* name) {
    if (!(value > 0.0 && value < 1.0)) {
      throw std::invalid_argument(std::string(name) + " must lie in (0, 1)");
    }
  };
  open_unit(eps, "eps");
  open_unit(delta, "delta");
  open_unit(eta, "eta");
  open_unit(gamma, "gamma");
  if (!(rho0 > 0.0)) throw std::invalid_argument("rho0 must be positive");
  if (nmax <= 0) throw std::invalid_argument("nmax must be positive");
  if (!(tol_step > 0.0)) throw std::invalid_argument("tol_step must be positive");
  if (!(tol_viol > 0.0)) throw std::invalid_argument("tol_viol must be positive");
  if (!(bfea_scale > 0.0)) throw std::invalid_argument("bfea_scale must be positive");
  if (!(bfgs_floor > 0.0)) throw std::invalid_argument("bfgs_floor must be positive");
  if (!(b_min > 0.0 && b_min < b_max)) throw std::invalid_argument("need 0 < b_min < b_max");
  if (!(direction_t_margin >= 0.0)) throw std::invalid_argument("direction_t_margin must be >= 0");
  if (!(direction_t_margin_max >= 0.0))
    throw std::invalid_argument("direction_t_margin_max must be >= 0");
  if (!(subsolver.tol_kkt > 0.0)) throw std::invalid_argument("subsolver tol_kkt must be positive");
  if (subsolver.max_iter <= 0) throw std::invalid_argument("subsolver max_iter must be positive");
}

std::string_view to_string(TerminationClass tc) {
  switch (tc) {
    case TerminationClass::KKT:
      return "KKT";
    case TerminationClass::FeasibleCQFail:
      return "FeasibleCQFail";
    case TerminationClass::InfeasibleStationaryKKTShifted:
      return "InfeasibleStationaryKKTShifted";
    case TerminationClass::InfeasibleStationaryCQFailShifted:
      return "InfeasibleStationaryCQFailShifted";
    case TerminationClass::MaxIter:
      return "MaxIter";
    case TerminationClass::NumericalFailure:
      return "NumericalFailure";
  }
  return "?";
}

std::optional<TerminationClass> termination_from_string(std::string_view text) {
  for (auto tc : {TerminationClass::KKT, TerminationClass::FeasibleCQFail,
                  TerminationClass::InfeasibleStationaryKKTShifted,
                  TerminationClass::InfeasibleStationaryCQFailShifted, TerminationClass::MaxIter,
                  TerminationClass::NumericalFailure}) {
    if (to_string(tc) == text) return tc;
  }
  return std::nullopt;
}

bool is_infeasible_stationary(TerminationClass tc) {
  return tc == TerminationClass::InfeasibleStationaryKKTShifted ||
         tc == TerminationClass::InfeasibleStationaryCQFailShifted;
}

// ------------------------------------------------------------------ merit

double violation(const Evaluation& e) {
  return e.h.lpNorm<1>() + pos_lambda1(e.G);
}

double penalty(const Evaluation& e, double rho) { return rho * e.f + violation(e); }

double linearized_violation(const Evaluation& e, const VectorXd& d) {
  const VectorXd hl = e.h + e.Dh * d;
  return hl.lpNorm<1>() + pos_lambda1(e.G + dg_apply(e, d));
}

LinearizedReduction delta_l(const Evaluation& e, const VectorXd& d, double rho) {
  LinearizedReduction out;
  out.f = -e.g.dot(d);
  out.v = violation(e) - linearized_violation(e, d);
  out.rho = rho * out.f + out.v;
  return out;
}

VectorXd fj_gradient(const Evaluation& e, double rho, const VectorXd& mu, const BlockSymMatrix& y) {
  VectorXd grad = rho * e.g + dg_adjoint(e, y);
  if (mu.size()) grad += e.Dh.transpose() * mu;
  return grad;
}

double residual_fea(const Evaluation& e, const VectorXd& mu, const BlockSymMatrix& y) {
  const auto l = e.h.size();
  const double lam = pos_lambda1(e.G);
  double sum = inf_norm(fj_gradient(e, 0.0, mu, y));
  double plus = 0.0;
  double minus = 0.0;
  for (Index i = 0; i < l; ++i) {
    plus = std::max(plus, std::abs((1.0 - mu(i)) * pos(e.h(i))));
    minus = std::max(minus, std::abs((1.0 + mu(i)) * std::min(0.0, e.h(i))));
  }
  sum += plus + minus;
  sum += std::abs(1.0 - y.trace()) * lam;
  BlockSymMatrix shifted = e.G;
  shifted.add_identity(-lam);
  sum += product_frobenius(y, shifted);
  return sum;
}

double residual_opt(const Evaluation& e, double rho, const VectorXd& mu, const BlockSymMatrix& y) {
  return inf_norm(fj_gradient(e, rho, mu, y)) + product_frobenius(y, e.G);
}

// ------------------------------------------------------------ penalty rule

PenaltyUpdate update_penalty(const PenaltyInputs& in, const SolverConfig& cfg) {
  PenaltyUpdate out;
  out.multiplier_branch = in.rho * in.mass_bar > 1.0 || in.rho * in.mass_hat > 1.0;
  out.rho_prime = out.multiplier_branch
                      ? std::min(cfg.delta * in.rho, (1.0 - cfg.eps) / (in.mass_bar + in.mass_hat))
                      : in.rho;

  const double dl_rho_prime = -out.rho_prime * in.g_dot_d + in.dl_v;
  if (dl_rho_prime < cfg.eps * in.dl_v) {
    const double denom = in.g_dot_d + 0.5 * in.d_b_d;
    if (!(denom > 0.0)) {
      throw PenaltyUpdateError("penalty update: nonpositive zeta denominator " +
                               std::to_string(denom));
    }
    out.zeta = (1.0 - cfg.eps) * in.dl_v / denom;
    out.rho_next = std::min(cfg.delta * out.rho_prime, *out.zeta);
  } else {
    out.rho_next = out.rho_prime;
  }
  return out;
}

// ------------------------------------------------------------- line search

LineSearchResult line_search(const NsdpProblem& problem, const Evaluation& e, const VectorXd& d,
                             double rho, double dl_rho, const SolverConfig& cfg) {
  LineSearchResult out;
  const double p0 = penalty(e, rho);
  double alpha = 1.0;
  while (alpha >= cfg.alpha_min) {
    ++out.trials;
    Evaluation trial = evaluate(problem, e.x + alpha * d);
    if (penalty(trial, rho) - p0 <= -cfg.eta * alpha * dl_rho) {
      out.accepted = true;
      out.alpha = alpha;
      out.next = std::move(trial);
      return out;
    }
    alpha *= cfg.gamma;
  }
  out.alpha = alpha;
  return out;
}

// ------------------------------------------------------------ quasi-Newton

MatrixXd damped_bfgs(const MatrixXd& b, const VectorXd& s, const VectorXd& y) {
  if (s.norm() <= 1e-14) return b;
  const VectorXd bs = b * s;
  const double sbs = s.dot(bs);
  if (!(sbs > 0.0)) return b;
  const double sy = s.dot(y);
  const double theta = sy >= 0.2 * sbs ? 1.0 : 0.8 * sbs / (sbs - sy);
  const VectorXd r = theta * y + (1.0 - theta) * bs;
  const double sr = s.dot(r);
  MatrixXd next = b - bs * bs.transpose() / sbs + r * r.transpose() / sr;
  return 0.5 * (next + next.transpose());
}

MatrixXd bfgs_update(const MatrixXd& b, const Evaluation& e_old, const Evaluation& e_new,
                     const VectorXd& mu, const BlockSymMatrix& y) {
  const VectorXd s = e_new.x - e_old.x;
  const VectorXd grad_diff = fj_gradient(e_new, 1.0, mu, y) - fj_gradient(e_old, 1.0, mu, y);
  return damped_bfgs(b, s, grad_diff);
}

MatrixXd assemble_b(const MatrixXd& b_bfgs, double rho, const SolverConfig& cfg) {
  const SymEigen eig = sym_eigen(SymMatrix::from_dense(std::max(cfg.bfgs_floor, rho) * b_bfgs));
  const VectorXd clipped = eig.values.cwiseMax(cfg.b_min).cwiseMin(cfg.b_max);
  const MatrixXd out = eig.vectors * clipped.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

// ------------------------------------------------------------- outer loop

std::vector<double> shifted_penalty_diagnostic(const SolveReport& report) {
  std::vector<double> out;
  if (report.records.empty()) return out;
  double f_min = report.records.front().f;
  for (const auto& r : report.records) f_min = std::min(f_min, r.f);
  out.reserve(report.records.size());
  for (const auto& r : report.records) out.push_back(r.rho_after_update * (r.f - f_min) + r.v);
  return out;
}

TerminationClass classify(double rho, double v, const SolverConfig& cfg) {
  const bool feasible = v < cfg.tol_viol;
  const bool rho_positive = rho >= cfg.rho_floor_class;
  if (feasible) return rho_positive ? TerminationClass::KKT : TerminationClass::FeasibleCQFail;
  return rho_positive ? TerminationClass::InfeasibleStationaryKKTShifted
                      : TerminationClass::InfeasibleStationaryCQFailShifted;
}

namespace {

bool usable(const ConicSolution& sol, const SolverConfig& cfg) {
  return sol.status == ConicStatus::Optimal ||
         (sol.status == ConicStatus::MaxIter && sol.kkt_residual <= cfg.subsolver_accept_tol);
}


}  // namespace

SolveReport solve(const NsdpProblem& problem, const VectorXd& x0, const SolverConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto& log = detail::logger();

  SolveReport report;
  report.problem = std::string(problem.name());
  report.x0 = x0;
  report.config = cfg;

  const auto n = static_cast<Index>(problem.num_vars());
  const auto l = static_cast<Index>(problem.num_equalities());
  const FeasibilityLayout lay{problem.num_vars(), problem.num_equalities()};
  const MatrixXd b_fea = cfg.bfea_scale * MatrixXd::Identity(n, n);

  Evaluation e = evaluate(problem, x0);
  double rho = cfg.rho0;
  MatrixXd b_bfgs = MatrixXd::Identity(n, n);
  bool finished = false;

  auto finish = [&](TerminationClass tc, std::string message) {
    report.termination = tc;
    report.message = std::move(message);
    finished = true;
  };

  for (int k = 0; k < cfg.nmax && !finished; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.rho = rho;
    rec.x = e.x;
    rec.v = violation(e);
    rec.f = e.f;

    // feasibility phase
    const ConicQP fqp = build_feasibility_qp(e, b_fea);
    const ConicSolution fsol = solve_conic_qp(fqp, cfg.subsolver);
    rec.fea_status = fsol.status;
    rec.fea_kkt = fsol.kkt_residual;
    rec.fea_kkt_scale = residual_scale(fqp);
    rec.fea_iterations = fsol.iterations;
    const VectorXd d_fea = fsol.z.head(n);
    const VectorXd r = fsol.z.segment(static_cast<Index>(lay.r_offset()), l).cwiseMax(0.0);
    const VectorXd s = fsol.z.segment(static_cast<Index>(lay.s_offset()), l).cwiseMax(0.0);
    const double t = std::max(0.0, fsol.z(static_cast<Index>(lay.t_index())));
    const BlockSymMatrix y_bar = fsol.Y;
    rec.norm_dfea = d_fea.norm();
    rec.lv_dfea = r.sum() + s.sum() + t;
    rec.dl_v_dfea = rec.v - linearized_violation(e, d_fea);
    rec.mu_bar_inf = inf_norm(fsol.mu);
    rec.tr_y_bar = y_bar.trace();
    rec.lmin_y_bar = lmin_or_zero(y_bar);
    rec.r_fea = residual_fea(e, fsol.mu, y_bar);
    report.final_multipliers.mu_bar = fsol.mu;
    report.final_multipliers.y_bar = y_bar;
    report.final_r = r;
    report.final_s = s;
    report.final_t = t;
    if (!usable(fsol, cfg)) {
      report.records.push_back(rec);
      finish(TerminationClass::NumericalFailure,
             "feasibility subproblem: " + std::string(to_string(fsol.status)));
      break;
    }

    // direction phase
    const MatrixXd b = assemble_b(b_bfgs, rho, cfg);
    {
      const SymEigen be = sym_eigen(SymMatrix::from_dense(b));
      rec.b_eig_max = be.values(0);
      rec.b_eig_min = be.values(be.values.size() - 1);
    }
    const double lam_fea = lambda1_or_neg_inf(e.G + dg_apply(e, d_fea));
    const double t_dir = std::max(t, lam_fea);
    rec.dir_margin = cfg.direction_t_margin;
    ConicQP dqp = build_direction_qp(e, b, rho, r, s, t_dir, rec.dir_margin);
    ConicSolution dsol = solve_conic_qp(dqp, cfg.subsolver);
    {
      const double unit = 1.0 + std::abs(t_dir);
      for (double m = std::max(1e-9, 10.0 * cfg.direction_t_margin / unit);
           !usable(dsol, cfg) && m <= cfg.direction_t_margin_max * (1.0 + 1e-12); m *= 10.0) {
        log.debug("  direction retry with margin {:.1e}", m * unit);
        rec.dir_margin = m * unit;
        dqp = build_direction_qp(e, b, rho, r, s, t_dir, rec.dir_margin);
        dsol = solve_conic_qp(dqp, cfg.subsolver);
      }
    }
    rec.dir_kkt_scale = residual_scale(dqp);
    rec.dir_status = dsol.status;
    rec.dir_kkt = dsol.kkt_residual;
    rec.dir_iterations = dsol.iterations;
    const VectorXd& d = dsol.z;
    const BlockSymMatrix y_hat = dsol.Y;
    rec.norm_d = d.norm();
    rec.lv_d = linearized_violation(e, d);
    rec.mu_hat_inf = inf_norm(dsol.mu);
    rec.tr_y_hat = y_hat.trace();
    rec.lmin_y_hat = lmin_or_zero(y_hat);
    rec.r_opt = residual_opt(e, rho, dsol.mu, y_hat);
    report.final_multipliers.mu_hat = dsol.mu;
    report.final_multipliers.y_hat = y_hat;
    if (!usable(dsol, cfg)) {
      rec.rho_after_update = rho;
      report.records.push_back(rec);
      finish(TerminationClass::NumericalFailure,
             "direction subproblem: " + std::string(to_string(dsol.status)));
      break;
    }

    log.info("k={:3d} rho={:.4e} v={:.6e} f={:.6e} |d|={:.4e} lv_fea={:.4e}", k, rho, rec.v, e.f,
             rec.norm_d, rec.lv_dfea);

    if (rec.norm_d < cfg.tol_step) {
      rec.rho_after_update = rho;
      report.records.push_back(rec);
      finish(classify(rho, rec.v, cfg), "step below tolerance");
      break;
    }

    // penalty update
    const LinearizedReduction red = delta_l(e, d, 1.0);
    rec.dl_v_d = red.v;
    PenaltyInputs pin;
    pin.rho = rho;
    pin.mass_bar = multiplier_mass(fsol.mu, y_bar);
    pin.mass_hat = multiplier_mass(dsol.mu, y_hat);
    pin.g_dot_d = e.g.dot(d);
    pin.dl_v = red.v;
    pin.d_b_d = d.dot(b * d);
    PenaltyUpdate upd;
    try {
      upd = update_penalty(pin, cfg);
    } catch (const PenaltyUpdateError& err) {
      rec.rho_after_update = rho;
      report.records.push_back(rec);
      finish(TerminationClass::NumericalFailure, err.what());
      break;
    }
    rec.zeta = upd.zeta;
    rec.rho_after_update = upd.rho_next;
    rec.dl_rho_next = -upd.rho_next * pin.g_dot_d + red.v;

    // line search
    LineSearchResult ls = line_search(problem, e, d, upd.rho_next, rec.dl_rho_next, cfg);
    rec.ls_trials = ls.trials;
    if (!ls.accepted) {
      report.records.push_back(rec);
      finish(TerminationClass::NumericalFailure, "line search: step length below floor");
      break;
    }
    rec.alpha = ls.alpha;
    report.records.push_back(rec);

    // quasi-Newton update
    const double mscale = cfg.bfgs_scaled_multipliers ? 1.0 / std::max(cfg.bfgs_floor, rho) : 1.0;
    b_bfgs = bfgs_update(b_bfgs, e, *ls.next, mscale * dsol.mu, mscale * y_hat);

    rho = upd.rho_next;
    e = std::move(*ls.next);
  }

  if (!finished) {
    report.termination = TerminationClass::MaxIter;
    report.message = "iteration cap reached";
  }
  report.final_x = e.x;
  report.final_v = violation(e);
  report.final_f = e.f;
  report.final_rho = rho;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace nsdp
