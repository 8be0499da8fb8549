#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include <nsdp/problems.hpp>
#include <nsdp/sqp.hpp>

using namespace nsdp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double min_eig(const MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(m).eigenvalues()(0);
}

// f = -x + a x³ with an inactive constant constraint, so P^ρ = ρ f.
class Cubic final : public NsdpProblem {
 public:
  explicit Cubic(double a) : a_(a) {}
  std::string_view name() const override { return "cubic"; }
  std::size_t num_vars() const override { return 1; }
  std::size_t num_equalities() const override { return 0; }
  std::vector<std::size_t> block_dims() const override { return {1}; }
  double f(const VectorXd& x) const override { return -x(0) + a_ * x(0) * x(0) * x(0); }
  VectorXd gradient(const VectorXd& x) const override {
    return vec({-1.0 + 3.0 * a_ * x(0) * x(0)});
  }
  VectorXd h(const VectorXd&) const override { return VectorXd(0); }
  MatrixXd jacobian_h(const VectorXd&) const override { return MatrixXd(0, 1); }
  BlockSymMatrix G(const VectorXd&) const override {
    return BlockSymMatrix({SymMatrix::diagonal({-1.0})});
  }
  BlockSymMatrix dG(const VectorXd&, std::size_t) const override {
    return BlockSymMatrix({SymMatrix(1)});
  }

 private:
  double a_;
};

}  // namespace

TEST_CASE("violation and penalty") {
  auto iso = make_problem("isolated");
  const Evaluation e = evaluate(*iso, vec({3, 2}));
  CHECK(violation(e) == doctest::Approx(4.7016).epsilon(1e-5));
  CHECK(penalty(e, 1.0) == doctest::Approx(9.7016).epsilon(1e-5));
  CHECK(penalty(e, 0.0) == violation(e));

  auto rs = make_problem("rosen-suzuki");
  const Evaluation s = evaluate(*rs, vec({0, 1, 2, -1}));
  CHECK(violation(s) <= 1e-12);
  CHECK(penalty(s, 0.3) == doctest::Approx(0.3 * s.f));

  auto ce = make_problem("counterexample");
  CHECK(violation(evaluate(*ce, vec({-4, 1, 1}))) == 21.0);
}

TEST_CASE("linearized violation and reductions") {
  auto iso = make_problem("isolated");
  const Evaluation e = evaluate(*iso, vec({3, 2}));
  CHECK(linearized_violation(e, VectorXd::Zero(2)) == violation(e));

  // G is affine, so the model is exact
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  for (int rep = 0; rep < 100; ++rep) {
    const VectorXd d = vec({3 * n(rng), 3 * n(rng)});
    const Evaluation moved = evaluate(*iso, e.x + d);
    CHECK(linearized_violation(e, d) == doctest::Approx(violation(moved)).epsilon(1e-12));
    const LinearizedReduction a = delta_l(e, d, 0.7), b = delta_l(e, d, 0.2);
    CHECK(a.f == doctest::Approx(-e.g.dot(d)));
    CHECK(a.v == doctest::Approx(violation(e) - violation(moved)));
    CHECK(a.rho == doctest::Approx(0.7 * a.f + a.v));
    // linear in ρ
    CHECK(a.rho - b.rho == doctest::Approx(0.5 * a.f));
  }
  const LinearizedReduction z = delta_l(e, VectorXd::Zero(2), 1.0);
  CHECK(z.rho == 0.0);
  CHECK(z.v == 0.0);
  CHECK(z.f == 0.0);

  // convex along any segment
  auto ce = make_problem("counterexample");
  const Evaluation c = evaluate(*ce, vec({-4, 1, 1}));
  for (int rep = 0; rep < 100; ++rep) {
    const VectorXd d1 = vec({n(rng), n(rng), n(rng)}), d2 = vec({n(rng), n(rng), n(rng)});
    const double lhs = linearized_violation(c, 0.5 * (d1 + d2));
    CHECK(lhs <= 0.5 * (linearized_violation(c, d1) + linearized_violation(c, d2)) + 1e-10);
  }
}

TEST_CASE("residuals") {
  SUBCASE("feasibility residual vanishes at the infeasibility minimizer") {
    auto iso = make_problem("isolated");
    const Evaluation e = evaluate(*iso, vec({0, 0}));
    const ConicSolution s = solve_conic_qp(build_feasibility_qp(e, 1e-3 * MatrixXd::Identity(2, 2)));
    REQUIRE(s.status == ConicStatus::Optimal);
    CHECK(residual_fea(e, s.mu, s.Y) <= 1e-6);
    // a wrong multiplier leaves |1 - tr Y| λ₁ behind
    CHECK(residual_fea(e, s.mu, 0.5 * s.Y) >= 0.4);
  }
  SUBCASE("feasible point, zero multipliers") {
    auto ce = make_problem("counterexample");
    const Evaluation e = evaluate(*ce, vec({2, 3, 0}));
    CHECK(residual_fea(e, VectorXd::Zero(2), BlockSymMatrix::zeros(ce->block_dims())) == 0.0);
  }
  SUBCASE("optimality residual is homogeneous in (rho, mu, Y)") {
    auto rs = make_problem("rosen-suzuki");
    const Evaluation e = evaluate(*rs, vec({1, -2, 3, 0.5}));
    std::mt19937_64 rng(23);
    std::normal_distribution<double> n;
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<SymMatrix> blocks;
      for (auto m : rs->block_dims()) {
        SymMatrix b(m);
        for (std::size_t j = 0; j < m; ++j)
          for (std::size_t i = 0; i <= j; ++i) b.at(i, j) = n(rng);
        blocks.push_back(b);
      }
      const BlockSymMatrix y(blocks);
      const VectorXd mu = VectorXd::Zero(0);
      const double c = 0.1 + std::abs(n(rng));
      const double base = residual_opt(e, 0.4, mu, y);
      CHECK(residual_opt(e, c * 0.4, mu, c * y) == doctest::Approx(c * base).epsilon(1e-12));
      const VectorXd grad = fj_gradient(e, 0.4, mu, y);
      CHECK((fj_gradient(e, c * 0.4, mu, c * y) - c * grad).norm() <= 1e-12 * (1 + grad.norm()));
    }
  }
  SUBCASE("optimality residual at an unconstrained stationary point") {
    Cubic cubic(1.0 / 3.0);  // f' = -1 + x², stationary at x = 1
    const Evaluation e = evaluate(cubic, vec({1.0}));
    CHECK(residual_opt(e, 1.0, VectorXd(0), BlockSymMatrix::zeros(cubic.block_dims())) == 0.0);
  }
}

TEST_CASE("penalty update") {
  const SolverConfig cfg;
  SUBCASE("nothing triggers") {
    const PenaltyInputs in{1.0, 0.5, 0.3, -1.0, 1.0, 2.0};
    const PenaltyUpdate u = update_penalty(in, cfg);
    CHECK_FALSE(u.multiplier_branch);
    CHECK(u.rho_prime == 1.0);
    CHECK(u.rho_next == 1.0);
    CHECK_FALSE(u.zeta.has_value());
  }
  SUBCASE("multiplier mass too large") {
    const PenaltyInputs in{1.0, 2.0, 0.3, -1.0, 1.0, 2.0};
    const PenaltyUpdate u = update_penalty(in, cfg);
    CHECK(u.multiplier_branch);
    CHECK(u.rho_prime == doctest::Approx(0.43474).epsilon(1e-5));
    CHECK(u.rho_prime == doctest::Approx((1.0 - 1e-4) / 2.3).epsilon(1e-15));
    CHECK(u.rho_next == u.rho_prime);
  }
  SUBCASE("reduction test fails") {
    const PenaltyInputs in{1.0, 0.2, 0.2, 10.0, 1.0, 2.0};
    const PenaltyUpdate u = update_penalty(in, cfg);
    REQUIRE(u.zeta.has_value());
    CHECK(*u.zeta == doctest::Approx((1.0 - 1e-4) * 1.0 / (10.0 + 1.0)));
    CHECK(u.rho_next == doctest::Approx(std::min(0.9, *u.zeta)));
    CHECK(-u.rho_next * in.g_dot_d + in.dl_v >= cfg.eps * in.dl_v);
  }
  SUBCASE("nonpositive denominator is reported") {
    const PenaltyInputs in{1.0, 0.2, 0.2, -1.0, -2.0, 0.0};
    CHECK_THROWS_AS(update_penalty(in, cfg), PenaltyUpdateError);
  }
  SUBCASE("random inputs keep rho positive, nonincreasing and the reduction bound") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 2000; ++rep) {
      PenaltyInputs in;
      in.rho = 1e-6 + u(rng);
      in.mass_bar = 3 * u(rng);
      in.mass_hat = 20 * u(rng);
      in.g_dot_d = 10 * (u(rng) - 0.5);
      in.dl_v = 5 * u(rng);
      in.d_b_d = 1e-6 + 5 * u(rng);
      const PenaltyUpdate out = update_penalty(in, cfg);
      CAPTURE(rep);
      CHECK(out.rho_next > 0.0);
      CHECK(out.rho_next <= in.rho);
      CHECK(out.rho_next <= out.rho_prime);
      CHECK(out.rho_prime * in.mass_bar <= 1.0 + 1e-12);
      CHECK(out.rho_prime * in.mass_hat <= 1.0 + 1e-12);
      CHECK(-out.rho_next * in.g_dot_d + in.dl_v >= cfg.eps * in.dl_v - 1e-12);
    }
  }
}

TEST_CASE("Armijo line search") {
  SolverConfig cfg;
  const VectorXd d = vec({1.0});
  SUBCASE("full step") {
    Cubic p(0.5);
    const Evaluation e = evaluate(p, vec({0.0}));
    const LineSearchResult r = line_search(p, e, d, 1.0, delta_l(e, d, 1.0).rho, cfg);
    REQUIRE(r.accepted);
    CHECK(r.alpha == 1.0);
    CHECK(r.trials == 1);
  }
  SUBCASE("one backtrack") {
    // -α + 2α³ <= -1e-4 α fails at α = 1, holds at α = 0.6
    Cubic p(2.0);
    const Evaluation e = evaluate(p, vec({0.0}));
    const LineSearchResult r = line_search(p, e, d, 1.0, delta_l(e, d, 1.0).rho, cfg);
    REQUIRE(r.accepted);
    CHECK(r.alpha == doctest::Approx(0.6));
    CHECK(r.trials == 2);
    REQUIRE(r.next.has_value());
    CHECK(r.next->x(0) == doctest::Approx(0.6));
    CHECK(penalty(*r.next, 1.0) - penalty(e, 1.0) <= -cfg.eta * r.alpha * 1.0);
  }
  SUBCASE("floor reached") {
    Cubic p(1e40);  // admissible only for α <= 1e-20
    const Evaluation e = evaluate(p, vec({0.0}));
    const LineSearchResult r = line_search(p, e, d, 1.0, delta_l(e, d, 1.0).rho, cfg);
    CHECK_FALSE(r.accepted);
    CHECK(r.alpha < cfg.alpha_min);
  }
}

TEST_CASE("damped BFGS") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n;
  const MatrixXd b = (MatrixXd(3, 3) << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2).finished();
  SUBCASE("secant already satisfied") {
    const VectorXd s = vec({1, -2, 0.5});
    CHECK((damped_bfgs(b, s, b * s) - b).norm() <= 1e-12);
  }
  SUBCASE("tiny step is skipped") {
    CHECK(damped_bfgs(b, vec({1e-15, 0, 0}), vec({1, 1, 1})) == b);
  }
  SUBCASE("negative curvature stays positive definite") {
    for (int rep = 0; rep < 200; ++rep) {
      const VectorXd s = vec({n(rng), n(rng), n(rng)});
      VectorXd y = vec({n(rng), n(rng), n(rng)});
      if (s.dot(y) > 0) y = -y;
      const MatrixXd next = damped_bfgs(b, s, y);
      CHECK(min_eig(next) > 0.0);
      CHECK((next - next.transpose()).norm() == 0.0);
    }
  }
  SUBCASE("one update on a convex quadratic satisfies the secant equation") {
    const MatrixXd h = (MatrixXd(3, 3) << 2, 0.3, 0, 0.3, 1, 0.2, 0, 0.2, 3).finished();
    for (int rep = 0; rep < 50; ++rep) {
      const VectorXd s = vec({n(rng), n(rng), n(rng)});
      const VectorXd y = h * s;
      const MatrixXd next = damped_bfgs(MatrixXd::Identity(3, 3), s, y);
      CHECK((next * s - y).norm() <= 1e-10 * (1.0 + y.norm()));
    }
  }
  SUBCASE("Lagrangian-gradient pair") {
    auto ce = make_problem("counterexample");
    const Evaluation a = evaluate(*ce, vec({-4, 1, 1})), c = evaluate(*ce, vec({-3, 1.5, 0.5}));
    const VectorXd mu = vec({0.3, -0.7});
    const BlockSymMatrix y = BlockSymMatrix::identity(ce->block_dims());
    // ∇(f + μᵀh + <Y, G>) assembled entry by entry
    auto lag_grad = [&](const Evaluation& e) {
      VectorXd g = e.g + e.Dh.transpose() * mu;
      for (std::size_t i = 0; i < e.dG.size(); ++i) g(static_cast<Eigen::Index>(i)) += inner(e.dG[i], y);
      return g;
    };
    const MatrixXd b0 = MatrixXd::Identity(3, 3);
    const MatrixXd want = damped_bfgs(b0, c.x - a.x, lag_grad(c) - lag_grad(a));
    CHECK((bfgs_update(b0, a, c, mu, y) - want).norm() <= 1e-12);
  }
}

TEST_CASE("assembled model matrix") {
  const SolverConfig cfg;
  CHECK((assemble_b(MatrixXd::Identity(3, 3), 1.0, cfg) - MatrixXd::Identity(3, 3)).norm() <= 1e-14);
  const MatrixXd b = (MatrixXd(2, 2) << 2, 1, 1, 3).finished();
  CHECK((assemble_b(b, 1e-7, cfg) - 1e-5 * b).norm() <= 1e-18);
  CHECK((assemble_b(b, 0.25, cfg) - 0.25 * b).norm() <= 1e-14);
  // clip oracle: rotate diag(1e12, 1e-12)
  const double c = std::cos(0.3), s = std::sin(0.3);
  const MatrixXd q = (MatrixXd(2, 2) << c, -s, s, c).finished();
  const MatrixXd big = q * VectorXd(vec({1e12, 1e-12})).asDiagonal() * q.transpose();
  const MatrixXd out = assemble_b(big, 1.0, cfg);
  const MatrixXd want = q * VectorXd(vec({1e8, 1e-8})).asDiagonal() * q.transpose();
  CHECK((out - want).norm() <= 1e-6);
  const auto ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(out).eigenvalues();
  CHECK(ev(1) == doctest::Approx(1e8).epsilon(1e-9));
  CHECK(ev(0) == doctest::Approx(1e-8).epsilon(1e-4));
}

TEST_CASE("termination classes") {
  const SolverConfig cfg;
  CHECK(classify(0.0466, 9.77e-11, cfg) == TerminationClass::KKT);
  CHECK(classify(0.1109, 1.0, cfg) == TerminationClass::InfeasibleStationaryKKTShifted);
  // threshold classification cannot see CQ failure in the limit
  CHECK(classify(0.0114, 1e-9, cfg) == TerminationClass::KKT);
  CHECK(classify(1e-9, 1e-9, cfg) == TerminationClass::FeasibleCQFail);
  CHECK(classify(1e-9, 0.5, cfg) == TerminationClass::InfeasibleStationaryCQFailShifted);
  CHECK(classify(cfg.rho_floor_class, cfg.tol_viol, cfg) == TerminationClass::InfeasibleStationaryKKTShifted);

  for (auto tc : {TerminationClass::KKT, TerminationClass::FeasibleCQFail,
                  TerminationClass::InfeasibleStationaryKKTShifted,
                  TerminationClass::InfeasibleStationaryCQFailShifted, TerminationClass::MaxIter,
                  TerminationClass::NumericalFailure}) {
    CHECK(termination_from_string(to_string(tc)) == tc);
  }
  CHECK_FALSE(termination_from_string("kkt").has_value());
  CHECK(is_infeasible_stationary(TerminationClass::InfeasibleStationaryCQFailShifted));
  CHECK_FALSE(is_infeasible_stationary(TerminationClass::KKT));
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(SolverConfig{}.validate());
  auto bad = [](auto mutate) {
    SolverConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.eps = 0.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.delta = 1.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.gamma = 1.5; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.rho0 = -1.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.nmax = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.b_min = 1e9; }).validate(), std::invalid_argument);
  auto iso = make_problem("isolated");
  CHECK_THROWS_AS(solve(*iso, vec({3, 2}), bad([](SolverConfig& c) { c.eta = 0.0; })),
                  std::invalid_argument);
}

TEST_CASE("solve on the listed small problems") {
  SUBCASE("isolated infeasible minimizer") {
    auto p = make_problem("isolated");
    const SolveReport r = solve(*p, vec({3, 2}));
    CHECK(r.termination == TerminationClass::InfeasibleStationaryKKTShifted);
    CHECK(r.final_x.norm() <= 1e-3);
    CHECK(r.final_v == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(std::abs(r.final_f) <= 1e-4);
    REQUIRE(r.records.size() >= 2);
    // first step goes to the origin
    CHECK(r.records[0].norm_d == doctest::Approx(std::sqrt(13.0)).epsilon(1e-4));
    CHECK(r.records[0].norm_d == doctest::Approx(3.6056).epsilon(1e-4));
    CHECK(r.records[0].lv_dfea == doctest::Approx(1.0).epsilon(1e-4));
    // ρ₁ recomputed from the recorded multiplier masses
    const auto& r0 = r.records[0];
    const SolverConfig cfg;
    const double mass = r0.mu_bar_inf + r0.tr_y_bar + r0.mu_hat_inf + r0.tr_y_hat;
    const bool big = r0.rho * (r0.mu_bar_inf + r0.tr_y_bar) > 1.0 || r0.rho * (r0.mu_hat_inf + r0.tr_y_hat) > 1.0;
    REQUIRE(big);
    const double rho1 = std::min(cfg.delta * r0.rho, (1.0 - cfg.eps) / mass);
    CHECK(r0.rho_after_update == doctest::Approx(rho1).epsilon(1e-12));
    // tr Ȳ = 1 and the direction multipliers give at least mass 4 here
    CHECK(r0.rho_after_update <= (1.0 - cfg.eps) / 4.0 + 1e-9);
    CHECK(r.records[1].rho == r0.rho_after_update);
  }
  SUBCASE("nactive") {
    auto p = make_problem("nactive");
    const SolveReport r = solve(*p, vec({-20, 10}));
    CHECK(r.termination == TerminationClass::InfeasibleStationaryKKTShifted);
    CHECK((r.final_x - vec({-1.0 / 3.0, 0.0})).norm() <= 1e-3);
    CHECK(r.final_v == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
    CHECK(r.final_f == doctest::Approx(-1.0 / 3.0).epsilon(1e-3));
  }
  SUBCASE("counterexample") {
    auto p = make_problem("counterexample");
    const SolveReport r = solve(*p, vec({-4, 1, 1}));
    CHECK(r.termination == TerminationClass::KKT);
    CHECK((r.final_x - vec({2, 3, 0})).norm() <= 5e-3);
    CHECK(r.final_f == doctest::Approx(2.0).epsilon(1e-3));
  }
  SUBCASE("iteration cap") {
    auto p = make_problem("counterexample");
    SolverConfig cfg;
    cfg.nmax = 2;
    const SolveReport r = solve(*p, vec({-4, 1, 1}), cfg);
    CHECK(r.termination == TerminationClass::MaxIter);
    CHECK(r.records.size() == 2);
  }
}

TEST_CASE("shifted penalty diagnostic") {
  SolveReport empty;
  CHECK(shifted_penalty_diagnostic(empty).empty());

  SolveReport one;
  IterationRecord rec;
  rec.f = 3.0;
  rec.v = 0.5;
  rec.rho_after_update = 0.1;
  one.records.push_back(rec);
  const auto phi1 = shifted_penalty_diagnostic(one);
  REQUIRE(phi1.size() == 1);
  CHECK(phi1[0] == 0.5);  // f_min is f itself

  // constant f: φ is the violation sequence
  SolveReport flat = one;
  rec.v = 0.25;
  flat.records.push_back(rec);
  rec.v = 0.0;
  flat.records.push_back(rec);
  const auto phi = shifted_penalty_diagnostic(flat);
  CHECK(phi == std::vector<double>{0.5, 0.25, 0.0});

  auto iso = make_problem("isolated");
  const SolveReport r = solve(*iso, vec({3, 2}));
  const auto p = shifted_penalty_diagnostic(r);
  REQUIRE(p.size() == r.records.size());
  for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i] <= p[i - 1] + 1e-8);
  CHECK(p.back() < p.front());
}
