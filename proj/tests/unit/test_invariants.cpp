#include <doctest.h>

#include <nsdp/invariants.hpp>
#include <nsdp/problems.hpp>

using namespace nsdp;
using Eigen::VectorXd;

TEST_CASE("every listed case satisfies the run invariants") {
  for (const auto& c : list_cases()) {
    auto p = make_problem(c.problem);
    const SolveReport r = solve(*p, c.x0);
    const InvariantReport inv = check_invariants(*p, r);
    CAPTURE(c.label());
    CAPTURE(inv.summary());
    CHECK(inv.ok());
    // one record per iteration, numbered from zero
    for (std::size_t i = 0; i < r.records.size(); ++i) CHECK(r.records[i].k == static_cast<int>(i));
  }
}

TEST_CASE("tampered records are caught") {
  auto p = make_problem("counterexample");
  const SolveReport clean = solve(*p, p->initial_points().front());
  REQUIRE(clean.records.size() >= 4);
  REQUIRE(check_invariants(*p, clean).ok());

  auto expect = [&](InvariantKind kind, auto mutate) {
    SolveReport r = clean;
    mutate(r.records);
    const InvariantReport inv = check_invariants(*p, r);
    CAPTURE(to_string(kind));
    CHECK_FALSE(inv.ok(kind));
    CHECK_FALSE(inv.summary().empty());
  };
  using Recs = std::vector<IterationRecord>;
  expect(InvariantKind::ReductionChain, [](Recs& r) { r[1].dl_rho_next = -1.0; });
  expect(InvariantKind::PenaltyMonotone, [](Recs& r) { r[2].rho = 2.0 * r[1].rho; });
  expect(InvariantKind::PenaltyMonotone, [](Recs& r) { r[0].rho_after_update = 0.0; });
  expect(InvariantKind::MultiplierBoxes, [](Recs& r) { r[1].tr_y_bar = 1.1; });
  expect(InvariantKind::MultiplierBoxes, [](Recs& r) { r[1].mu_bar_inf = 1.5; });
  expect(InvariantKind::MultiplierBoxes, [](Recs& r) { r[0].lmin_y_hat = -1e-3; });
  expect(InvariantKind::ShiftedPenalty, [](Recs& r) { r.back().v += 10.0; });
  expect(InvariantKind::Armijo, [](Recs& r) { r[2].x = r[1].x + VectorXd::Constant(3, 50.0); });
  expect(InvariantKind::SubproblemAccuracy, [](Recs& r) { r[1].fea_kkt = 1e-3; });
  expect(InvariantKind::SubproblemAccuracy, [](Recs& r) { r[1].dir_kkt = 1e-3; });
  expect(InvariantKind::DirectionOrdering, [](Recs& r) { r[1].lv_d = r[1].lv_dfea + 1.0; });
  expect(InvariantKind::ModelSpectrum, [](Recs& r) { r[1].b_eig_max = 1e9; });
  expect(InvariantKind::ModelSpectrum, [](Recs& r) { r[1].b_eig_min = 1e-10; });

  SUBCASE("a relaxed direction subproblem is allowed its margin") {
    SolveReport r = clean;
    r.records[1].lv_d = r.records[1].lv_dfea + 5e-6;
    CHECK_FALSE(check_invariants(*p, r).ok(InvariantKind::DirectionOrdering));
    r.records[1].dir_margin = 1e-5;
    CHECK(check_invariants(*p, r).ok(InvariantKind::DirectionOrdering));
  }
}

TEST_CASE("kind names") {
  for (auto k : {InvariantKind::ReductionChain, InvariantKind::PenaltyMonotone,
                 InvariantKind::MultiplierBoxes, InvariantKind::ShiftedPenalty, InvariantKind::Armijo,
                 InvariantKind::SubproblemAccuracy, InvariantKind::DirectionOrdering,
                 InvariantKind::ModelSpectrum}) {
    CHECK(to_string(k) != "?");
  }
}
