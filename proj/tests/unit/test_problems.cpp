#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <nsdp/problems.hpp>
#include <nsdp/sqp.hpp>

using namespace nsdp;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double v_at(std::string_view name, const VectorXd& x) {
  auto p = make_problem(name);
  return violation(evaluate(*p, x));
}

}  // namespace

TEST_CASE("registry") {
  const auto& names = problem_names();
  CHECK(names == std::vector<std::string>{"isolated", "nactive", "counterexample", "standard",
                                          "rosen-suzuki", "hock-schittkowski"});
  for (const auto& n : names) CHECK(make_problem(n)->name() == n);
  CHECK(make_problem("rosen-suzuki-literal")->num_vars() == 4);
  CHECK_THROWS_AS(make_problem("rosen"), std::invalid_argument);
  CHECK_THROWS_AS(make_problem(""), std::invalid_argument);
}

TEST_CASE("shapes") {
  using Dims = std::vector<std::size_t>;
  auto shape = [](std::string_view n) {
    auto p = make_problem(n);
    return std::tuple{p->num_vars(), p->num_equalities(), p->block_dims()};
  };
  CHECK(shape("isolated") == std::tuple{2u, 0u, Dims{2, 2, 2, 2}});
  CHECK(shape("nactive") == std::tuple{2u, 0u, Dims{2, 2, 1}});
  CHECK(shape("counterexample") == std::tuple{3u, 2u, Dims{2}});
  CHECK(shape("standard") == std::tuple{2u, 0u, Dims{3}});
  CHECK(shape("rosen-suzuki") == std::tuple{4u, 3u, Dims{4}});
  Dims hs{4};
  hs.insert(hs.end(), 10, 1);
  CHECK(shape("hock-schittkowski") == std::tuple{6u, 2u, hs});

  // every block is the order it advertises, at every start
  for (const auto& n : problem_names()) {
    auto p = make_problem(n);
    for (const auto& x : p->initial_points()) {
      const Evaluation e = evaluate(*p, x);
      CHECK(e.G.dims() == p->block_dims());
      CHECK(e.dG.size() == p->num_vars());
      CHECK(e.h.size() == static_cast<Eigen::Index>(p->num_equalities()));
    }
  }
}

TEST_CASE("values at listed points") {
  auto iso = make_problem("isolated");
  const Evaluation e = evaluate(*iso, vec({3, 2}));
  CHECK(e.f == 5.0);
  CHECK(violation(e) == doctest::Approx(4.7016).epsilon(1e-5));
  CHECK(violation(e) == doctest::Approx((3.0 + std::sqrt(41.0)) / 2.0).epsilon(1e-14));
  CHECK(v_at("counterexample", vec({-4, 1, 1})) == 21.0);
}

TEST_CASE("known solution points are feasible") {
  CHECK(v_at("counterexample", vec({2, 3, 0})) < 1e-8);
  CHECK(v_at("standard", vec({1, 0})) < 1e-8);
  CHECK(v_at("rosen-suzuki", vec({0, 1, 2, -1})) < 1e-8);
  auto rs = make_problem("rosen-suzuki");
  CHECK(evaluate(*rs, vec({0, 1, 2, -1})).f == doctest::Approx(-44.0));
  auto st = make_problem("standard");
  CHECK(evaluate(*st, vec({1, 0})).f == doctest::Approx(1.0));
  auto ce = make_problem("counterexample");
  CHECK(evaluate(*ce, vec({2, 3, 0})).f == doctest::Approx(2.0));
}

TEST_CASE("infeasible problems stay infeasible at their stationary points") {
  CHECK(v_at("isolated", vec({0, 0})) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(v_at("nactive", vec({-1.0 / 3.0, 0})) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // and nowhere feasible on a coarse grid
  for (double a = -3; a <= 3; a += 0.25)
    for (double b = -3; b <= 3; b += 0.25) {
      CHECK(v_at("isolated", vec({a, b})) >= 1.0 - 1e-12);
      CHECK(v_at("nactive", vec({a, b})) >= 1.0 / 3.0 - 1e-12);
    }
}

TEST_CASE("case list") {
  const auto cases = list_cases();
  CHECK(cases.size() == 24);
  std::map<std::string, int> per;
  for (const auto& c : cases) ++per[c.problem];
  CHECK(per["isolated"] == 1);
  CHECK(per["nactive"] == 1);
  CHECK(per["counterexample"] == 1);
  CHECK(per["standard"] == 1);
  CHECK(per["rosen-suzuki"] == 15);
  CHECK(per["hock-schittkowski"] == 5);

  auto find = [&](std::string_view label) {
    auto it = std::find_if(cases.begin(), cases.end(), [&](const Case& c) { return c.label() == label; });
    REQUIRE(it != cases.end());
    return *it;
  };
  CHECK(find("isolated@(3,2)").expected.hard);
  CHECK(find("nactive@(-20,10)").x0 == vec({-20, 10}));
  const Case rs0 = find("rosen-suzuki@(0,0,0,0)");
  CHECK_FALSE(rs0.expected.hard);
  REQUIRE(rs0.expected.f_star.has_value());
  CHECK(*rs0.expected.f_star == -44.0);
  const Case hs1 = find("hock-schittkowski@(1,1,1,1,1,1)");
  const double hs_f = hs1.expected.f_star ? *hs1.expected.f_star : hs1.expected.f_range->first;
  CHECK(hs_f == doctest::Approx(89.238).epsilon(1e-3));

  std::set<double> grid;
  for (const auto& c : cases)
    if (c.problem == "rosen-suzuki") grid.insert(c.x0(0));
  CHECK(grid == std::set<double>{-100, -10, -5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5, 10, 100});

  // every case starts from one of its problem's listed points
  for (const auto& c : cases) {
    const auto starts = make_problem(c.problem)->initial_points();
    CHECK(std::count(starts.begin(), starts.end(), c.x0) == 1);
    CHECK_FALSE(c.expected.classes.empty());
    CHECK_FALSE(c.expected.source.empty());
  }

  const auto quotas = group_quotas();
  for (const auto& q : quotas) {
    const auto n = std::count_if(cases.begin(), cases.end(), [&](const Case& c) { return c.expected.group == q.group; });
    CHECK(q.min_pass <= n);
    CHECK(q.min_pass > 0);
  }
}

TEST_CASE("outcome checks") {
  ExpectedOutcome ex;
  ex.classes = {TerminationClass::KKT};
  ex.x_star = vec({1, 2});
  ex.x_tol = 1e-3;
  ex.v_max = 1e-4;
  ex.f_star = 3.0;
  ex.f_tol = 1e-2;

  SolveReport r;
  r.termination = TerminationClass::KKT;
  r.final_x = vec({1.0005, 2});
  r.final_v = 1e-6;
  r.final_f = 3.005;
  CHECK(check_outcome(r, ex).pass);

  SolveReport wrong_class = r;
  wrong_class.termination = TerminationClass::MaxIter;
  CHECK_FALSE(check_outcome(wrong_class, ex).pass);

  SolveReport far = r;
  far.final_x(1) = 2.01;
  const CaseVerdict vf = check_outcome(far, ex);
  CHECK_FALSE(vf.pass);
  CHECK(vf.failures.size() == 1);

  SolveReport infeasible = r;
  infeasible.final_v = 1e-3;
  CHECK_FALSE(check_outcome(infeasible, ex).pass);

  ExpectedOutcome range = ex;
  range.f_star.reset();
  range.f_range = std::pair{2.9, 3.001};
  CHECK_FALSE(check_outcome(r, range).pass);
  range.f_range->second = 3.01;
  CHECK(check_outcome(r, range).pass);

  ExpectedOutcome box = ex;
  box.x_max_norm = true;
  box.x_tol = 6e-4;
  SolveReport diag = r;
  diag.final_x = vec({1.0005, 2.0005});  // Euclidean 7.1e-4, max 5e-4
  CHECK(check_outcome(diag, box).pass);
  box.x_max_norm = false;
  CHECK_FALSE(check_outcome(diag, box).pass);
}
