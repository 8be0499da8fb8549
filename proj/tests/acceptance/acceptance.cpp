// One PASS/FAIL line per acceptance criterion. `--only N` runs a single one;
// the exit status is 0 iff every criterion that ran passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <nsdp/invariants.hpp>
#include <nsdp/problems.hpp>

#include "tiny_qp.hpp"

using namespace nsdp;
using Eigen::VectorXd;

namespace {

// ---- pinned tolerances
constexpr double kIsoX = 1e-3, kIsoV = 1e-3, kIsoF = 1e-3, kIsoTime = 1.0;
constexpr double kNaX = 1e-3, kNaV = 1e-3, kNaF = 1e-3;
constexpr double kCeV = 1e-4, kCeX = 5e-3, kCeF = 5e-3;
constexpr double kStV = 1e-4, kStFLo = 0.999, kStFHi = 1.01, kStX = 2e-2;
constexpr double kRsV = 1e-3, kRsF = 1e-2, kRsF0 = -44.0;
constexpr int kRsMinPass = 10;
constexpr double kHsV = 1e-3, kHsF = 5e-2, kHsF0 = 89.238;
constexpr int kHsMinPass = 3;
constexpr double kChain = 1e-7, kBox = 1e-7, kPsd = 1e-8, kPhi = 1e-8, kSubKkt = 1e-7;
constexpr double kArmijoRel = 1e-12;
constexpr int kOracleCases = 60;
constexpr double kOracleTol = 1e-4, kOracleTime = 30.0;
constexpr int kEigenChecks = 1000;
constexpr double kDerivTol = 1e-6;

struct Outcome {
  bool pass = true;
  std::string detail;
};

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::string xs(const VectorXd& x) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) s += fmt::format("{}{:.4f}", i ? "," : "", x(i));
  return s + ")";
}

bool clean(TerminationClass tc) {
  return tc != TerminationClass::MaxIter && tc != TerminationClass::NumericalFailure;
}

SolveReport run(std::string_view name, const VectorXd& x0) {
  auto p = make_problem(name);
  return solve(*p, x0);
}

// every listed case, solved once and shared by the property criteria
struct SuiteRun {
  Case c;
  SolveReport report;
  InvariantReport inv;
};

const std::vector<SuiteRun>& suite() {
  static const std::vector<SuiteRun> runs = [] {
    InvariantTolerances tol;
    tol.chain = kChain;
    tol.multiplier_box = kBox;
    tol.psd = kPsd;
    tol.shifted_penalty = kPhi;
    tol.armijo = kArmijoRel;
    tol.subproblem_kkt = kSubKkt;
    std::vector<SuiteRun> out;
    for (auto& c : list_cases()) {
      auto p = make_problem(c.problem);
      SolveReport r = solve(*p, c.x0);
      InvariantReport inv = check_invariants(*p, r, tol);
      out.push_back({std::move(c), std::move(r), std::move(inv)});
    }
    return out;
  }();
  return runs;
}

Outcome property(std::initializer_list<InvariantKind> kinds) {
  Outcome o;
  int iters = 0, relaxed = 0;
  std::string first;
  for (const auto& s : suite()) {
    iters += static_cast<int>(s.report.records.size());
    for (const auto& r : s.report.records) relaxed += r.dir_margin > 0.0;
    for (const auto& [kind, v] : s.inv.violations) {
      if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) continue;
      if (o.pass) first = fmt::format("{} k={} {}", s.c.label(), v.k, v.what);
      o.pass = false;
    }
  }
  o.detail = fmt::format("{} cases, {} iterations", suite().size(), iters);
  if (relaxed) o.detail += fmt::format(", {} with a relaxed direction subproblem", relaxed);
  if (!o.pass) o.detail += "; first violation: " + first;
  return o;
}

// ---- criteria

Outcome c1() {
  const SolveReport r = run("isolated", vec({3, 2}));
  Outcome o;
  o.pass = is_infeasible_stationary(r.termination) && r.final_x.norm() <= kIsoX &&
           std::abs(r.final_v - 1.0) <= kIsoV && std::abs(r.final_f) <= kIsoF &&
           r.wall_time < kIsoTime;
  o.detail = fmt::format("isolated: {} x*={} v*={:.6f} f*={:.2e} in {:.3f}s", to_string(r.termination),
                         xs(r.final_x), r.final_v, r.final_f, r.wall_time);
  return o;
}

Outcome c2() {
  const SolveReport r = run("nactive", vec({-20, 10}));
  Outcome o;
  o.pass = is_infeasible_stationary(r.termination) && std::abs(r.final_x(0) + 1.0 / 3.0) <= kNaX &&
           std::abs(r.final_x(1)) <= kNaX && std::abs(r.final_v - 0.3333) <= kNaV &&
           std::abs(r.final_f + 0.3333) <= kNaF;
  o.detail = fmt::format("nactive: {} x*={} v*={:.6f} f*={:.6f}", to_string(r.termination), xs(r.final_x),
                         r.final_v, r.final_f);
  return o;
}

Outcome c3() {
  const SolveReport r = run("counterexample", vec({-4, 1, 1}));
  Outcome o;
  o.pass = r.final_v < kCeV && (r.final_x - vec({2, 3, 0})).norm() <= kCeX &&
           std::abs(r.final_f - 2.0) <= kCeF;
  o.detail = fmt::format("counterexample: {} x*={} v*={:.2e} f*={:.6f}", to_string(r.termination),
                         xs(r.final_x), r.final_v, r.final_f);
  return o;
}

Outcome c4() {
  const SolveReport r = run("standard", vec({-2, -2}));
  Outcome o;
  o.pass = r.final_v < kStV && r.final_f >= kStFLo && r.final_f <= kStFHi &&
           (r.final_x - vec({1, 0})).norm() <= kStX;
  o.detail = fmt::format("standard: {} x*={} v*={:.2e} f*={:.6f}", to_string(r.termination), xs(r.final_x),
                         r.final_v, r.final_f);
  return o;
}

Outcome c5() {
  int kkt_starts = 0, good = 0, unclean = 0;
  std::string bad, soft;
  for (const auto& s : suite()) {
    if (s.c.problem != "rosen-suzuki") continue;
    const auto& r = s.report;
    const double a = s.c.x0(0);
    if (std::abs(a) == 1.0) {
      soft += fmt::format(" {}:{}/v={:.2e}", a, to_string(r.termination), r.final_v);
      continue;
    }
    ++kkt_starts;
    const bool ok = r.final_v < kRsV && std::abs(r.final_f - kRsF0) <= kRsF;
    good += ok;
    if (!clean(r.termination)) ++unclean;
    if (!ok) bad += fmt::format(" {}:{}/v={:.2e}/f={:.4f}", a, to_string(r.termination), r.final_v, r.final_f);
  }
  Outcome o;
  o.pass = good >= kRsMinPass && unclean == 0;
  o.detail = fmt::format("rosen-suzuki: {}/{} starts reach f*=-44 (need {}), {} unclean; misses:{}; soft ±1:{}",
                         good, kkt_starts, kRsMinPass, unclean, bad.empty() ? " none" : bad, soft);
  return o;
}

Outcome c6() {
  int good = 0, total = 0;
  std::string all;
  for (const auto& s : suite()) {
    if (s.c.problem != "hock-schittkowski") continue;
    const auto& r = s.report;
    ++total;
    const bool ok = r.final_v < kHsV && std::abs(r.final_f - kHsF0) <= kHsF;
    good += ok;
    all += fmt::format(" {}:{}/f={:.4f}{}", s.c.x0(0), to_string(r.termination), r.final_f, ok ? "" : "*");
  }
  Outcome o;
  o.pass = good >= kHsMinPass;
  o.detail = fmt::format("hock-schittkowski: {}/{} starts reach f*=89.238 (need {});{}", good, total,
                         kHsMinPass, all);
  return o;
}

Outcome c7() { return property({InvariantKind::ReductionChain}); }
Outcome c8() { return property({InvariantKind::PenaltyMonotone, InvariantKind::MultiplierBoxes}); }
Outcome c9() { return property({InvariantKind::ShiftedPenalty}); }
Outcome c10() { return property({InvariantKind::Armijo, InvariantKind::SubproblemAccuracy}); }

Outcome c11() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240611);
  int agree = 0;
  double worst = 0.0;
  for (int i = 0; i < kOracleCases; ++i) {
    const auto t = testing::random_tiny_qp(rng);
    const ConicSolution s = solve_conic_qp(t.qp);
    const auto ref = testing::grid_reference(t);
    const double gap = std::abs(t.qp.objective(s.z) - ref.value);
    worst = std::max(worst, gap);
    agree += s.status == ConicStatus::Optimal && gap <= kOracleTol;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Outcome o;
  o.pass = agree == kOracleCases && secs < kOracleTime;
  o.detail = fmt::format("{}/{} random QPs within {:.0e} (worst {:.2e}) in {:.2f}s", agree, kOracleCases,
                         kOracleTol, worst, secs);
  return o;
}

Outcome c12() {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  int bad_eig = 0, bad_proj = 0;
  for (int rep = 0; rep < kEigenChecks; ++rep) {
    const std::size_t m = 1 + static_cast<std::size_t>(rep % 8);
    SymMatrix a(m);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i <= j; ++i) a.at(i, j) = u(rng);
    const double fa = a.frobenius_norm();
    const SymEigen e = sym_eigen(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a.dense());
    VectorXd rv = ref.eigenvalues().reverse();
    const auto md = static_cast<Eigen::Index>(m);
    const bool eig_ok =
        (e.values - rv).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + fa) &&
        (e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(md, md)).norm() <= 1e-10 * double(m) &&
        (a.dense() - e.vectors * e.values.asDiagonal() * e.vectors.transpose()).norm() <= 1e-9 * (1.0 + fa);
    bad_eig += !eig_ok;
    const SymMatrix p = project_neg(a);
    const Eigen::MatrixXd pref =
        ref.eigenvectors() * ref.eigenvalues().cwiseMin(0.0).asDiagonal() * ref.eigenvectors().transpose();
    const bool proj_ok = (p.dense() - pref).norm() <= 1e-9 * (1.0 + fa) && lambda_max(p) <= 1e-10 &&
                         lambda_min(a - p) >= -1e-10 * (1.0 + fa) &&
                         std::abs(inner(p, a - p)) <= 1e-9 * (1.0 + inner(a, a));
    bad_proj += !proj_ok;
  }
  double worst = 0.0;
  int points = 0;
  for (const auto& n : problem_names()) {
    auto p = make_problem(n);
    for (const auto& x : p->initial_points()) {
      worst = std::max(worst, check_derivatives(*p, x, 1e-5).max_error());
      ++points;
    }
  }
  Outcome o;
  o.pass = bad_eig == 0 && bad_proj == 0 && worst <= kDerivTol;
  o.detail = fmt::format("{} eigen / {} projection failures in {} each; derivative error {:.2e} over {} points",
                         bad_eig, bad_proj, kEigenChecks, worst, points);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion (1-12)")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria{c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12};
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<std::size_t>(only) != i + 1) continue;
    const Outcome o = criteria[i]();
    all &= o.pass;
    std::printf("criterion %2zu %s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
