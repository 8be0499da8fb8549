#include <random>

#include <benchmark/benchmark.h>

#include <nsdp/problems.hpp>
#include <nsdp/sqp.hpp>
#include <nsdp/symmat.hpp>

#include "tiny_qp.hpp"

using namespace nsdp;

namespace {

SymMatrix random_sym(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return SymMatrix::from_dense(0.5 * (a + a.transpose()));
}

void BM_SymEigen(benchmark::State& st) {
  std::mt19937_64 rng(7);
  const SymMatrix a = random_sym(static_cast<std::size_t>(st.range(0)), rng);
  for (auto _ : st) benchmark::DoNotOptimize(sym_eigen(a));
}
BENCHMARK(BM_SymEigen)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_ProjectNeg(benchmark::State& st) {
  std::mt19937_64 rng(7);
  const SymMatrix a = random_sym(static_cast<std::size_t>(st.range(0)), rng);
  for (auto _ : st) benchmark::DoNotOptimize(project_neg(a));
}
BENCHMARK(BM_ProjectNeg)->Arg(4)->Arg(16);

void BM_ConicQP(benchmark::State& st) {
  std::mt19937_64 rng(20240611);
  std::vector<testing::TinyQP> qps;
  for (int i = 0; i < 32; ++i) qps.push_back(testing::random_tiny_qp(rng));
  std::size_t i = 0;
  for (auto _ : st) benchmark::DoNotOptimize(solve_conic_qp(qps[i++ % qps.size()].qp));
}
BENCHMARK(BM_ConicQP);

void BM_Solve(benchmark::State& st, const char* name) {
  auto p = make_problem(name);
  const auto x0 = p->initial_points().front();
  for (auto _ : st) benchmark::DoNotOptimize(solve(*p, x0));
}
BENCHMARK_CAPTURE(BM_Solve, isolated, "isolated")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Solve, counterexample, "counterexample")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Solve, standard, "standard")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Solve, rosen_suzuki, "rosen-suzuki")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Solve, hock_schittkowski, "hock-schittkowski")->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
