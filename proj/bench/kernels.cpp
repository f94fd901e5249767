// Serial reference vs OpenMP kernel timings.
#include <random>

#include <benchmark/benchmark.h>

#include "drcc/cuts.hpp"
#include "drcc/eval.hpp"
#include "drcc/opf.hpp"
#include "drcc/stats.hpp"

using namespace drcc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

stats::SampleSet samples(Eigen::Index n, Eigen::Index l) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N(0.0, 10.0);
  MatrixXd d(n, l);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < l; ++j) d(i, j) = N(rng);
  return stats::SampleSet(d);
}

// Random ring network with wind at every fourth bus.
struct Grid {
  opf::NetworkCase net;
  MatrixXd ptdf;
  std::vector<cuts::AffineChanceConstraint> ccs;
  VectorXd x;
};

Grid grid(int buses) {
  Grid g;
  g.net.slack = 1;
  for (int b = 1; b <= buses; ++b) g.net.buses.push_back({b, 10.0});
  for (int b = 1; b <= buses; ++b) g.net.lines.push_back({b, b % buses + 1, 0.1, 200.0});
  for (int b = 1; b <= buses; b += 3) g.net.generators.push_back({b, 0.0, 100.0, 0.01, 10.0, 100.0});
  for (int b = 2; b <= buses; b += 4) g.net.wind.push_back({b, 5.0});
  g.ptdf = opf::build_ptdf(g.net);
  g.ccs = opf::extract_chance_constraints(g.net, g.ptdf);
  const opf::Layout L{g.net.gen_count()};
  g.x = VectorXd::Zero(L.size());
  for (Eigen::Index k = 0; k < L.ng; ++k) {
    g.x(L.pg(k)) = 10.0 * static_cast<double>(buses) / static_cast<double>(L.ng);
    g.x(L.rup(k)) = g.x(L.rdn(k)) = 5.0;
    g.x(L.dist(k)) = 1.0 / static_cast<double>(L.ng);
  }
  return g;
}

void BM_moments_serial(benchmark::State& st) {
  const auto s = samples(st.range(0), 16);
  for (auto _ : st) benchmark::DoNotOptimize(stats::estimate_moments_serial(s));
}
void BM_moments_omp(benchmark::State& st) {
  const auto s = samples(st.range(0), 16);
  for (auto _ : st) benchmark::DoNotOptimize(stats::estimate_moments(s));
}

void BM_reliability_serial(benchmark::State& st) {
  const auto g = grid(40);
  const auto s = samples(st.range(0), g.net.wind_count());
  for (auto _ : st) benchmark::DoNotOptimize(eval::reliability_serial(g.ccs, g.x, s));
}
void BM_reliability_omp(benchmark::State& st) {
  const auto g = grid(40);
  const auto s = samples(st.range(0), g.net.wind_count());
  for (auto _ : st) benchmark::DoNotOptimize(eval::reliability(g.ccs, g.x, s));
}

void BM_separation_serial(benchmark::State& st) {
  const auto g = grid(static_cast<int>(st.range(0)));
  const auto model = stats::UncertaintyModel::from_samples(samples(2000, g.net.wind_count()), 15, 1.0, 0.05);
  const MatrixXd L = cuts::lambda_factor(model);
  for (auto _ : st) benchmark::DoNotOptimize(cuts::separate_all_serial(g.ccs, model, L, g.x));
}
void BM_separation_omp(benchmark::State& st) {
  const auto g = grid(static_cast<int>(st.range(0)));
  const auto model = stats::UncertaintyModel::from_samples(samples(2000, g.net.wind_count()), 15, 1.0, 0.05);
  const MatrixXd L = cuts::lambda_factor(model);
  for (auto _ : st) benchmark::DoNotOptimize(cuts::separate_all(g.ccs, model, L, g.x));
}

}  // namespace

BENCHMARK(BM_moments_serial)->Arg(10000)->Arg(100000);
BENCHMARK(BM_moments_omp)->Arg(10000)->Arg(100000);
BENCHMARK(BM_reliability_serial)->Arg(10000);
BENCHMARK(BM_reliability_omp)->Arg(10000);
BENCHMARK(BM_separation_serial)->Arg(40)->Arg(120);
BENCHMARK(BM_separation_omp)->Arg(40)->Arg(120);

BENCHMARK_MAIN();
