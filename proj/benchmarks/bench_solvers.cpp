#include "datamkt/game.hpp"
#include "datamkt/mechanism.hpp"
#include "datamkt/rng.hpp"
#include "datamkt/welfare.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace datamkt;

GaussianMarket random_market(int n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd a(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) a(r, c) = rng.normal();
  }
  Eigen::MatrixXd sigma = a * a.transpose();
  const Eigen::VectorXd d = sigma.diagonal().cwiseSqrt();
  sigma = (sigma.array() / (d * d.transpose()).array()).matrix();
  return GaussianMarket(sigma);
}

GaussianMarket two_community_market(int half, double within, double cross) {
  const int n = 2 * half;
  Eigen::MatrixXd sigma(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        sigma(i, j) = 1.0;
      } else if ((i < half) == (j < half)) {
        sigma(i, j) = within;
      } else {
        sigma(i, j) = cross;
      }
    }
  }
  return GaussianMarket(sigma);
}

void BM_BreachedInformationAll(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GaussianMarket market = random_market(n, 1);
  const ActionProfile a = ActionProfile::all_ones(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(breached_information_all(market, a));
  }
}
BENCHMARK(BM_BreachedInformationAll)->Arg(4)->Arg(8)->Arg(12)->Arg(16)->Arg(20);

void BM_LeakageTable(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GaussianMarket market = random_market(n, 2);
  for (auto _ : state) {
    const LeakageTable table(market);
    benchmark::DoNotOptimize(table.leakage(0, 0));
  }
}
BENCHMARK(BM_LeakageTable)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_StackelbergFullScan(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SplitMix64 rng(3);
  GaussianMarket market = random_market(n, 3);
  Eigen::VectorXd values(n);
  for (int i = 0; i < n; ++i) values(i) = rng.uniform(0.0, 2.0);
  const KnownValueInstance instance(std::move(market), std::move(values));
  for (auto _ : state) {
    benchmark::DoNotOptimize(stackelberg_equilibrium(instance, {SymmetryMode::Off, 1e-9}));
  }
}
BENCHMARK(BM_StackelbergFullScan)->Arg(8)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_StackelbergSymmetric(benchmark::State& state) {
  const int half = static_cast<int>(state.range(0));
  // cross < (1 + (half-1) * within) / half keeps the covariance PSD
  GaussianMarket market = two_community_market(half, 0.05, 0.05);
  Eigen::VectorXd values(2 * half);
  values.head(half).setConstant(0.9);
  values.tail(half).setConstant(3.0);
  const KnownValueInstance instance(std::move(market), std::move(values));
  for (auto _ : state) {
    benchmark::DoNotOptimize(stackelberg_equilibrium(instance, {SymmetryMode::On, 1e-9}));
  }
}
BENCHMARK(BM_StackelbergSymmetric)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_EnumerateEquilibria(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SplitMix64 rng(4);
  GaussianMarket market = random_market(n, 4);
  Eigen::VectorXd values(n);
  for (int i = 0; i < n; ++i) values(i) = rng.uniform(0.0, 2.0);
  const KnownValueInstance instance(std::move(market), std::move(values));
  const PriceVector p = PriceVector::constant(n, 0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(enumerate_user_equilibria(instance, p));
  }
}
BENCHMARK(BM_EnumerateEquilibria)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_MechanismPayment(benchmark::State& state) {
  const GaussianMarket market = random_market(3, 5);
  const BayesianInstance instance(market, {ValueDistribution::uniform(0.0, 2.0),
                                           ValueDistribution::uniform(0.0, 2.0),
                                           ValueDistribution::uniform(0.0, 2.0)});
  Eigen::VectorXd reports(3);
  reports << 0.4, 1.1, 0.7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bayesian_payment(instance, reports, 0));
  }
}
BENCHMARK(BM_MechanismPayment)->Unit(benchmark::kMillisecond);

void BM_ExpectedPayoffMonteCarlo(benchmark::State& state) {
  const GaussianMarket market = random_market(3, 6);
  const BayesianInstance instance(market, {ValueDistribution::uniform(0.0, 2.0),
                                           ValueDistribution::uniform(0.0, 2.0),
                                           ValueDistribution::uniform(0.0, 2.0)});
  for (auto _ : state) {
    benchmark::DoNotOptimize(expected_platform_payoff(instance, state.range(0), 99));
  }
}
BENCHMARK(BM_ExpectedPayoffMonteCarlo)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
