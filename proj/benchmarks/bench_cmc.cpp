#include <benchmark/benchmark.h>

#include "cmc/estimation.hpp"
#include "cmc/inference.hpp"
#include "cmc/mixing.hpp"
#include "cmc/rl_eval.hpp"
#include "cmc/simulate.hpp"

using namespace cmc;

namespace {

TransitionModel referenceChain() {
  TransitionModel m;
  m.d = 3;
  m.k = 2;
  RowMatrixXd k1(3, 3), k2(3, 3);
  k1 << 0.5, 0.3, 0.2, 0.1, 0.7, 0.2, 0.2, 0.1, 0.7;
  k2 << 0.1, 0.2, 0.7, 0.7, 0.2, 0.1, 0.2, 0.7, 0.1;
  m.kernel = {k1, k2};
  return m;
}

StationaryMarkovPolicy referenceLogging() {
  RowMatrixXd table(3, 2);
  table << 0.5, 0.5, 0.3, 0.7, 0.6, 0.4;
  return StationaryMarkovPolicy(3, table);
}

}  // namespace

static void BM_Simulate(benchmark::State& state) {
  const auto model = referenceChain();
  const auto policy = referenceLogging();
  const auto initial = uniformInitial(3);
  std::uint64_t rep = 0;
  for (auto _ : state) {
    const auto traj =
        simulate(model, policy, state.range(0), initial, RandomStream(1).sub(rep++));
    benchmark::DoNotOptimize(traj.states.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(10000)->Arg(50000);

static void BM_SimulateAuxiliary(benchmark::State& state) {
  const auto model = referenceChain();
  const auto policy = referenceLogging();
  const auto initial = uniformInitial(3);
  std::uint64_t rep = 0;
  for (auto _ : state) {
    const auto traj =
        simulateAuxiliary(model, policy, state.range(0), initial, RandomStream(1).sub(rep++));
    benchmark::DoNotOptimize(traj.states.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateAuxiliary)->Arg(10000);

static void BM_CountAndEstimate(benchmark::State& state) {
  const auto model = referenceChain();
  const auto policy = referenceLogging();
  const auto traj = simulate(model, policy, state.range(0), uniformInitial(3), RandomStream(7));
  for (auto _ : state) {
    const auto est = estimateKernel(count(traj, 3, 2));
    benchmark::DoNotOptimize(est.pHat.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CountAndEstimate)->Arg(50000);

static void BM_CovarianceBundle(benchmark::State& state) {
  const auto model = referenceChain();
  TargetPolicy target;
  target.pi = RowMatrixXd(3, 2);
  target.pi << 0.7, 0.3, 0.4, 0.6, 0.5, 0.5;
  RewardModel rewards;
  rewards.gTilde = RowMatrixXd::Constant(3, 2, 1.0);
  rewards.rTilde.assign(2, RowMatrixXd::Constant(3, 3, 0.5));
  rewards.discount = 0.9;
  const auto bundle = evaluatePolicy(model, target, rewards);
  const RowMatrixXd occupation = RowMatrixXd::Constant(3, 2, 1.0 / 6.0);
  const Eigen::MatrixXd lambdaBar = covarianceImproper(model, occupation);
  for (auto _ : state) {
    const auto cov =
        covarianceBundle(model, target, bundle.v, bundle.q, lambdaBar, occupation, 0.9);
    benchmark::DoNotOptimize(cov.sigmaA.data());
  }
}
BENCHMARK(BM_CovarianceBundle);

static void BM_PolicyIteration(benchmark::State& state) {
  const auto model = referenceChain();
  RewardModel rewards;
  rewards.gTilde = RowMatrixXd::Zero(3, 2);
  rewards.rTilde = {RowMatrixXd::Constant(3, 3, 1.0), RowMatrixXd::Constant(3, 3, -0.5)};
  rewards.rTilde[0](0, 0) = 3.0;
  rewards.discount = 0.9;
  for (auto _ : state) {
    const auto result = policyIteration(model, rewards, 0.9);
    benchmark::DoNotOptimize(result.vOpt.data());
  }
}
BENCHMARK(BM_PolicyIteration);

static void BM_ChiSquareSurvival(benchmark::State& state) {
  double x = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(chiSquareSurvival(x, 12));
    x += 0.1;
    if (x > 400.0) x = 0.5;
  }
}
BENCHMARK(BM_ChiSquareSurvival);

static void BM_EtaBarBruteForce(benchmark::State& state) {
  TransitionModel m;
  m.d = 2;
  m.k = 2;
  RowMatrixXd k1(2, 2), k2(2, 2);
  k1 << 0.7, 0.3, 0.4, 0.6;
  k2 << 0.4, 0.6, 0.8, 0.2;
  m.kernel = {k1, k2};
  StationaryMarkovPolicy policy(2, RowMatrixXd::Constant(2, 2, 0.5));
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(etaBarBruteForce(m, policy, n, 1, 2, uniformInitial(2)));
}
BENCHMARK(BM_EtaBarBruteForce)->Arg(5)->Arg(7);

BENCHMARK_MAIN();
