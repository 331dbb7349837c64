#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cmc/estimation.hpp"
#include "cmc/simulate.hpp"
#include "cmc/stats.hpp"

using namespace cmc;

namespace {

TransitionModel permutationModel() {
  TransitionModel m;
  m.d = 2;
  m.k = 1;
  RowMatrixXd swap(2, 2);
  swap << 0, 1, 1, 0;
  m.kernel = {swap};
  return m;
}

TransitionModel twoStateModel() {
  TransitionModel m;
  m.d = 2;
  m.k = 1;
  RowMatrixXd p(2, 2);
  p << 0.7, 0.3, 0.4, 0.6;
  m.kernel = {p};
  return m;
}

Eigen::VectorXd pointMass(int d, int s) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  v(s) = 1.0;
  return v;
}

}  // namespace

TEST_CASE("deterministic dynamics alternate states") {
  const auto model = permutationModel();
  DeterministicSequencePolicy policy(1, [](std::int64_t) { return 0; });
  const Trajectory traj = simulate(model, policy, 9, pointMass(2, 0), RandomStream(1));
  REQUIRE(traj.states.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(traj.states[static_cast<std::size_t>(i)] == i % 2);
}

TEST_CASE("identical seeds reproduce trajectories, different seeds differ") {
  const auto model = twoStateModel();
  RowMatrixXd table = RowMatrixXd::Ones(2, 1);
  StationaryMarkovPolicy policy(2, table);
  const auto a = simulate(model, policy, 500, uniformInitial(2), RandomStream(123));
  const auto b = simulate(model, policy, 500, uniformInitial(2), RandomStream(123));
  const auto c = simulate(model, policy, 500, uniformInitial(2), RandomStream(124));
  CHECK(a.states == b.states);
  CHECK(a.actions == b.actions);
  CHECK(a.states != c.states);
}

TEST_CASE("long horizons extend shorter ones exactly") {
  const auto model = twoStateModel();
  StationaryMarkovPolicy policy(2, RowMatrixXd::Ones(2, 1));
  const auto shortRun = simulate(model, policy, 100, uniformInitial(2), RandomStream(9));
  const auto longRun = simulate(model, policy, 1000, uniformInitial(2), RandomStream(9));
  for (std::size_t i = 0; i < shortRun.states.size(); ++i)
    CHECK(shortRun.states[i] == longRun.states[i]);
}

TEST_CASE("empirical transition frequencies approach the kernel") {
  const auto model = twoStateModel();
  StationaryMarkovPolicy policy(2, RowMatrixXd::Ones(2, 1));
  const auto traj = simulate(model, policy, 1000000, uniformInitial(2), RandomStream(5));
  const auto est = estimateKernel(count(traj, 2, 1));
  REQUIRE(est.fullyDefined());
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t)
      CHECK(std::abs(est.mHat[0](s, t) - model.kernel[0](s, t)) < 0.005);
}

TEST_CASE("auxiliary scheme equals direct simulation when nothing is random") {
  const auto model = permutationModel();
  DeterministicSequencePolicy policy(1, [](std::int64_t) { return 0; });
  const auto direct = simulate(model, policy, 50, pointMass(2, 0), RandomStream(3));
  const auto aux = simulateAuxiliary(model, policy, 50, pointMass(2, 0), RandomStream(3));
  CHECK(direct.states == aux.states);
  CHECK(direct.actions == aux.actions);
}

TEST_CASE("auxiliary scheme has the law of the chain (exact enumeration vs frequencies)") {
  // d=2, k=1, n=3: sixteen state paths; chi-square of auxiliary frequencies
  // against the exact path law.
  const auto model = twoStateModel();
  StationaryMarkovPolicy policy(2, RowMatrixXd::Ones(2, 1));
  const Eigen::VectorXd initial = uniformInitial(2);
  const int n = 3;

  std::vector<double> law(16, 0.0);
  for (int code = 0; code < 16; ++code) {
    int prev = code & 1;
    double p = initial(prev);
    for (int i = 1; i <= n; ++i) {
      const int next = (code >> i) & 1;
      p *= model.kernel[0](prev, next);
      prev = next;
    }
    law[static_cast<std::size_t>(code)] = p;
  }

  const int reps = 200000;
  std::vector<std::int64_t> table(16, 0);
  const RandomStream root(77);
  for (int rep = 0; rep < reps; ++rep) {
    const auto traj =
        simulateAuxiliary(model, policy, n, initial, root.sub(static_cast<std::uint64_t>(rep)));
    int code = 0;
    for (int i = 0; i <= n; ++i) code |= traj.states[static_cast<std::size_t>(i)] << i;
    table[static_cast<std::size_t>(code)]++;
  }

  double stat = 0.0;
  int cells = 0;
  for (int code = 0; code < 16; ++code) {
    if (law[static_cast<std::size_t>(code)] <= 0.0) continue;
    ++cells;
    const double expected = reps * law[static_cast<std::size_t>(code)];
    const double dev = static_cast<double>(table[static_cast<std::size_t>(code)]) - expected;
    stat += dev * dev / expected;
  }
  const double p = chiSquareSurvival(stat, cells - 1);
  CHECK(p > 0.001);
}

TEST_CASE("auxiliary consumption matches visit counts") {
  // The assertion lives inside simulateAuxiliary (debug builds); here we
  // check the observable contract: counts from the produced trajectory are
  // consistent sufficient statistics.
  const auto model = twoStateModel();
  StationaryMarkovPolicy policy(2, RowMatrixXd::Ones(2, 1));
  const auto traj = simulateAuxiliary(model, policy, 2000, uniformInitial(2), RandomStream(8));
  const auto counts = count(traj, 2, 1);
  CHECK(counts.visits.sum() == 2000);
  for (int s = 0; s < 2; ++s) CHECK(counts.transitions[0].row(s).sum() == counts.visits(s, 0));
}

TEST_CASE("return times read hits and gaps off the path") {
  Trajectory traj;
  traj.states = {0, 1, 0, 1, 0};
  traj.actions = {0, 0, 0, 0, 0};
  const auto rt = returnTimes(traj, 0, 0);
  REQUIRE(rt.gaps.size() == 2);
  CHECK(rt.gaps[0] == 2);
  CHECK(rt.gaps[1] == 2);

  const auto never = returnTimes(traj, 1, 1);
  CHECK(never.gaps.empty());
}

TEST_CASE("return gaps telescope to the last hit index") {
  const auto model = twoStateModel();
  StationaryMarkovPolicy policy(2, RowMatrixXd::Ones(2, 1));
  const auto traj = simulate(model, policy, 5000, uniformInitial(2), RandomStream(21));
  const auto rt = returnTimes(traj, 0, 0);
  REQUIRE(!rt.gaps.empty());
  std::int64_t sum = 0;
  for (auto g : rt.gaps) sum += g;
  std::int64_t lastHit = 0;
  for (std::int64_t i = 1; i < static_cast<std::int64_t>(traj.states.size()); ++i)
    if (traj.states[static_cast<std::size_t>(i)] == 0 &&
        traj.actions[static_cast<std::size_t>(i)] == 0)
      lastHit = i;
  CHECK(sum == lastHit);
}

TEST_CASE("checkReturnGrowth requires enough replications") {
  std::vector<ReturnTimes> one(1);
  CHECK_THROWS_AS(checkReturnGrowth(one, 1.0, 0.5), DiagnosticError);
}

TEST_CASE("geometric return times have a flat exponent") {
  // i.i.d. uniform chain: identical kernel rows, uniform policy.
  TransitionModel m;
  m.d = 2;
  m.k = 2;
  RowMatrixXd row(2, 2);
  row << 0.5, 0.5, 0.5, 0.5;
  m.kernel = {row, row};
  RowMatrixXd table(2, 2);
  table << 0.5, 0.5, 0.5, 0.5;
  StationaryMarkovPolicy policy(2, table);

  std::vector<ReturnTimes> samples;
  const RandomStream root(31);
  for (int rep = 0; rep < 100; ++rep) {
    const auto traj =
        simulate(m, policy, 4000, uniformInitial(2), root.sub(static_cast<std::uint64_t>(rep)));
    samples.push_back(returnTimes(traj, 0, 0));
  }
  const auto report = checkReturnGrowth(samples, 8.0, 0.5);
  CHECK(std::abs(report.fittedExponent) < 0.1);
  CHECK(report.violationRate < 0.05);
}

TEST_CASE("a starved pair violates the sublinear growth bound") {
  // beta = 0.6 keeps returns observable while the mean gaps grow like
  // i^(beta/(1-beta)) = i^1.5, beating c * i^alpha for every alpha < 1.
  TransitionModel m;
  m.d = 2;
  m.k = 2;
  RowMatrixXd k1(2, 2), k2(2, 2);
  k1 << 0.7, 0.3, 0.4, 0.6;
  k2 << 0.4, 0.6, 0.8, 0.2;
  m.kernel = {k1, k2};
  RowMatrixXd base(2, 2);
  base << 0.5, 0.5, 0.5, 0.5;
  VanishingActionPolicy policy(2, base, 0, 1, 0.6);

  std::vector<ReturnTimes> samples;
  const RandomStream root(32);
  for (int rep = 0; rep < 100; ++rep) {
    const auto traj =
        simulate(m, policy, 20000, uniformInitial(2), root.sub(static_cast<std::uint64_t>(rep)));
    samples.push_back(returnTimes(traj, 0, 1));
  }
  const auto report = checkReturnGrowth(samples, 2.0, 0.5);
  CHECK(report.violationRate > 0.5);
  CHECK(report.fittedExponent > 0.8);
}

TEST_CASE("visit counts concentrate as the horizon grows") {
  // Median over replications of max_(s,l) |N/mean(N) - 1| shrinks with n.
  TransitionModel m;
  m.d = 2;
  m.k = 2;
  RowMatrixXd k1(2, 2), k2(2, 2);
  k1 << 0.7, 0.3, 0.4, 0.6;
  k2 << 0.4, 0.6, 0.8, 0.2;
  m.kernel = {k1, k2};
  RowMatrixXd table(2, 2);
  table << 0.5, 0.5, 0.5, 0.5;
  StationaryMarkovPolicy policy(2, table);

  const int reps = 100;
  std::vector<double> medians;
  const RandomStream root(33);
  int gridIndex = 0;
  for (std::int64_t n : {1000, 10000, 100000}) {
    std::vector<CountMatrix> visits;
    for (int rep = 0; rep < reps; ++rep) {
      const auto traj = simulate(m, policy, n, uniformInitial(2),
                                 root.sub(static_cast<std::uint64_t>(gridIndex))
                                     .sub(static_cast<std::uint64_t>(rep)));
      visits.push_back(count(traj, 2, 2).visits);
    }
    RowMatrixXd mean = RowMatrixXd::Zero(2, 2);
    for (const auto& v : visits) mean += v.cast<double>();
    mean /= static_cast<double>(reps);
    std::vector<double> deviations;
    for (const auto& v : visits) {
      double maxDev = 0.0;
      for (int s = 0; s < 2; ++s)
        for (int l = 0; l < 2; ++l)
          maxDev = std::max(maxDev, std::abs(v(s, l) / mean(s, l) - 1.0));
      deviations.push_back(maxDev);
    }
    medians.push_back(quantile(deviations, 0.5));
    ++gridIndex;
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}

TEST_CASE("simulation input validation") {
  const auto model = twoStateModel();
  StationaryMarkovPolicy policy(2, RowMatrixXd::Ones(2, 1));
  CHECK_THROWS_AS(simulate(model, policy, 0, uniformInitial(2), RandomStream(0)),
                  InvalidInputError);
  Eigen::VectorXd bad(2);
  bad << 0.5, 0.6;
  CHECK_THROWS_AS(simulate(model, policy, 10, bad, RandomStream(0)), InvalidInputError);
  RowMatrixXd table(2, 2);
  table << 0.5, 0.5, 0.5, 0.5;
  StationaryMarkovPolicy wrongK(2, table);
  CHECK_THROWS_AS(simulate(model, wrongK, 10, uniformInitial(2), RandomStream(0)), ConfigError);
}
