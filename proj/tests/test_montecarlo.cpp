// Slower distributional invariants at the scales they are stated for.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cmc/experiments.hpp"
#include "cmc/io.hpp"
#include "cmc/stats.hpp"

using namespace cmc;

#ifndef CMC_CONFIG_DIR
#error "CMC_CONFIG_DIR must point at the configs directory"
#endif

namespace {

const std::filesystem::path kConfigDir = CMC_CONFIG_DIR;

TransitionModel referenceChain() {
  return io::modelFromJson(io::readTextFile(kConfigDir / "reference_chain.json"));
}

std::shared_ptr<LoggingPolicy> referenceLogging() {
  return io::loggingPolicyFromJson(io::readTextFile(kConfigDir / "reference_logging.json"));
}

}  // namespace

TEST_CASE("per-pair GOF statistics are chi-square distributed and nearly uncorrelated") {
  const auto model = referenceChain();
  const auto policy = referenceLogging();
  const std::int64_t n = 50000;
  const int reps = 2000;

  // statistics[pair][rep]
  std::vector<std::vector<double>> statistics(6, std::vector<double>(reps));
  const RandomStream root(314159);
  parallelFor(reps, 0, [&](std::int64_t rep) {
    const auto traj = simulate(model, *policy, n, uniformInitial(3),
                               root.sub(static_cast<std::uint64_t>(rep)));
    const auto gof = gofTest(count(traj, 3, 2), model, 0.05);
    REQUIRE(gof.perPair.size() == 6);
    for (std::size_t p = 0; p < 6; ++p)
      statistics[p][static_cast<std::size_t>(rep)] = gof.perPair[p].statistic;
  });

  // each pair statistic matches chi-square with d_(s,l)-1 = 2 dof
  for (std::size_t p = 0; p < 6; ++p)
    CHECK(ksDistanceChiSquare(statistics[p], 2) < 0.05);

  // asymptotic independence: small pairwise correlations
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = a + 1; b < 6; ++b)
      CHECK(std::abs(pearsonCorrelation(statistics[a], statistics[b])) < 0.05);
}

TEST_CASE("plug-in V converges and its error median shrinks with n") {
  const auto model = referenceChain();
  const auto policy = referenceLogging();
  const TargetPolicy target =
      io::targetPolicyFromJson(io::readTextFile(kConfigDir / "reference_target.json"));
  const RewardModel rewards =
      io::rewardsFromJson(io::readTextFile(kConfigDir / "reference_rewards.json"));
  const auto derived = expectedRewards(rewards, target, model);
  const Eigen::VectorXd vTrue = valueFunction(model, target, derived.g, rewards.discount);

  const int reps = 60;
  std::vector<double> medians;
  const RandomStream root(2718);
  int gridIndex = 0;
  for (std::int64_t n : {1000, 10000, 100000}) {
    std::vector<double> errors(reps);
    parallelFor(reps, 0, [&](std::int64_t rep) {
      const auto traj = simulate(model, *policy, n, uniformInitial(3),
                                 root.sub(static_cast<std::uint64_t>(gridIndex))
                                     .sub(static_cast<std::uint64_t>(rep)));
      const auto est = estimateKernel(count(traj, 3, 2));
      REQUIRE(est.fullyDefined());
      const auto vHat = valueFunction(est.asModel(), target, derived.g, rewards.discount);
      errors[static_cast<std::size_t>(rep)] = (vHat - vTrue).cwiseAbs().maxCoeff();
    });
    medians.push_back(quantile(errors, 0.5));
    ++gridIndex;
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}

TEST_CASE("pooled GOF test size sits near the nominal level") {
  ExperimentConfig config;
  config.kind = ExperimentKind::Gof;
  config.model = referenceChain();
  config.policy = referenceLogging();
  config.n = 50000;
  config.replications = 2000;
  config.seed = 424242;
  config.level = 0.05;
  const auto report = runGofStudy(config);
  CHECK(report.sizeEstimate >= 0.04);
  CHECK(report.sizeEstimate <= 0.06);
}
