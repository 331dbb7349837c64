#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include <json.hpp>

#include "cmc/io.hpp"
#include "schema_check.hpp"

using namespace cmc;
using nlohmann::json;

#ifndef CMC_CONFIG_DIR
#error "CMC_CONFIG_DIR must point at the configs directory"
#endif

namespace {

const std::filesystem::path kConfigDir = CMC_CONFIG_DIR;

json loadSchema(const std::string& name) {
  return json::parse(io::readTextFile(kConfigDir / "schemas" / name));
}

void checkAgainstSchema(const std::string& payload, const std::string& schemaName) {
  const auto errors = schema_check::validate(json::parse(payload), loadSchema(schemaName));
  for (const auto& e : errors) MESSAGE(e);
  CHECK(errors.empty());
}

}  // namespace

TEST_CASE("model JSON round trip preserves the kernel layout [l][s][t]") {
  const std::string text = io::readTextFile(kConfigDir / "reference_chain.json");
  const TransitionModel model = io::modelFromJson(text);
  CHECK(model.d == 3);
  CHECK(model.k == 2);
  CHECK(model.kernel[0](0, 0) == 0.5);
  CHECK(model.kernel[1](2, 1) == 0.7);
  const TransitionModel again = io::modelFromJson(io::toJson(model));
  for (int l = 0; l < 2; ++l) CHECK(again.kernel[static_cast<std::size_t>(l)]
                                        .isApprox(model.kernel[static_cast<std::size_t>(l)]));
  checkAgainstSchema(io::toJson(model), "model.schema.json");
}

TEST_CASE("invalid model JSON is rejected with exit-code-2 errors") {
  CHECK_THROWS_AS(io::modelFromJson("{"), InvalidInputError);
  CHECK_THROWS_AS(io::modelFromJson(R"({"d":2,"k":1})"), InvalidInputError);
  CHECK_THROWS_AS(io::modelFromJson(R"({"d":2,"k":1,"kernel":[[[0.5,0.6],[0.5,0.5]]]})"),
                  ValidationError);
}

TEST_CASE("target policy and rewards round trips") {
  const TargetPolicy pi = io::targetPolicyFromJson(
      io::readTextFile(kConfigDir / "reference_target.json"));
  CHECK(pi.pi(0, 0) == 0.7);
  const TargetPolicy again = io::targetPolicyFromJson(io::toJson(pi));
  CHECK(again.pi.isApprox(pi.pi));

  const RewardModel rewards = io::rewardsFromJson(
      io::readTextFile(kConfigDir / "reference_rewards.json"));
  CHECK(rewards.discount == 0.9);
  CHECK(rewards.gTilde(1, 1) == 2.0);
  // rTilde JSON order is [s][l][t]; internal storage is [l](s,t)
  CHECK(rewards.rTilde[1](0, 2) == 0.3);
  const RewardModel again2 = io::rewardsFromJson(io::toJson(rewards));
  CHECK(again2.gTilde.isApprox(rewards.gTilde));
  for (int l = 0; l < 2; ++l)
    CHECK(again2.rTilde[static_cast<std::size_t>(l)].isApprox(
        rewards.rTilde[static_cast<std::size_t>(l)]));
}

TEST_CASE("logging policy JSON round trips for all four kinds") {
  SUBCASE("stationary") {
    const auto policy = io::loggingPolicyFromJson(
        io::readTextFile(kConfigDir / "reference_logging.json"));
    CHECK(policy->kind() == "stationary_markov");
    const auto again = io::loggingPolicyFromJson(io::toJson(*policy));
    CHECK(again->actionDistributionVec(0, 1, {})(1) == doctest::Approx(0.7));
  }
  SUBCASE("deterministic cycle") {
    const auto policy = io::loggingPolicyFromJson(R"({"kind":"deterministic_cycle","k":3})");
    CHECK(policy->deterministic());
    const auto again = io::loggingPolicyFromJson(io::toJson(*policy));
    std::vector<StateAction> h{{0, 0}};
    CHECK(again->actionDistributionVec(1, 0, History(h.data(), 1))(1) == 1.0);
  }
  SUBCASE("vanishing") {
    const auto policy = io::loggingPolicyFromJson(
        io::readTextFile(kConfigDir / "vanishing_demo_policy.json"));
    const auto* vanishing = dynamic_cast<const VanishingActionPolicy*>(policy.get());
    REQUIRE(vanishing != nullptr);
    CHECK(vanishing->targetState() == 0);   // JSON target [1,2] is 1-based
    CHECK(vanishing->targetAction() == 1);
    const auto again = io::loggingPolicyFromJson(io::toJson(*policy));
    CHECK(again->kind() == "vanishing");
  }
  SUBCASE("nonstationary") {
    const std::string text = R"({"kind":"nonstationary_markov",
      "tables":[[[0.9,0.1],[0.2,0.8]],[[0.3,0.7],[0.6,0.4]]],"period":2})";
    const auto policy = io::loggingPolicyFromJson(text);
    CHECK(policy->kind() == "nonstationary_markov");
    const auto again = io::loggingPolicyFromJson(io::toJson(*policy));
    CHECK(again->actionDistributionVec(0, 0, {})(0) == 0.9);
  }
  SUBCASE("unknown kind") {
    CHECK_THROWS_AS(io::loggingPolicyFromJson(R"({"kind":"mystery"})"), InvalidInputError);
  }
}

TEST_CASE("trajectory CSV round trip uses 1-based states and a strict header") {
  Trajectory traj;
  traj.states = {0, 1, 2, 0};
  traj.actions = {1, 0, 1, 0};
  const std::string csv = io::toCsv(traj);
  CHECK(csv.find("step,state,action\n0,1,2\n") == 0);
  const Trajectory again = io::trajectoryFromCsv(csv);
  CHECK(again.states == traj.states);
  CHECK(again.actions == traj.actions);

  CHECK_THROWS_AS(io::trajectoryFromCsv("state,action\n1,1\n"), InvalidInputError);
  CHECK_THROWS_AS(io::trajectoryFromCsv("step,state,action\n0,1,1\n2,1,1\n"), InvalidInputError);
  CHECK_THROWS_AS(io::trajectoryFromCsv("step,state,action\n0,0,1\n1,1,1\n"), InvalidInputError);
}

TEST_CASE("report payloads validate against the shipped schemas") {
  // Build a small but fully populated set of artifacts.
  const TransitionModel model =
      io::modelFromJson(io::readTextFile(kConfigDir / "vanishing_demo_model.json"));
  RowMatrixXd table = RowMatrixXd::Constant(2, 2, 0.5);
  StationaryMarkovPolicy logging(2, table);
  const auto traj = simulate(model, logging, 4000, uniformInitial(2), RandomStream(5));
  const auto counts = count(traj, 2, 2);
  const auto est = estimateKernel(counts);
  checkAgainstSchema(io::toJson(est), "estimate.schema.json");

  const auto gof = gofTest(counts, model, 0.05);
  checkAgainstSchema(io::toJson(gof), "gof.schema.json");

  RewardModel rewards;
  rewards.gTilde = RowMatrixXd::Zero(2, 2);
  rewards.gTilde(0, 0) = 1.0;
  rewards.rTilde.assign(2, RowMatrixXd::Zero(2, 2));
  rewards.rTilde[0].row(0).setOnes();
  rewards.discount = 0.9;

  const auto optimal = optimalValueInterval(traj, 2, 2, rewards, 0.95);
  checkAgainstSchema(io::toJson(optimal), "optimal.schema.json");

  TargetPolicy target;
  target.pi = RowMatrixXd::Constant(2, 2, 0.5);
  io::EvalReport eval;
  eval.values = evaluatePolicy(est.asModel(), target, rewards);
  const auto lambdaBar = covarianceImproper(est.asModel(), est.pHat);
  eval.covariances = covarianceBundle(est.asModel(), target, eval.values.v, eval.values.q,
                                      lambdaBar, est.pHat, rewards.discount);
  eval.piOpt = optimal.piHatOpt;
  eval.horizon = counts.horizon;
  checkAgainstSchema(io::toJson(eval), "eval.schema.json");

  const auto mixing = computeMixingReport(model, logging, 4, MixingCaps{2, 1, 4},
                                          uniformInitial(2));
  checkAgainstSchema(io::toJson(mixing), "mixing.schema.json");
}

TEST_CASE("experiment configs parse with file references and validate") {
  const std::string text = io::readTextFile(kConfigDir / "experiment_sampling.json");
  const auto config = io::experimentConfigFromJson(text, kConfigDir);
  CHECK(config.kind == ExperimentKind::SamplingEquivalence);
  CHECK(config.n == 3);
  CHECK(config.replications == 1000000);
  CHECK(config.model.d == 2);
  CHECK(config.policy->kind() == "stationary_markov");

  CHECK_THROWS_AS(io::experimentConfigFromJson(R"({"kind":"clt"})", kConfigDir),
                  InvalidInputError);
  CHECK_THROWS_AS(
      io::experimentConfigFromJson(
          R"({"kind":"wrong","model":"reference_chain.json","policy":"reference_logging.json","n":10,"replications":1})",
          kConfigDir),
      ConfigError);
}

TEST_CASE("experiment reports validate against their schemas") {
  const std::filesystem::path dir = kConfigDir;
  // tiny fast runs
  auto config = io::experimentConfigFromJson(R"({
    "kind": "clt", "model": "vanishing_demo_model.json", "policy": "uniform_logging_2x2.json",
    "n": 500, "replications": 40, "seed": 3, "level": 0.95})",
                                             dir);
  checkAgainstSchema(io::toJson(runCltExperiment(config)), "clt_report.schema.json");

  config = io::experimentConfigFromJson(R"({
    "kind": "gof", "model": "vanishing_demo_model.json", "policy": "uniform_logging_2x2.json",
    "n": 500, "replications": 40, "seed": 3, "level": 0.05, "epsilons": [0.05]})",
                                        dir);
  checkAgainstSchema(io::toJson(runGofStudy(config)), "gof_report.schema.json");

  // target/reward dimensions are validated against the model
  CHECK_THROWS_AS(io::experimentConfigFromJson(R"({
    "kind": "rl", "model": "stay_swap_model.json", "policy": "uniform_logging_2x2.json",
    "target": "reference_target.json", "rewards": "stay_swap_rewards.json",
    "n": 500, "replications": 40, "seed": 3})",
                                               dir),
                  ConfigError);
  config = io::experimentConfigFromJson(R"({
    "kind": "rl", "model": "stay_swap_model.json", "policy": "uniform_logging_2x2.json",
    "target": {"pi": [[0.5, 0.5], [0.4, 0.6]]}, "rewards": "stay_swap_rewards.json",
    "n": 500, "replications": 40, "seed": 3})",
                                        dir);
  checkAgainstSchema(io::toJson(runRlExperiment(config)), "rl_report.schema.json");

  config = io::experimentConfigFromJson(R"({
    "kind": "sampling-equivalence", "model": "stay_swap_model.json",
    "policy": "uniform_logging_2x2.json", "n": 3, "replications": 5000, "seed": 3})",
                                        dir);
  checkAgainstSchema(io::toJson(runSamplingEquivalence(config)), "sampling_report.schema.json");

  config = io::experimentConfigFromJson(R"({
    "kind": "no-clt", "model": "vanishing_demo_model.json", "policy": "vanishing_demo_policy.json",
    "n": 4000, "replications": 60, "seed": 3, "nGrid": [500, 1500, 4000]})",
                                        dir);
  checkAgainstSchema(io::toJson(runNoCltDemo(config)), "noclt_report.schema.json");
}
