// Command-line front end: simulation, estimation, inference and the Monte
// Carlo experiment harness, all reading/writing the documented JSON/CSV
// formats. Exit codes: 0 success, 2 invalid input, 3 capacity exceeded,
// 4 inference impossible.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "cmc/experiments.hpp"
#include "cmc/io.hpp"
#include "cmc/mixing.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonPaths {
  std::string model, policy, traj, nullModel, target, rewards, config, out;
};

cmc::TransitionModel loadModel(const std::string& path) {
  return cmc::io::modelFromJson(cmc::io::readTextFile(path));
}

std::shared_ptr<cmc::LoggingPolicy> loadPolicy(const std::string& path) {
  return cmc::io::loggingPolicyFromJson(cmc::io::readTextFile(path));
}

cmc::Trajectory loadTrajectory(const std::string& path) {
  return cmc::io::trajectoryFromCsv(cmc::io::readTextFile(path));
}

int inferDimension(const cmc::Trajectory& traj, bool actions) {
  int maxValue = 0;
  const auto& v = actions ? traj.actions : traj.states;
  for (int x : v) maxValue = std::max(maxValue, x + 1);
  return maxValue;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-parametric estimation and asymptotic inference for finite controlled Markov chains"};
  app.require_subcommand(1);

  CommonPaths paths;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  double level = 0.95;
  int dOverride = 0, kOverride = 0;
  int horizon = 6;

  auto* simulateCmd = app.add_subcommand("simulate", "Sample a trajectory from a model and logging policy");
  simulateCmd->add_option("--model", paths.model, "model JSON")->required();
  simulateCmd->add_option("--policy", paths.policy, "logging policy JSON")->required();
  simulateCmd->add_option("-n,--horizon", n, "number of transitions")->required();
  simulateCmd->add_option("--seed", seed, "64-bit RNG seed");
  bool useAuxiliary = false;
  simulateCmd->add_flag("--aux", useAuxiliary, "use the auxiliary sampling scheme");
  simulateCmd->add_option("--out", paths.out, "output trajectory CSV")->required();

  auto* estimateCmd = app.add_subcommand("estimate", "Count-based kernel estimate from a trajectory");
  estimateCmd->add_option("--traj", paths.traj, "trajectory CSV")->required();
  estimateCmd->add_option("--states", dOverride, "state count (default: inferred)");
  estimateCmd->add_option("--actions", kOverride, "action count (default: inferred)");
  estimateCmd->add_option("--out", paths.out, "output estimate JSON")->required();

  auto* gofCmd = app.add_subcommand("gof", "Goodness-of-fit test against a null kernel");
  gofCmd->add_option("--traj", paths.traj, "trajectory CSV")->required();
  gofCmd->add_option("--null", paths.nullModel, "null model JSON")->required();
  gofCmd->add_option("--level", level, "test level");
  gofCmd->add_option("--out", paths.out, "output JSON")->required();

  auto* evalCmd = app.add_subcommand("eval", "Plug-in V/Q/A evaluation of a stationary target policy");
  evalCmd->add_option("--traj", paths.traj, "trajectory CSV")->required();
  evalCmd->add_option("--target", paths.target, "target policy JSON")->required();
  evalCmd->add_option("--rewards", paths.rewards, "rewards JSON")->required();
  evalCmd->add_option("--level", level, "interval level");
  evalCmd->add_option("--out", paths.out, "output JSON")->required();

  auto* optimalCmd = app.add_subcommand("optimal", "Optimal-policy value interval from logged data");
  optimalCmd->add_option("--traj", paths.traj, "trajectory CSV")->required();
  optimalCmd->add_option("--rewards", paths.rewards, "rewards JSON")->required();
  optimalCmd->add_option("--level", level, "interval level");
  optimalCmd->add_option("--out", paths.out, "output JSON")->required();

  auto* mixingCmd = app.add_subcommand("mixing", "Brute-force mixing coefficients on a tiny instance");
  mixingCmd->add_option("--model", paths.model, "model JSON")->required();
  mixingCmd->add_option("--policy", paths.policy, "logging policy JSON")->required();
  mixingCmd->add_option("--horizon", horizon, "enumeration horizon (<= 8)");
  mixingCmd->add_option("--out", paths.out, "output JSON")->required();

  auto* experimentCmd = app.add_subcommand("experiment", "Run a Monte Carlo experiment from a config");
  experimentCmd->add_option("--config", paths.config, "experiment config JSON")->required();
  experimentCmd->add_option("--out", paths.out, "output report JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulateCmd->parsed()) {
      const auto model = loadModel(paths.model);
      const auto policy = loadPolicy(paths.policy);
      const auto initial = cmc::uniformInitial(model.d);
      const cmc::Trajectory traj =
          useAuxiliary ? cmc::simulateAuxiliary(model, *policy, n, initial, cmc::RandomStream(seed))
                       : cmc::simulate(model, *policy, n, initial, cmc::RandomStream(seed));
      cmc::io::writeTextFile(paths.out, cmc::io::toCsv(traj));
    } else if (estimateCmd->parsed()) {
      const auto traj = loadTrajectory(paths.traj);
      const int d = dOverride > 0 ? dOverride : inferDimension(traj, false);
      const int k = kOverride > 0 ? kOverride : inferDimension(traj, true);
      const auto counts = cmc::count(traj, d, k);
      cmc::io::writeTextFile(paths.out, cmc::io::toJson(cmc::estimateKernel(counts)));
    } else if (gofCmd->parsed()) {
      const auto traj = loadTrajectory(paths.traj);
      const auto nullModel = loadModel(paths.nullModel);
      const auto counts = cmc::count(traj, nullModel.d, nullModel.k);
      cmc::io::writeTextFile(paths.out,
                             cmc::io::toJson(cmc::gofTest(counts, nullModel, level)));
    } else if (evalCmd->parsed()) {
      const auto traj = loadTrajectory(paths.traj);
      const auto target = cmc::io::targetPolicyFromJson(cmc::io::readTextFile(paths.target));
      const auto rewards = cmc::io::rewardsFromJson(cmc::io::readTextFile(paths.rewards));
      const int d = static_cast<int>(target.pi.rows());
      const int k = static_cast<int>(target.pi.cols());
      const auto counts = cmc::count(traj, d, k);
      const auto est = cmc::estimateKernel(counts);
      const auto mHat = est.asModel();
      cmc::io::EvalReport report;
      report.values = cmc::evaluatePolicy(mHat, target, rewards);
      const auto lambdaBar = cmc::covarianceImproper(mHat, est.pHat);
      report.covariances = cmc::covarianceBundle(mHat, target, report.values.v, report.values.q,
                                                 lambdaBar, est.pHat, rewards.discount);
      report.piOpt = cmc::policyIteration(mHat, rewards, rewards.discount).piOpt;
      report.horizon = counts.horizon;
      report.level = level;
      cmc::io::writeTextFile(paths.out, cmc::io::toJson(report));
    } else if (optimalCmd->parsed()) {
      const auto traj = loadTrajectory(paths.traj);
      const auto rewards = cmc::io::rewardsFromJson(cmc::io::readTextFile(paths.rewards));
      const int d = static_cast<int>(rewards.gTilde.rows());
      const int k = static_cast<int>(rewards.gTilde.cols());
      cmc::io::writeTextFile(
          paths.out, cmc::io::toJson(cmc::optimalValueInterval(traj, d, k, rewards, level)));
    } else if (mixingCmd->parsed()) {
      const auto model = loadModel(paths.model);
      const auto policy = loadPolicy(paths.policy);
      const cmc::MixingCaps caps{2, 2, std::min(horizon, 6)};
      const auto report = cmc::computeMixingReport(model, *policy, horizon, caps,
                                                   cmc::uniformInitial(model.d));
      cmc::io::writeTextFile(paths.out, cmc::io::toJson(report));
    } else if (experimentCmd->parsed()) {
      const fs::path configPath(paths.config);
      const auto config = cmc::io::experimentConfigFromJson(
          cmc::io::readTextFile(configPath), configPath.parent_path());
      std::string report;
      switch (config.kind) {
        case cmc::ExperimentKind::Clt:
          report = cmc::io::toJson(cmc::runCltExperiment(config));
          break;
        case cmc::ExperimentKind::Gof:
          report = cmc::io::toJson(cmc::runGofStudy(config));
          break;
        case cmc::ExperimentKind::Rl:
          report = cmc::io::toJson(cmc::runRlExperiment(config));
          break;
        case cmc::ExperimentKind::SamplingEquivalence:
          report = cmc::io::toJson(cmc::runSamplingEquivalence(config));
          break;
        case cmc::ExperimentKind::NoClt:
          report = cmc::io::toJson(cmc::runNoCltDemo(config));
          break;
      }
      cmc::io::writeTextFile(paths.out, report);
    }
  } catch (const cmc::CapacityError& e) {
    std::cerr << "capacity exceeded: " << e.what() << "\n";
    return 3;
  } catch (const cmc::InferenceImpossibleError& e) {
    std::cerr << "inference impossible: " << e.what() << "\n";
    return 4;
  } catch (const cmc::InvalidInputError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
