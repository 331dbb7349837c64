#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "cmc/experiments.hpp"
#include "cmc/inference.hpp"
#include "cmc/mixing.hpp"
#include "cmc/model.hpp"
#include "cmc/policy.hpp"
#include "cmc/rl_eval.hpp"
#include "cmc/simulate.hpp"

namespace cmc::io {

// External data model is 1-based wherever an (s,l,t) index appears as a
// value; array nesting orders follow the documented schemas
// (kernel [l][s][t], gTilde [s][l], rTilde [s][l][t], pi [s][l]).

std::string toJson(const TransitionModel& model);
TransitionModel modelFromJson(const std::string& text);

std::string toJson(const TargetPolicy& policy);
TargetPolicy targetPolicyFromJson(const std::string& text);

std::string toJson(const RewardModel& rewards);
RewardModel rewardsFromJson(const std::string& text);

std::string toJson(const LoggingPolicy& policy);
std::shared_ptr<LoggingPolicy> loggingPolicyFromJson(const std::string& text);

std::string toJson(const EstimatedModel& estimate);
std::string toJson(const GofResult& result);
std::string toJson(const IntervalTable& table);
std::string toJson(const OptimalValueReport& report);
std::string toJson(const MixingReport& report);

/// Offline evaluation report for a target policy, including the per-state /
/// per-pair plug-in intervals and the optimal policy of the estimated model.
struct EvalReport {
  ValueBundle values;
  CovarianceBundle covariances;
  TargetPolicy piOpt;
  std::int64_t horizon = 0;
  double level = 0.95;
};

std::string toJson(const EvalReport& report);

/// Experiment config JSON. "model", "policy", "target" and "rewards" may be
/// inline objects or file paths resolved relative to baseDir.
ExperimentConfig experimentConfigFromJson(const std::string& text,
                                          const std::filesystem::path& baseDir);

std::string toJson(const CltReport& report);
std::string toJson(const GofStudyReport& report);
std::string toJson(const RlReport& report);
std::string toJson(const SamplingEquivalenceReport& report);
std::string toJson(const NoCltReport& report);

/// Trajectory CSV: header "step,state,action", rows i=0..n with 1-based
/// states and actions.
std::string toCsv(const Trajectory& traj);
Trajectory trajectoryFromCsv(const std::string& text);

std::string readTextFile(const std::filesystem::path& path);
void writeTextFile(const std::filesystem::path& path, const std::string& content);

}  // namespace cmc::io
