#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmc/estimation.hpp"
#include "cmc/inference.hpp"
#include "cmc/model.hpp"
#include "cmc/policy.hpp"
#include "cmc/rl_eval.hpp"
#include "cmc/simulate.hpp"

namespace cmc {

enum class ExperimentKind { Clt, Gof, Rl, SamplingEquivalence, NoClt };

std::string experimentKindName(ExperimentKind kind);
ExperimentKind experimentKindFromName(const std::string& name);

/// Monte Carlo experiment description. Every runner is a pure function of
/// its config (seed included): reruns produce byte-identical reports.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Clt;
  TransitionModel model;
  std::shared_ptr<const LoggingPolicy> policy;
  std::int64_t n = 2;
  std::int64_t replications = 1;
  std::uint64_t seed = 0;
  double level = 0.95;
  std::optional<TargetPolicy> target;   // rl
  std::optional<RewardModel> rewards;   // rl
  std::vector<double> epsilons;         // gof power curve
  std::vector<std::int64_t> nGrid;      // no-clt horizon grid
  Eigen::VectorXd initial;              // empty -> uniform over states
  int threads = 0;                      // 0 -> hardware concurrency
};

void validateExperimentConfig(const ExperimentConfig& config);

/// Runs fn(0..count-1) on a small thread pool; replications own disjoint RNG
/// streams and write to per-index slots, so scheduling cannot change results.
void parallelFor(std::int64_t count, int threads, const std::function<void(std::int64_t)>& fn);

/// Properly and improperly scaled CLT diagnostics for the transition
/// estimator. Covariances are uncentered second moments (the errors have
/// asymptotic mean zero; with R = 1 this degrades gracefully to rank one).
struct CltReport {
  std::int64_t n = 0;
  std::int64_t replications = 0;
  std::uint64_t seed = 0;
  double level = 0.95;
  Eigen::MatrixXd lambda;          // asymptotic multinomial covariance
  Eigen::MatrixXd lambdaBar;       // theoretical improper scaling
  Eigen::MatrixXd empCovProper;    // mean of xi xi^T over fully-defined reps
  Eigen::MatrixXd empCovImproper;
  double maxAbsDevProper = 0.0;    // max |empCovProper - lambda|
  double maxAbsDevImproper = 0.0;
  double maxCrossBlockAbs = 0.0;   // max |empCovProper| off the (s,l) blocks
  Eigen::VectorXd ksDistance;      // per coordinate, xi / sd(lambda)
  Eigen::VectorXd coverage;        // per coordinate interval coverage
  Eigen::VectorXi coordinateSamples;  // reps with the row defined
  std::int64_t replicationsUsed = 0;
  std::int64_t excludedReplications = 0;  // some needed row undefined
  bool lowReplicationWarning = false;
  RowMatrixXd occupation;          // p used for lambdaBar
  bool occupationExact = false;    // true when computed from the pair chain
};

CltReport runCltExperiment(const ExperimentConfig& config);

/// Size and power of the pooled goodness-of-fit test. Power rows perturb one
/// kernel row (first entry +eps, second entry -eps) and test the data from
/// the perturbed chain against the original null.
struct GofStudyReport {
  std::int64_t n = 0;
  std::int64_t replications = 0;
  double level = 0.95;
  double sizeEstimate = 0.0;
  std::vector<std::pair<double, double>> powerCurve;  // (epsilon, rejection rate)
  int pooledDf = 0;
};

GofStudyReport runGofStudy(const ExperimentConfig& config);

/// Monte Carlo check of the V/Q/A CLTs for a stationary target policy: the
/// empirical covariance of sqrt(n)-scaled plug-in errors against the
/// theoretical bundle, plus the properly scaled Q comparison.
struct RlReport {
  std::int64_t n = 0;
  std::int64_t replications = 0;
  Eigen::MatrixXd sigmaV, sigmaQ, sigmaA, lambdaQ;
  Eigen::MatrixXd empCovV, empCovQ, empCovA, empCovQProper;
  double maxDevV = 0.0, maxDevQ = 0.0, maxDevA = 0.0, maxDevQProper = 0.0;
  double lambdaQIdentityError = 0.0;  // assembly vs direct entrywise formula
  Eigen::VectorXd vTrue, qTrue, aTrue;
  std::int64_t replicationsUsed = 0;
  std::int64_t excludedReplications = 0;
  RowMatrixXd occupation;
  bool occupationExact = false;
};

RlReport runRlExperiment(const ExperimentConfig& config);

/// Distributional equivalence of the direct and auxiliary samplers on a tiny
/// instance: path-frequency tables, a two-sample chi-square between them, and
/// one-sample chi-squares against the exactly enumerated path law.
struct SamplingEquivalenceReport {
  std::int64_t n = 0;
  std::int64_t samples = 0;
  std::vector<double> exactLaw;
  std::vector<std::int64_t> directTable;
  std::vector<std::int64_t> auxiliaryTable;
  double twoSampleStat = 0.0;
  int twoSampleDf = 0;
  double twoSampleP = 1.0;
  double exactVsAuxStat = 0.0;
  int exactVsAuxDf = 0;
  double exactVsAuxP = 1.0;
  double exactVsDirectStat = 0.0;
  int exactVsDirectDf = 0;
  double exactVsDirectP = 1.0;
};

SamplingEquivalenceReport runSamplingEquivalence(const ExperimentConfig& config);

/// Starvation demo: with a vanishing-action logging policy the starved pair's
/// estimation error does not shrink along the horizon grid while a covered
/// pair's error contracts at the CLT rate.
struct NoCltReport {
  std::vector<std::int64_t> grid;
  std::int64_t replications = 0;
  int starvedState = 0, starvedAction = 0;  // 1-based
  int coveredState = 0, coveredAction = 0;  // 1-based
  std::vector<double> starvedQ25, starvedQ50, starvedQ75;
  std::vector<double> coveredQ25, coveredQ50, coveredQ75;
  std::vector<std::int64_t> starvedExcluded;  // zero-visit reps per grid point
};

NoCltReport runNoCltDemo(const ExperimentConfig& config);

}  // namespace cmc
