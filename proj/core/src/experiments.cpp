#include "cmc/experiments.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "cmc/stats.hpp"

namespace cmc {

std::string experimentKindName(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Clt: return "clt";
    case ExperimentKind::Gof: return "gof";
    case ExperimentKind::Rl: return "rl";
    case ExperimentKind::SamplingEquivalence: return "sampling-equivalence";
    case ExperimentKind::NoClt: return "no-clt";
  }
  throw ConfigError("unknown experiment kind");
}

ExperimentKind experimentKindFromName(const std::string& name) {
  if (name == "clt") return ExperimentKind::Clt;
  if (name == "gof") return ExperimentKind::Gof;
  if (name == "rl") return ExperimentKind::Rl;
  if (name == "sampling-equivalence") return ExperimentKind::SamplingEquivalence;
  if (name == "no-clt") return ExperimentKind::NoClt;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

void validateExperimentConfig(const ExperimentConfig& config) {
  ensureValidModel(config.model);
  if (!config.policy) throw ConfigError("experiment: missing logging policy");
  if (config.policy->actionCount() != config.model.k)
    throw ConfigError("experiment: policy action count differs from the model");
  if (config.replications < 1) throw ConfigError("experiment: replications must be >= 1");
  if (config.n < 2) throw ConfigError("experiment: horizon n must be >= 2");
  if (!(config.level > 0.0 && config.level < 1.0))
    throw ConfigError("experiment: level must lie in (0,1)");
  if (config.initial.size() != 0 && config.initial.size() != config.model.d)
    throw ConfigError("experiment: initial distribution size mismatch");
  if (config.kind == ExperimentKind::Rl && (!config.target || !config.rewards))
    throw ConfigError("experiment: rl kind needs target policy and rewards");
  if (config.target &&
      (config.target->pi.rows() != config.model.d || config.target->pi.cols() != config.model.k))
    throw ConfigError("experiment: target policy dimensions differ from the model");
  if (config.rewards && (config.rewards->gTilde.rows() != config.model.d ||
                         config.rewards->gTilde.cols() != config.model.k))
    throw ConfigError("experiment: reward dimensions differ from the model");
}

void parallelFor(std::int64_t count, int threads, const std::function<void(std::int64_t)>& fn) {
  if (count <= 0) return;
  int t = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (t < 1) t = 1;
  t = static_cast<int>(std::min<std::int64_t>(t, count));
  if (t == 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::mutex errorMutex;
  std::exception_ptr error;
  auto worker = [&]() {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(errorMutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(t));
  for (int w = 0; w < t; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

Eigen::VectorXd resolveInitial(const ExperimentConfig& config) {
  if (config.initial.size() == 0) return uniformInitial(config.model.d);
  return config.initial;
}

/// Occupation measure for the improper scaling: exact via the pair chain for
/// stationary Markov logging, otherwise the across-replication mean of pHat.
std::pair<RowMatrixXd, bool> resolveOccupation(const ExperimentConfig& config,
                                               const std::vector<RowMatrixXd>& pHats) {
  if (const auto* stationary =
          dynamic_cast<const StationaryMarkovPolicy*>(config.policy.get())) {
    return {stationaryPairOccupation(config.model, stationary->table()), true};
  }
  RowMatrixXd mean = RowMatrixXd::Zero(config.model.d, config.model.k);
  for (const auto& p : pHats) mean += p;
  mean /= static_cast<double>(pHats.size());
  return {mean, false};
}

int blockOfTriple(const IndexMap& index, int flat0) { return flat0 / index.d; }

}  // namespace

CltReport runCltExperiment(const ExperimentConfig& config) {
  validateExperimentConfig(config);
  if (config.kind != ExperimentKind::Clt)
    throw ConfigError("runCltExperiment: config kind must be clt");
  const Eigen::VectorXd initial = resolveInitial(config);
  const IndexMap index{config.model.d, config.model.k};
  const int dim = index.tripleCount();
  const std::int64_t reps = config.replications;

  struct RepResult {
    Eigen::VectorXd xi, xiIs;
    std::vector<std::uint8_t> missing;
    RowMatrixXd pHat;
    std::vector<std::uint8_t> covered;  // per coordinate
    bool fullyDefined = false;
  };
  std::vector<RepResult> results(static_cast<std::size_t>(reps));

  const RandomStream root(config.seed);
  parallelFor(reps, config.threads, [&](std::int64_t rep) {
    const Trajectory traj = simulate(config.model, *config.policy, config.n, initial,
                                     root.sub(static_cast<std::uint64_t>(rep)));
    const Counts counts = count(traj, config.model.d, config.model.k);
    const EstimatedModel est = estimateKernel(counts);
    RepResult& out = results[static_cast<std::size_t>(rep)];
    ScaledError proper = scaledErrorProper(est, config.model, counts);
    ScaledError improper = scaledErrorImproper(est, config.model, config.n);
    out.xi = std::move(proper.xi);
    out.xiIs = std::move(improper.xi);
    out.missing = std::move(proper.missing);
    out.pHat = est.pHat;
    out.fullyDefined = est.fullyDefined();
    out.covered.assign(static_cast<std::size_t>(dim), 0);
    const IntervalTable intervals = transitionIntervals(counts, config.level);
    for (const auto& e : intervals.entries) {
      const double truth =
          config.model.kernel[static_cast<std::size_t>(e.action - 1)](e.state - 1, e.nextState - 1);
      if (e.lower <= truth && truth <= e.upper)
        out.covered[static_cast<std::size_t>(
            index.tripleOffset(e.state - 1, e.action - 1, e.nextState - 1))] = 1;
    }
  });

  CltReport report;
  report.n = config.n;
  report.replications = reps;
  report.seed = config.seed;
  report.level = config.level;
  report.lambda = covarianceProper(config.model);
  std::vector<RowMatrixXd> pHats;
  pHats.reserve(results.size());
  for (const auto& r : results) pHats.push_back(r.pHat);
  auto [occupation, exact] = resolveOccupation(config, pHats);
  report.occupation = occupation;
  report.occupationExact = exact;
  report.lambdaBar = covarianceImproper(config.model, occupation);
  report.lowReplicationWarning = reps < 30;

  report.empCovProper = Eigen::MatrixXd::Zero(dim, dim);
  report.empCovImproper = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& r : results) {
    if (!r.fullyDefined) {
      ++report.excludedReplications;
      continue;
    }
    ++report.replicationsUsed;
    report.empCovProper.noalias() += r.xi * r.xi.transpose();
    report.empCovImproper.noalias() += r.xiIs * r.xiIs.transpose();
  }
  if (report.replicationsUsed == 0)
    throw InferenceImpossibleError(
        "runCltExperiment: every replication hit an undefined kernel row");
  report.empCovProper /= static_cast<double>(report.replicationsUsed);
  report.empCovImproper /= static_cast<double>(report.replicationsUsed);

  report.maxAbsDevProper = (report.empCovProper - report.lambda).cwiseAbs().maxCoeff();
  report.maxAbsDevImproper = (report.empCovImproper - report.lambdaBar).cwiseAbs().maxCoeff();
  report.maxCrossBlockAbs = 0.0;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      if (blockOfTriple(index, a) != blockOfTriple(index, b))
        report.maxCrossBlockAbs =
            std::max(report.maxCrossBlockAbs, std::abs(report.empCovProper(a, b)));

  report.ksDistance = Eigen::VectorXd::Zero(dim);
  report.coverage = Eigen::VectorXd::Zero(dim);
  report.coordinateSamples = Eigen::VectorXi::Zero(dim);
  for (int c = 0; c < dim; ++c) {
    const double sd = std::sqrt(std::max(0.0, report.lambda(c, c)));
    std::vector<double> standardized;
    std::int64_t coveredCount = 0, total = 0;
    for (const auto& r : results) {
      if (r.missing[static_cast<std::size_t>(c)]) continue;
      ++total;
      if (r.covered[static_cast<std::size_t>(c)]) ++coveredCount;
      if (sd > 0.0) standardized.push_back(r.xi(c) / sd);
    }
    report.coordinateSamples(c) = static_cast<int>(total);
    report.coverage(c) = total > 0 ? static_cast<double>(coveredCount) / static_cast<double>(total)
                                   : 0.0;
    report.ksDistance(c) = standardized.empty() ? 0.0 : ksDistanceStandardNormal(standardized);
  }
  return report;
}

namespace {

TransitionModel perturbFirstRow(const TransitionModel& model, double epsilon) {
  TransitionModel out = model;
  if (model.d < 2) throw ConfigError("gof perturbation needs d >= 2");
  out.kernel[0](0, 0) += epsilon;
  out.kernel[0](0, 1) -= epsilon;
  const ValidationReport report = validateModel(out);
  if (!report.empty())
    throw ConfigError("gof perturbation epsilon = " + std::to_string(epsilon) +
                      " leaves the kernel invalid: " + report.front().message);
  return out;
}

}  // namespace

GofStudyReport runGofStudy(const ExperimentConfig& config) {
  validateExperimentConfig(config);
  if (config.kind != ExperimentKind::Gof)
    throw ConfigError("runGofStudy: config kind must be gof");
  const Eigen::VectorXd initial = resolveInitial(config);
  const std::int64_t reps = config.replications;

  GofStudyReport report;
  report.n = config.n;
  report.replications = reps;
  report.level = config.level;

  // Size under the null and the pooled df of a representative replication.
  {
    std::vector<std::uint8_t> reject(static_cast<std::size_t>(reps), 0);
    std::vector<int> dfs(static_cast<std::size_t>(reps), 0);
    const RandomStream root = RandomStream(config.seed).sub(0);
    parallelFor(reps, config.threads, [&](std::int64_t rep) {
      const Trajectory traj = simulate(config.model, *config.policy, config.n, initial,
                                       root.sub(static_cast<std::uint64_t>(rep)));
      const Counts counts = count(traj, config.model.d, config.model.k);
      const GofResult gof = gofTest(counts, config.model, config.level);
      reject[static_cast<std::size_t>(rep)] = gof.reject ? 1 : 0;
      dfs[static_cast<std::size_t>(rep)] = gof.pooledDf;
    });
    std::int64_t rejected = 0;
    for (auto r : reject) rejected += r;
    report.sizeEstimate = static_cast<double>(rejected) / static_cast<double>(reps);
    report.pooledDf = dfs.front();
  }

  // Power: data from the perturbed chain, tested against the original null.
  for (std::size_t e = 0; e < config.epsilons.size(); ++e) {
    const double epsilon = config.epsilons[e];
    const TransitionModel perturbed = perturbFirstRow(config.model, epsilon);
    std::vector<std::uint8_t> reject(static_cast<std::size_t>(reps), 0);
    const RandomStream root = RandomStream(config.seed).sub(1 + static_cast<std::uint64_t>(e));
    parallelFor(reps, config.threads, [&](std::int64_t rep) {
      const Trajectory traj = simulate(perturbed, *config.policy, config.n, initial,
                                       root.sub(static_cast<std::uint64_t>(rep)));
      const Counts counts = count(traj, config.model.d, config.model.k);
      const GofResult gof = gofTest(counts, config.model, config.level);
      reject[static_cast<std::size_t>(rep)] = gof.reject ? 1 : 0;
    });
    std::int64_t rejected = 0;
    for (auto r : reject) rejected += r;
    report.powerCurve.emplace_back(epsilon,
                                   static_cast<double>(rejected) / static_cast<double>(reps));
  }
  return report;
}

RlReport runRlExperiment(const ExperimentConfig& config) {
  validateExperimentConfig(config);
  if (config.kind != ExperimentKind::Rl)
    throw ConfigError("runRlExperiment: config kind must be rl");
  const Eigen::VectorXd initial = resolveInitial(config);
  const TargetPolicy& target = *config.target;
  const RewardModel& rewards = *config.rewards;
  const double discount = rewards.discount;
  const int d = config.model.d, k = config.model.k;
  const IndexMap index{d, k};
  const std::int64_t reps = config.replications;

  // Ground truth: the reward vectors g, r are known inputs here; only the
  // kernel is estimated per replication.
  const DerivedRewards derived = expectedRewards(rewards, target, config.model);
  const Eigen::VectorXd vTrue = valueFunction(config.model, target, derived.g, discount);
  const Eigen::VectorXd qTrue = qFunction(config.model, target, derived.r, discount);
  const Eigen::MatrixXd kMat = kMatrix(d, k);
  const Eigen::VectorXd aTrue = qTrue - kMat * vTrue;

  struct RepResult {
    Eigen::VectorXd devV, devQ, devA, devQProper;
    RowMatrixXd pHat;
    bool fullyDefined = false;
  };
  std::vector<RepResult> results(static_cast<std::size_t>(reps));
  const double sqrtN = std::sqrt(static_cast<double>(config.n));

  const RandomStream root(config.seed);
  parallelFor(reps, config.threads, [&](std::int64_t rep) {
    const Trajectory traj = simulate(config.model, *config.policy, config.n, initial,
                                     root.sub(static_cast<std::uint64_t>(rep)));
    const Counts counts = count(traj, d, k);
    const EstimatedModel est = estimateKernel(counts);
    RepResult& out = results[static_cast<std::size_t>(rep)];
    out.pHat = est.pHat;
    if (!est.fullyDefined()) return;
    out.fullyDefined = true;
    const TransitionModel mHat = est.asModel();
    const Eigen::VectorXd vHat = valueFunction(mHat, target, derived.g, discount);
    const Eigen::VectorXd qHat = qFunction(mHat, target, derived.r, discount);
    out.devV = sqrtN * (vHat - vTrue);
    out.devQ = sqrtN * (qHat - qTrue);
    out.devA = out.devQ - kMat * out.devV;
    out.devQProper = Eigen::VectorXd::Zero(d * k);
    for (int s = 0; s < d; ++s)
      for (int l = 0; l < k; ++l)
        out.devQProper(index.pairOffset(s, l)) =
            std::sqrt(static_cast<double>(counts.visits(s, l))) *
            (qHat(index.pairOffset(s, l)) - qTrue(index.pairOffset(s, l)));
  });

  RlReport report;
  report.n = config.n;
  report.replications = reps;
  report.vTrue = vTrue;
  report.qTrue = qTrue;
  report.aTrue = aTrue;

  std::vector<RowMatrixXd> pHats;
  pHats.reserve(results.size());
  for (const auto& r : results) pHats.push_back(r.pHat);
  auto [occupation, exact] = resolveOccupation(config, pHats);
  report.occupation = occupation;
  report.occupationExact = exact;

  const Eigen::MatrixXd lambdaBar = covarianceImproper(config.model, occupation);
  const CovarianceBundle bundle =
      covarianceBundle(config.model, target, vTrue, qTrue, lambdaBar, occupation, discount);
  report.sigmaV = bundle.sigmaV;
  report.sigmaQ = bundle.sigmaQ;
  report.sigmaA = bundle.sigmaA;
  report.lambdaQ = bundle.lambdaQ;

  // Direct entrywise formula of the properly scaled Q covariance, compared
  // against the assembled one.
  double identityError = 0.0;
  for (int p = 0; p < d * k; ++p)
    for (int p2 = 0; p2 < d * k; ++p2) {
      const auto [s, l] = index.pairInverse(p + 1);
      const auto [s2, l2] = index.pairInverse(p2 + 1);
      const double direct = std::sqrt(occupation(s - 1, l - 1) * occupation(s2 - 1, l2 - 1)) *
                            bundle.sigmaQ(p, p2);
      identityError = std::max(identityError, std::abs(direct - bundle.lambdaQ(p, p2)));
    }
  report.lambdaQIdentityError = identityError;

  report.empCovV = Eigen::MatrixXd::Zero(d, d);
  report.empCovQ = Eigen::MatrixXd::Zero(d * k, d * k);
  report.empCovA = Eigen::MatrixXd::Zero(d * k, d * k);
  report.empCovQProper = Eigen::MatrixXd::Zero(d * k, d * k);
  for (const auto& r : results) {
    if (!r.fullyDefined) {
      ++report.excludedReplications;
      continue;
    }
    ++report.replicationsUsed;
    report.empCovV.noalias() += r.devV * r.devV.transpose();
    report.empCovQ.noalias() += r.devQ * r.devQ.transpose();
    report.empCovA.noalias() += r.devA * r.devA.transpose();
    report.empCovQProper.noalias() += r.devQProper * r.devQProper.transpose();
  }
  if (report.replicationsUsed == 0)
    throw InferenceImpossibleError(
        "runRlExperiment: every replication hit an undefined kernel row");
  const double used = static_cast<double>(report.replicationsUsed);
  report.empCovV /= used;
  report.empCovQ /= used;
  report.empCovA /= used;
  report.empCovQProper /= used;

  report.maxDevV = (report.empCovV - report.sigmaV).cwiseAbs().maxCoeff();
  report.maxDevQ = (report.empCovQ - report.sigmaQ).cwiseAbs().maxCoeff();
  report.maxDevA = (report.empCovA - report.sigmaA).cwiseAbs().maxCoeff();
  report.maxDevQProper = (report.empCovQProper - report.lambdaQ).cwiseAbs().maxCoeff();
  return report;
}

namespace {

std::pair<double, int> chiSquareTwoSample(const std::vector<std::int64_t>& a,
                                          const std::vector<std::int64_t>& b) {
  double totalA = 0.0, totalB = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    totalA += static_cast<double>(a[c]);
    totalB += static_cast<double>(b[c]);
  }
  const double grand = totalA + totalB;
  double stat = 0.0;
  int usedCells = 0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double colTotal = static_cast<double>(a[c] + b[c]);
    if (colTotal == 0.0) continue;
    ++usedCells;
    const double ea = totalA * colTotal / grand;
    const double eb = totalB * colTotal / grand;
    const double da = static_cast<double>(a[c]) - ea;
    const double db = static_cast<double>(b[c]) - eb;
    stat += da * da / ea + db * db / eb;
  }
  return {stat, usedCells - 1};
}

std::pair<double, int> chiSquareAgainstLaw(const std::vector<std::int64_t>& table,
                                           const std::vector<double>& law, std::int64_t samples) {
  double stat = 0.0;
  int usedCells = 0;
  for (std::size_t c = 0; c < table.size(); ++c) {
    if (law[c] > 0.0) {
      ++usedCells;
      const double expected = static_cast<double>(samples) * law[c];
      const double dev = static_cast<double>(table[c]) - expected;
      stat += dev * dev / expected;
    } else if (table[c] > 0) {
      stat = std::numeric_limits<double>::infinity();
    }
  }
  return {stat, usedCells - 1};
}

double pValueOf(double stat, int df) {
  if (df <= 0) return stat <= 0.0 ? 1.0 : 0.0;
  if (std::isinf(stat)) return 0.0;
  return chiSquareSurvival(stat, df);
}

}  // namespace

SamplingEquivalenceReport runSamplingEquivalence(const ExperimentConfig& config) {
  validateExperimentConfig(config);
  if (config.kind != ExperimentKind::SamplingEquivalence)
    throw ConfigError("runSamplingEquivalence: config kind must be sampling-equivalence");
  if (config.model.d > 2 || config.model.k > 2 || config.n > 4)
    throw CapacityError("runSamplingEquivalence: requires d <= 2, k <= 2, n <= 4");
  const Eigen::VectorXd initial = resolveInitial(config);
  const IndexMap index{config.model.d, config.model.k};
  const int dk = index.pairCount();
  std::int64_t cells = 1;
  for (std::int64_t i = 0; i <= config.n; ++i) cells *= dk;

  SamplingEquivalenceReport report;
  report.n = config.n;
  report.samples = config.replications;

  // Exact path law by enumeration of the chain rule products.
  report.exactLaw.assign(static_cast<std::size_t>(cells), 0.0);
  {
    std::vector<StateAction> pairs;
    auto recurse = [&](auto&& self, double prob) -> void {
      const std::int64_t time = static_cast<std::int64_t>(pairs.size());
      if (time == config.n + 1) {
        std::int64_t code = 0;
        for (std::int64_t m = config.n; m >= 0; --m)
          code = code * dk + index.pairOffset(pairs[static_cast<std::size_t>(m)].state,
                                              pairs[static_cast<std::size_t>(m)].action);
        report.exactLaw[static_cast<std::size_t>(code)] += prob;
        return;
      }
      Eigen::VectorXd dist(config.model.k);  // per recursion level
      for (int x = 0; x < config.model.d; ++x) {
        const double pState =
            time == 0 ? initial(x)
                      : config.model.kernel[static_cast<std::size_t>(pairs.back().action)](
                            pairs.back().state, x);
        if (pState <= 0.0) continue;
        config.policy->actionDistribution(time, x, History(pairs.data(), pairs.size()), dist);
        for (int a = 0; a < config.model.k; ++a) {
          if (dist(a) <= 0.0) continue;
          pairs.push_back({x, a});
          self(self, prob * pState * dist(a));
          pairs.pop_back();
        }
      }
    };
    recurse(recurse, 1.0);
  }

  auto pathCode = [&](const Trajectory& traj) {
    std::int64_t code = 0;
    for (std::int64_t m = config.n; m >= 0; --m)
      code = code * dk + index.pairOffset(traj.states[static_cast<std::size_t>(m)],
                                          traj.actions[static_cast<std::size_t>(m)]);
    return code;
  };

  // Frequency tables; integer cell counts are exact under any interleaving.
  std::vector<std::atomic<std::int64_t>> directCells(static_cast<std::size_t>(cells));
  std::vector<std::atomic<std::int64_t>> auxCells(static_cast<std::size_t>(cells));
  for (auto& c : directCells) c.store(0);
  for (auto& c : auxCells) c.store(0);
  const RandomStream rootDirect = RandomStream(config.seed).sub(0);
  const RandomStream rootAux = RandomStream(config.seed).sub(1);
  parallelFor(config.replications, config.threads, [&](std::int64_t rep) {
    const Trajectory direct = simulate(config.model, *config.policy, config.n, initial,
                                       rootDirect.sub(static_cast<std::uint64_t>(rep)));
    const Trajectory aux = simulateAuxiliary(config.model, *config.policy, config.n, initial,
                                             rootAux.sub(static_cast<std::uint64_t>(rep)));
    directCells[static_cast<std::size_t>(pathCode(direct))].fetch_add(1);
    auxCells[static_cast<std::size_t>(pathCode(aux))].fetch_add(1);
  });
  report.directTable.assign(static_cast<std::size_t>(cells), 0);
  report.auxiliaryTable.assign(static_cast<std::size_t>(cells), 0);
  for (std::int64_t c = 0; c < cells; ++c) {
    report.directTable[static_cast<std::size_t>(c)] = directCells[static_cast<std::size_t>(c)].load();
    report.auxiliaryTable[static_cast<std::size_t>(c)] = auxCells[static_cast<std::size_t>(c)].load();
  }

  std::tie(report.twoSampleStat, report.twoSampleDf) =
      chiSquareTwoSample(report.directTable, report.auxiliaryTable);
  report.twoSampleP = pValueOf(report.twoSampleStat, report.twoSampleDf);
  std::tie(report.exactVsAuxStat, report.exactVsAuxDf) =
      chiSquareAgainstLaw(report.auxiliaryTable, report.exactLaw, report.samples);
  report.exactVsAuxP = pValueOf(report.exactVsAuxStat, report.exactVsAuxDf);
  std::tie(report.exactVsDirectStat, report.exactVsDirectDf) =
      chiSquareAgainstLaw(report.directTable, report.exactLaw, report.samples);
  report.exactVsDirectP = pValueOf(report.exactVsDirectStat, report.exactVsDirectDf);
  return report;
}

NoCltReport runNoCltDemo(const ExperimentConfig& config) {
  validateExperimentConfig(config);
  if (config.kind != ExperimentKind::NoClt)
    throw ConfigError("runNoCltDemo: config kind must be no-clt");
  const auto* vanishing = dynamic_cast<const VanishingActionPolicy*>(config.policy.get());
  if (!vanishing)
    throw ConfigError("runNoCltDemo: the logging policy must be of the vanishing kind");
  const Eigen::VectorXd initial = resolveInitial(config);

  std::vector<std::int64_t> grid = config.nGrid;
  if (grid.empty()) grid = {1000, 10000, 100000};
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (grid[g] <= grid[g - 1]) throw ConfigError("runNoCltDemo: nGrid must be increasing");
  if (grid.front() < 2) throw ConfigError("runNoCltDemo: nGrid entries must be >= 2");

  const int sStar = vanishing->targetState();
  const int lStar = vanishing->targetAction();
  int lCovered = lStar == 0 ? 1 : 0;

  NoCltReport report;
  report.grid = grid;
  report.replications = config.replications;
  report.starvedState = sStar + 1;
  report.starvedAction = lStar + 1;
  report.coveredState = sStar + 1;
  report.coveredAction = lCovered + 1;

  const std::int64_t nMax = grid.back();
  const std::size_t points = grid.size();
  // errors[g][rep]: sup_t |mHat - m| at the pair; NaN marks zero-visit reps.
  std::vector<std::vector<double>> starved(points,
                                           std::vector<double>(config.replications, 0.0));
  std::vector<std::vector<double>> covered = starved;

  const RandomStream root(config.seed);
  parallelFor(config.replications, config.threads, [&](std::int64_t rep) {
    // One trajectory per replication; the counter-based streams make every
    // grid horizon an exact prefix of the longest run.
    const Trajectory traj = simulate(config.model, *config.policy, nMax, initial,
                                     root.sub(static_cast<std::uint64_t>(rep)));
    for (std::size_t g = 0; g < points; ++g) {
      Trajectory prefix;
      prefix.states.assign(traj.states.begin(),
                           traj.states.begin() + static_cast<std::ptrdiff_t>(grid[g] + 1));
      prefix.actions.assign(traj.actions.begin(),
                            traj.actions.begin() + static_cast<std::ptrdiff_t>(grid[g] + 1));
      const Counts counts = count(prefix, config.model.d, config.model.k);
      const EstimatedModel est = estimateKernel(counts);
      auto supError = [&](int s, int l) {
        double sup = 0.0;
        for (int t = 0; t < config.model.d; ++t)
          sup = std::max(sup, std::abs(est.mHat[static_cast<std::size_t>(l)](s, t) -
                                       config.model.kernel[static_cast<std::size_t>(l)](s, t)));
        return sup;
      };
      starved[g][static_cast<std::size_t>(rep)] =
          est.defined(sStar, lStar) ? supError(sStar, lStar)
                                    : std::numeric_limits<double>::quiet_NaN();
      covered[g][static_cast<std::size_t>(rep)] =
          est.defined(sStar, lCovered) ? supError(sStar, lCovered)
                                       : std::numeric_limits<double>::quiet_NaN();
    }
  });

  for (std::size_t g = 0; g < points; ++g) {
    std::vector<double> sv, cv;
    std::int64_t excluded = 0;
    for (std::int64_t rep = 0; rep < config.replications; ++rep) {
      const double s = starved[g][static_cast<std::size_t>(rep)];
      if (std::isnan(s))
        ++excluded;
      else
        sv.push_back(s);
      const double c = covered[g][static_cast<std::size_t>(rep)];
      if (!std::isnan(c)) cv.push_back(c);
    }
    report.starvedExcluded.push_back(excluded);
    if (sv.empty()) {
      report.starvedQ25.push_back(std::numeric_limits<double>::quiet_NaN());
      report.starvedQ50.push_back(std::numeric_limits<double>::quiet_NaN());
      report.starvedQ75.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      std::sort(sv.begin(), sv.end());
      report.starvedQ25.push_back(quantileSorted(sv, 0.25));
      report.starvedQ50.push_back(quantileSorted(sv, 0.50));
      report.starvedQ75.push_back(quantileSorted(sv, 0.75));
    }
    if (cv.empty()) {
      report.coveredQ25.push_back(std::numeric_limits<double>::quiet_NaN());
      report.coveredQ50.push_back(std::numeric_limits<double>::quiet_NaN());
      report.coveredQ75.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      std::sort(cv.begin(), cv.end());
      report.coveredQ25.push_back(quantileSorted(cv, 0.25));
      report.coveredQ50.push_back(quantileSorted(cv, 0.50));
      report.coveredQ75.push_back(quantileSorted(cv, 0.75));
    }
  }
  return report;
}

}  // namespace cmc
