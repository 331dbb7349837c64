#include "cmc/simulate.hpp"

#include <cassert>
#include <cmath>

namespace cmc {

Eigen::VectorXd uniformInitial(int d) {
  if (d < 1) throw InvalidInputError("uniformInitial: d must be >= 1");
  return Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d));
}

namespace {

void checkSimulationInputs(const TransitionModel& model, const LoggingPolicy& policy,
                           std::int64_t n, const Eigen::Ref<const Eigen::VectorXd>& initial) {
  ensureValidModel(model);
  if (policy.actionCount() != model.k)
    throw ConfigError("simulate: policy action count differs from the model");
  if (n < 1) throw InvalidInputError("simulate: horizon n must be >= 1");
  if (initial.size() != model.d) throw InvalidInputError("simulate: initial distribution size");
  double sum = 0.0;
  for (int s = 0; s < initial.size(); ++s) {
    if (!(initial(s) >= 0.0)) throw InvalidInputError("simulate: initial distribution entries");
    sum += initial(s);
  }
  if (std::abs(sum - 1.0) > kSimplexTol)
    throw InvalidInputError("simulate: initial distribution must sum to 1");
}

std::span<const double> rowSpan(const RowMatrixXd& m, int row) {
  return {m.data() + static_cast<std::size_t>(row) * m.cols(), static_cast<std::size_t>(m.cols())};
}

std::span<const double> vecSpan(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

Trajectory simulate(const TransitionModel& model, const LoggingPolicy& policy, std::int64_t n,
                    const Eigen::Ref<const Eigen::VectorXd>& initial, RandomStream stream) {
  checkSimulationInputs(model, policy, n, initial);
  const RandomStream initStream = subStream(stream, StreamRole::InitialState);
  const RandomStream policyStream = subStream(stream, StreamRole::PolicyDraw);
  const RandomStream transitionStream = subStream(stream, StreamRole::TransitionDraw);

  std::vector<StateAction> path;
  path.reserve(static_cast<std::size_t>(n) + 1);
  Eigen::VectorXd dist(model.k);

  Eigen::VectorXd init = initial;
  int x = initStream.categorical(0, vecSpan(init));
  for (std::int64_t i = 0; i <= n; ++i) {
    policy.actionDistribution(i, x, History(path.data(), static_cast<std::size_t>(i)), dist);
    const int a = policyStream.categorical(static_cast<std::uint64_t>(i), vecSpan(dist));
    path.push_back({x, a});
    if (i < n)
      x = transitionStream.categorical(static_cast<std::uint64_t>(i),
                                       rowSpan(model.kernel[a], x));
  }

  Trajectory traj;
  traj.seed = stream.key();
  traj.states.reserve(path.size());
  traj.actions.reserve(path.size());
  for (const auto& sa : path) {
    traj.states.push_back(sa.state);
    traj.actions.push_back(sa.action);
  }
  return traj;
}

Trajectory simulateAuxiliary(const TransitionModel& model, const LoggingPolicy& policy,
                             std::int64_t n, const Eigen::Ref<const Eigen::VectorXd>& initial,
                             RandomStream stream) {
  checkSimulationInputs(model, policy, n, initial);
  const IndexMap index{model.d, model.k};
  const RandomStream initStream = subStream(stream, StreamRole::InitialState);
  const RandomStream policyStream = subStream(stream, StreamRole::PolicyDraw);
  const RandomStream auxRoot = subStream(stream, StreamRole::AuxiliaryRow);

  // One lazy i.i.d. column stream per pair row; consumed[p] entries are used.
  std::vector<RandomStream> rowStreams;
  rowStreams.reserve(static_cast<std::size_t>(index.pairCount()));
  for (int p = 0; p < index.pairCount(); ++p)
    rowStreams.push_back(auxRoot.sub(static_cast<std::uint64_t>(p)));
  std::vector<std::int64_t> consumed(static_cast<std::size_t>(index.pairCount()), 0);

  std::vector<StateAction> path;
  path.reserve(static_cast<std::size_t>(n) + 1);
  Eigen::VectorXd dist(model.k);

  Eigen::VectorXd init = initial;
  int x = initStream.categorical(0, vecSpan(init));
  for (std::int64_t i = 0; i <= n; ++i) {
    policy.actionDistribution(i, x, History(path.data(), static_cast<std::size_t>(i)), dist);
    const int a = policyStream.categorical(static_cast<std::uint64_t>(i), vecSpan(dist));
    path.push_back({x, a});
    if (i < n) {
      const int p = index.pairOffset(x, a);
      const std::int64_t tau = consumed[static_cast<std::size_t>(p)]++;
      x = rowStreams[static_cast<std::size_t>(p)].categorical(static_cast<std::uint64_t>(tau),
                                                              rowSpan(model.kernel[a], x));
    }
  }
#ifndef NDEBUG
  // By construction every step i < n consumes exactly one entry of its row,
  // so consumed[(s,l)] equals the visit count N_s^(l).
  for (int p = 0; p < index.pairCount(); ++p) {
    std::int64_t visits = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      const auto& sa = path[static_cast<std::size_t>(i)];
      if (index.pairOffset(sa.state, sa.action) == p) ++visits;
    }
    assert(visits == consumed[static_cast<std::size_t>(p)]);
  }
#endif

  Trajectory traj;
  traj.seed = stream.key();
  traj.states.reserve(path.size());
  traj.actions.reserve(path.size());
  for (const auto& sa : path) {
    traj.states.push_back(sa.state);
    traj.actions.push_back(sa.action);
  }
  return traj;
}

ReturnTimes returnTimes(const Trajectory& traj, int state, int action) {
  ReturnTimes out;
  out.state = state;
  out.action = action;
  std::int64_t last = 0;
  const std::int64_t len = static_cast<std::int64_t>(traj.states.size());
  for (std::int64_t i = 1; i < len; ++i) {
    if (traj.states[static_cast<std::size_t>(i)] == state &&
        traj.actions[static_cast<std::size_t>(i)] == action) {
      out.gaps.push_back(i - last);
      last = i;
    }
  }
  return out;
}

ReturnGrowthReport checkReturnGrowth(const std::vector<ReturnTimes>& samples, double c,
                                     double alpha) {
  if (samples.size() < 50)
    throw DiagnosticError("checkReturnGrowth: needs at least 50 replications, got " +
                          std::to_string(samples.size()));
  if (!(c > 0.0) || !(alpha > 0.0 && alpha < 1.0))
    throw DiagnosticError("checkReturnGrowth: require c > 0 and alpha in (0,1)");

  // Pool the i-th return time across replications; keep indices observed in
  // at least half the replications so late, selection-biased indices drop out.
  std::size_t maxLen = 0;
  for (const auto& r : samples) maxLen = std::max(maxLen, r.gaps.size());
  const std::size_t minCount = (samples.size() + 1) / 2;

  ReturnGrowthReport report;
  std::vector<double> logI, logMean;
  std::size_t violations = 0;
  for (std::size_t i = 1; i <= maxLen; ++i) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : samples) {
      if (r.gaps.size() >= i) {
        sum += static_cast<double>(r.gaps[i - 1]);
        ++count;
      }
    }
    if (count < minCount) break;
    const double mean = sum / static_cast<double>(count);
    report.meanByIndex.push_back(mean);
    logI.push_back(std::log(static_cast<double>(i)));
    logMean.push_back(std::log(mean));
    if (mean > c * std::pow(static_cast<double>(i), alpha)) ++violations;
  }
  report.indicesUsed = static_cast<int>(report.meanByIndex.size());
  if (report.indicesUsed < 2)
    throw DiagnosticError("checkReturnGrowth: fewer than 2 usable return indices");

  report.violationRate = static_cast<double>(violations) / static_cast<double>(report.indicesUsed);

  // Least-squares slope of log mean vs log index.
  const double n = static_cast<double>(logI.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t m = 0; m < logI.size(); ++m) {
    sx += logI[m];
    sy += logMean[m];
    sxx += logI[m] * logI[m];
    sxy += logI[m] * logMean[m];
  }
  report.fittedExponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return report;
}

}  // namespace cmc
