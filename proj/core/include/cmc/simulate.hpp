#pragma once

#include <cstdint>
#include <vector>

#include "cmc/model.hpp"
#include "cmc/policy.hpp"
#include "cmc/rng.hpp"

namespace cmc {

/// Logged path (X_0, a_0), ..., (X_n, a_n); states and actions are 0-based in
/// code and 1-based in CSV. seed records the stream key that produced the run.
struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;
  std::uint64_t seed = 0;

  std::int64_t horizon() const { return static_cast<std::int64_t>(states.size()) - 1; }
};

Eigen::VectorXd uniformInitial(int d);

/// Direct simulation of the controlled Markov chain: X_0 ~ initial,
/// a_i ~ policy(i, X_i, history), X_{i+1} ~ kernel[a_i].row(X_i).
/// Pure function of (model, policy, n, initial, stream).
Trajectory simulate(const TransitionModel& model, const LoggingPolicy& policy, std::int64_t n,
                    const Eigen::Ref<const Eigen::VectorXd>& initial, RandomStream stream);

/// Auxiliary sampling scheme: each state-action pair owns an i.i.d. stream of
/// next-state draws (lazily materialized columns of the infinite arrays), and
/// the next state consumes the first unused entry of the current pair's row.
/// Identically distributed to simulate(); the two paths differ step by step.
Trajectory simulateAuxiliary(const TransitionModel& model, const LoggingPolicy& policy,
                             std::int64_t n, const Eigen::Ref<const Eigen::VectorXd>& initial,
                             RandomStream stream);

/// Return-time sequence of one pair: gaps[0] is the first index i > 0 with
/// (X_i, a_i) = (s, l), later entries are gaps between successive hits.
struct ReturnTimes {
  int state = 0;   // 0-based
  int action = 0;  // 0-based
  std::vector<std::int64_t> gaps;
};

ReturnTimes returnTimes(const Trajectory& traj, int state, int action);

/// Pooled return-time diagnostic for the sublinear-growth window assumption:
/// per return index i, the mean gap across replications is compared against
/// c * i^alpha, and a log-log least-squares slope is fitted.
struct ReturnGrowthReport {
  double violationRate = 0.0;
  double fittedExponent = 0.0;
  int indicesUsed = 0;
  std::vector<double> meanByIndex;  // meanByIndex[i-1] = mean gap at return index i
};

ReturnGrowthReport checkReturnGrowth(const std::vector<ReturnTimes>& samples, double c,
                                     double alpha);

}  // namespace cmc
