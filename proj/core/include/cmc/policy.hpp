#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cmc/model.hpp"

namespace cmc {

/// One logged step, 0-based.
struct StateAction {
  int state = 0;
  int action = 0;
  friend bool operator==(const StateAction&, const StateAction&) = default;
};

/// The steps strictly before the query time.
using History = std::span<const StateAction>;

/// Behavior policy abstraction: an action distribution given the time index,
/// the current state, and the full history of earlier steps.
///
/// Implementations must be pure functions of their arguments; the simulator
/// and the mixing brute force both rely on repeated queries being identical.
class LoggingPolicy {
 public:
  virtual ~LoggingPolicy() = default;

  /// Writes a length-k simplex into out. history must have length == time.
  virtual void actionDistribution(std::int64_t time, int state, History history,
                                  Eigen::Ref<Eigen::VectorXd> out) const = 0;

  virtual int actionCount() const = 0;

  /// True when the distribution depends on (time, state) only. Such policies
  /// make the state-action pair process an inhomogeneous Markov chain, which
  /// the mixing diagnostics exploit for matrix-product code paths.
  virtual bool historyInvariant() const = 0;

  /// True when every distribution is a point mass.
  virtual bool deterministic() const { return false; }

  virtual std::string kind() const = 0;

  /// For history-invariant policies: the full d x k action table at a time
  /// step, used by the matrix-product mixing diagnostics. Throws ConfigError
  /// for history-dependent policies.
  virtual RowMatrixXd markovActionTable(std::int64_t time, int d) const;

  Eigen::VectorXd actionDistributionVec(std::int64_t time, int state, History history) const {
    Eigen::VectorXd out(actionCount());
    actionDistribution(time, state, history, out);
    return out;
  }
};

/// Time-homogeneous table policy P(a = l | X = s) = table(s, l).
class StationaryMarkovPolicy final : public LoggingPolicy {
 public:
  StationaryMarkovPolicy(int d, RowMatrixXd table);

  void actionDistribution(std::int64_t time, int state, History history,
                          Eigen::Ref<Eigen::VectorXd> out) const override;
  int actionCount() const override { return static_cast<int>(table_.cols()); }
  bool historyInvariant() const override { return true; }
  std::string kind() const override { return "stationary_markov"; }
  RowMatrixXd markovActionTable(std::int64_t time, int d) const override;

  const RowMatrixXd& table() const { return table_; }

 private:
  RowMatrixXd table_;
};

/// Time-dependent Markov policy: a table per time step. The periodic form
/// cycles through a finite list; the general form evaluates a user schedule
/// and validates each produced table.
class NonStationaryMarkovPolicy final : public LoggingPolicy {
 public:
  using Schedule = std::function<RowMatrixXd(std::int64_t)>;

  NonStationaryMarkovPolicy(int d, std::vector<RowMatrixXd> tables, int period);
  NonStationaryMarkovPolicy(int d, int k, Schedule schedule);

  void actionDistribution(std::int64_t time, int state, History history,
                          Eigen::Ref<Eigen::VectorXd> out) const override;
  int actionCount() const override { return k_; }
  bool historyInvariant() const override { return true; }
  std::string kind() const override { return "nonstationary_markov"; }
  RowMatrixXd markovActionTable(std::int64_t time, int d) const override;

  RowMatrixXd tableAt(std::int64_t time) const;
  int period() const { return period_; }
  const std::vector<RowMatrixXd>& tables() const { return tables_; }

 private:
  int d_ = 0;
  int k_ = 0;
  std::vector<RowMatrixXd> tables_;
  int period_ = 0;  // 0 when schedule-driven
  Schedule schedule_;
};

/// Deterministic action sequence a_i = actionAt(i), independent of the state.
class DeterministicSequencePolicy final : public LoggingPolicy {
 public:
  using Sequence = std::function<int(std::int64_t)>;  // returns 0-based action

  DeterministicSequencePolicy(int k, Sequence actionAt, std::string label = "deterministic_sequence");

  void actionDistribution(std::int64_t time, int state, History history,
                          Eigen::Ref<Eigen::VectorXd> out) const override;
  int actionCount() const override { return k_; }
  bool historyInvariant() const override { return true; }
  bool deterministic() const override { return true; }
  std::string kind() const override { return label_; }
  RowMatrixXd markovActionTable(std::int64_t time, int d) const override;

  int actionAt(std::int64_t time) const;

 private:
  int k_ = 0;
  Sequence actionAt_;
  std::string label_;
};

/// History-dependent policy driven by a user rule. Rules must be pure.
class HistoryDependentPolicy final : public LoggingPolicy {
 public:
  using Rule = std::function<void(std::int64_t, int, History, Eigen::Ref<Eigen::VectorXd>)>;

  HistoryDependentPolicy(int k, Rule rule, std::string label = "history_dependent");

  void actionDistribution(std::int64_t time, int state, History history,
                          Eigen::Ref<Eigen::VectorXd> out) const override;
  int actionCount() const override { return k_; }
  bool historyInvariant() const override { return false; }
  std::string kind() const override { return label_; }

 private:
  int k_ = 0;
  Rule rule_;
  std::string label_;
};

/// Starves the pair (targetState, targetAction): at the target state the
/// target action has probability (i+1)^(-beta) and the residual mass is
/// spread over the other actions proportionally to the base table. All other
/// states use the base table unchanged.
class VanishingActionPolicy final : public LoggingPolicy {
 public:
  VanishingActionPolicy(int d, RowMatrixXd baseTable, int targetState, int targetAction,
                        double beta);

  void actionDistribution(std::int64_t time, int state, History history,
                          Eigen::Ref<Eigen::VectorXd> out) const override;
  int actionCount() const override { return static_cast<int>(base_.cols()); }
  bool historyInvariant() const override { return true; }
  std::string kind() const override { return "vanishing"; }
  RowMatrixXd markovActionTable(std::int64_t time, int d) const override;

  int targetState() const { return targetState_; }
  int targetAction() const { return targetAction_; }
  double beta() const { return beta_; }
  const RowMatrixXd& baseTable() const { return base_; }

 private:
  RowMatrixXd base_;
  int targetState_ = 0;
  int targetAction_ = 0;
  double beta_ = 0.0;
  double offTargetMass_ = 0.0;  // sum of base(targetState, l != targetAction)
};

/// Window bound T_i = ceil(c * i^returnExponent) used by the return-time
/// diagnostics. Named returnExponent to keep it distinct from the discount
/// factor, which also goes by alpha elsewhere.
struct PolicyWindowSpec {
  double c = 1.0;
  double returnExponent = 0.5;  // in (0,1)

  std::int64_t window(std::int64_t i) const {
    return static_cast<std::int64_t>(
        std::ceil(c * std::pow(static_cast<double>(i), returnExponent)));
  }
};

void validateWindowSpec(const PolicyWindowSpec& spec);

/// Deterministic cyclic policy 1,2,...,k,1,2,...; every length-k window
/// contains every action, so any window sequence with T_i >= k is satisfied.
std::shared_ptr<DeterministicSequencePolicy> makeCyclicInhomogeneous(int d, int k,
                                                                     const PolicyWindowSpec& spec);

/// Periodic nonstationary Markov policy from a finite table list.
std::shared_ptr<NonStationaryMarkovPolicy> makeNonStationaryMarkov(int d, int k,
                                                                   std::vector<RowMatrixXd> tables,
                                                                   int period);

/// Built-in history-dependent demo: repeat the previous action with
/// probability q, otherwise draw uniformly. One-step memory keeps the action
/// mixing coefficients gamma identically zero (the previous action is always
/// part of the retained conditioning segment).
std::shared_ptr<HistoryDependentPolicy> makeRepeatPreviousPolicy(int k, double q);

/// Built-in demo with unbounded memory: repeat the very first action with
/// probability q, otherwise draw uniformly. The dependence on the dropped
/// early history makes gamma strictly positive.
std::shared_ptr<HistoryDependentPolicy> makeRepeatFirstPolicy(int k, double q);

}  // namespace cmc
