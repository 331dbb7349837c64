#include "cmc/policy.hpp"

#include <cmath>
#include <sstream>

namespace cmc {

namespace {

void checkSimplexRow(const Eigen::Ref<const Eigen::VectorXd>& row, const std::string& where) {
  double sum = 0.0;
  for (int l = 0; l < row.size(); ++l) {
    const double v = row(l);
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw ConfigError(where + ": entry out of [0,1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTol)
    throw ConfigError(where + ": row sum " + std::to_string(sum) + " differs from 1");
}

void checkTable(const RowMatrixXd& table, int d, const std::string& where) {
  if (table.rows() != d || table.cols() < 1)
    throw ConfigError(where + ": table must have d rows and at least one action column");
  for (int s = 0; s < d; ++s) checkSimplexRow(table.row(s), where);
}

void checkQuery(std::int64_t time, int state, History history, int d) {
  if (time < 0) throw ConfigError("policy query: negative time");
  if (state < 0 || state >= d) throw ConfigError("policy query: state out of range");
  if (static_cast<std::int64_t>(history.size()) != time)
    throw ConfigError("policy query: history length must equal the time index");
}

}  // namespace

StationaryMarkovPolicy::StationaryMarkovPolicy(int d, RowMatrixXd table) : table_(std::move(table)) {
  checkTable(table_, d, "stationary Markov policy");
}

void StationaryMarkovPolicy::actionDistribution(std::int64_t time, int state, History history,
                                                Eigen::Ref<Eigen::VectorXd> out) const {
  checkQuery(time, state, history, static_cast<int>(table_.rows()));
  out = table_.row(state);
}

NonStationaryMarkovPolicy::NonStationaryMarkovPolicy(int d, std::vector<RowMatrixXd> tables,
                                                     int period)
    : d_(d), tables_(std::move(tables)), period_(period) {
  if (period_ < 1 || tables_.empty() || static_cast<int>(tables_.size()) < period_)
    throw ConfigError("nonstationary Markov policy: need at least `period` tables");
  k_ = static_cast<int>(tables_.front().cols());
  for (const auto& t : tables_) {
    checkTable(t, d_, "nonstationary Markov policy");
    if (t.cols() != k_) throw ConfigError("nonstationary Markov policy: inconsistent action count");
  }
}

NonStationaryMarkovPolicy::NonStationaryMarkovPolicy(int d, int k, Schedule schedule)
    : d_(d), k_(k), schedule_(std::move(schedule)) {
  if (!schedule_) throw ConfigError("nonstationary Markov policy: empty schedule");
}

RowMatrixXd NonStationaryMarkovPolicy::tableAt(std::int64_t time) const {
  if (period_ > 0) return tables_[static_cast<std::size_t>(time % period_)];
  RowMatrixXd t = schedule_(time);
  std::ostringstream where;
  where << "nonstationary Markov policy at time " << time;
  checkTable(t, d_, where.str());
  if (t.cols() != k_) throw ConfigError(where.str() + ": inconsistent action count");
  return t;
}

void NonStationaryMarkovPolicy::actionDistribution(std::int64_t time, int state, History history,
                                                   Eigen::Ref<Eigen::VectorXd> out) const {
  checkQuery(time, state, history, d_);
  if (period_ > 0) {
    out = tables_[static_cast<std::size_t>(time % period_)].row(state);
  } else {
    out = tableAt(time).row(state);
  }
}

DeterministicSequencePolicy::DeterministicSequencePolicy(int k, Sequence actionAt, std::string label)
    : k_(k), actionAt_(std::move(actionAt)), label_(std::move(label)) {
  if (k_ < 1) throw ConfigError("deterministic sequence policy: k must be >= 1");
  if (!actionAt_) throw ConfigError("deterministic sequence policy: empty sequence");
}

int DeterministicSequencePolicy::actionAt(std::int64_t time) const {
  const int a = actionAt_(time);
  if (a < 0 || a >= k_) {
    std::ostringstream os;
    os << "deterministic sequence policy: action " << a + 1 << " at time " << time
       << " outside 1.." << k_;
    throw ConfigError(os.str());
  }
  return a;
}

void DeterministicSequencePolicy::actionDistribution(std::int64_t time, int state, History history,
                                                     Eigen::Ref<Eigen::VectorXd> out) const {
  (void)state;
  if (time < 0) throw ConfigError("policy query: negative time");
  if (static_cast<std::int64_t>(history.size()) != time)
    throw ConfigError("policy query: history length must equal the time index");
  out.setZero();
  out(actionAt(time)) = 1.0;
}

HistoryDependentPolicy::HistoryDependentPolicy(int k, Rule rule, std::string label)
    : k_(k), rule_(std::move(rule)), label_(std::move(label)) {
  if (k_ < 1) throw ConfigError("history-dependent policy: k must be >= 1");
  if (!rule_) throw ConfigError("history-dependent policy: empty rule");
}

void HistoryDependentPolicy::actionDistribution(std::int64_t time, int state, History history,
                                                Eigen::Ref<Eigen::VectorXd> out) const {
  if (time < 0) throw ConfigError("policy query: negative time");
  if (static_cast<std::int64_t>(history.size()) != time)
    throw ConfigError("policy query: history length must equal the time index");
  rule_(time, state, history, out);
  checkSimplexRow(out, "history-dependent policy output");
}

VanishingActionPolicy::VanishingActionPolicy(int d, RowMatrixXd baseTable, int targetState,
                                             int targetAction, double beta)
    : base_(std::move(baseTable)), targetState_(targetState), targetAction_(targetAction),
      beta_(beta) {
  checkTable(base_, d, "vanishing-action policy base table");
  const int k = static_cast<int>(base_.cols());
  if (k < 2) throw ConfigError("vanishing-action policy: needs k >= 2");
  if (targetState_ < 0 || targetState_ >= d || targetAction_ < 0 || targetAction_ >= k)
    throw ConfigError("vanishing-action policy: target pair out of range");
  if (!(beta_ > 0.0)) throw ConfigError("vanishing-action policy: beta must be positive");
  offTargetMass_ = base_.row(targetState_).sum() - base_(targetState_, targetAction_);
  if (offTargetMass_ <= 0.0)
    throw ConfigError("vanishing-action policy: base table has no mass off the target action");
}

void VanishingActionPolicy::actionDistribution(std::int64_t time, int state, History history,
                                               Eigen::Ref<Eigen::VectorXd> out) const {
  checkQuery(time, state, history, static_cast<int>(base_.rows()));
  if (state != targetState_) {
    out = base_.row(state);
    return;
  }
  const double pTarget = std::pow(static_cast<double>(time + 1), -beta_);
  const double residual = 1.0 - pTarget;
  for (int l = 0; l < out.size(); ++l)
    out(l) = (l == targetAction_) ? pTarget : residual * base_(targetState_, l) / offTargetMass_;
}

void validateWindowSpec(const PolicyWindowSpec& spec) {
  if (!(spec.c > 0.0)) throw ConfigError("window spec: c must be positive");
  if (!(spec.returnExponent > 0.0 && spec.returnExponent < 1.0))
    throw ConfigError("window spec: return exponent must lie in (0,1)");
}

std::shared_ptr<DeterministicSequencePolicy> makeCyclicInhomogeneous(int d, int k,
                                                                     const PolicyWindowSpec& spec) {
  if (d < 1 || k < 1) throw ConfigError("cyclic policy: d and k must be >= 1");
  validateWindowSpec(spec);
  return std::make_shared<DeterministicSequencePolicy>(
      k, [k](std::int64_t i) { return static_cast<int>(i % k); }, "deterministic_cycle");
}

std::shared_ptr<NonStationaryMarkovPolicy> makeNonStationaryMarkov(int d, int k,
                                                                   std::vector<RowMatrixXd> tables,
                                                                   int period) {
  auto policy = std::make_shared<NonStationaryMarkovPolicy>(d, std::move(tables), period);
  if (policy->actionCount() != k)
    throw ConfigError("nonstationary Markov policy: action count mismatch");
  return policy;
}

std::shared_ptr<HistoryDependentPolicy> makeRepeatPreviousPolicy(int k, double q) {
  if (k < 1) throw ConfigError("repeat-previous policy: k must be >= 1");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("repeat-previous policy: q must lie in [0,1]");
  return std::make_shared<HistoryDependentPolicy>(
      k,
      [k, q](std::int64_t time, int state, History history, Eigen::Ref<Eigen::VectorXd> out) {
        (void)state;
        const double uniform = 1.0 / static_cast<double>(k);
        if (time == 0 || history.empty()) {
          out.setConstant(uniform);
          return;
        }
        out.setConstant((1.0 - q) * uniform);
        out(history.back().action) += q;
      },
      "repeat_previous");
}

std::shared_ptr<HistoryDependentPolicy> makeRepeatFirstPolicy(int k, double q) {
  if (k < 1) throw ConfigError("repeat-first policy: k must be >= 1");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("repeat-first policy: q must lie in [0,1]");
  return std::make_shared<HistoryDependentPolicy>(
      k,
      [k, q](std::int64_t time, int state, History history, Eigen::Ref<Eigen::VectorXd> out) {
        (void)state;
        const double uniform = 1.0 / static_cast<double>(k);
        if (time == 0 || history.empty()) {
          out.setConstant(uniform);
          return;
        }
        out.setConstant((1.0 - q) * uniform);
        out(history.front().action) += q;
      },
      "repeat_first");
}

RowMatrixXd LoggingPolicy::markovActionTable(std::int64_t, int) const {
  throw ConfigError("policy '" + kind() + "' is history-dependent and has no action table");
}

RowMatrixXd StationaryMarkovPolicy::markovActionTable(std::int64_t, int d) const {
  if (d != table_.rows()) throw ConfigError("markovActionTable: state count mismatch");
  return table_;
}

RowMatrixXd NonStationaryMarkovPolicy::markovActionTable(std::int64_t time, int d) const {
  if (d != d_) throw ConfigError("markovActionTable: state count mismatch");
  return tableAt(time);
}

RowMatrixXd DeterministicSequencePolicy::markovActionTable(std::int64_t time, int d) const {
  RowMatrixXd table = RowMatrixXd::Zero(d, k_);
  table.col(actionAt(time)).setOnes();
  return table;
}

RowMatrixXd VanishingActionPolicy::markovActionTable(std::int64_t time, int d) const {
  if (d != base_.rows()) throw ConfigError("markovActionTable: state count mismatch");
  RowMatrixXd table = base_;
  const double pTarget = std::pow(static_cast<double>(time + 1), -beta_);
  const double residual = 1.0 - pTarget;
  for (int l = 0; l < table.cols(); ++l)
    table(targetState_, l) =
        (l == targetAction_) ? pTarget : residual * base_(targetState_, l) / offTargetMass_;
  return table;
}

}  // namespace cmc
