#pragma once

#include <Eigen/Dense>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cmc/errors.hpp"

namespace cmc {

/// Row-major so that kernel.row(s) is contiguous and can be handed to the
/// sampler as a span without copying.
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row-sum tolerance for simplices at construction time.
inline constexpr double kSimplexTol = 1e-12;
/// Looser tolerance for stochastic matrices produced by arithmetic.
inline constexpr double kDerivedStochasticTol = 1e-10;

/// Finite controlled Markov chain model: d states, k actions, and one
/// row-stochastic d x d matrix per action. All indices are 0-based in code;
/// the 1-based convention of the external data model is applied only at the
/// JSON/CSV/report boundary and in IndexMap's 1-based accessors.
struct TransitionModel {
  int d = 0;
  int k = 0;
  std::vector<RowMatrixXd> kernel;  // kernel[l](s, t)
};

struct Violation {
  int action = 0;  // 1-based, 0 when not tied to a cell
  int state = 0;   // 1-based, 0 when not tied to a cell
  std::string message;
};
using ValidationReport = std::vector<Violation>;

/// Reports every invariant violation; empty report iff the model is valid.
ValidationReport validateModel(const TransitionModel& model);
/// Throws ValidationError with the collected report when the model is invalid.
void ensureValidModel(const TransitionModel& model);

/// Flat-index conventions shared by the covariance matrices and the scaled
/// error vectors. The external accessors are 1-based:
///   triple (s,l,t) -> (s-1)dk + (l-1)d + t   in 1..d^2 k
///   pair   (s,l)   -> (s-1)k + l             in 1..dk
struct IndexMap {
  int d = 0;
  int k = 0;

  int tripleIndex(int s, int l, int t) const;
  std::tuple<int, int, int> tripleInverse(int flat) const;
  int pairIndex(int s, int l) const;
  std::pair<int, int> pairInverse(int flat) const;

  // 0-based offsets for matrix assembly.
  int tripleOffset(int s0, int l0, int t0) const { return (s0 * k + l0) * d + t0; }
  int pairOffset(int s0, int l0) const { return s0 * k + l0; }
  int tripleCount() const { return d * d * k; }
  int pairCount() const { return d * k; }
};

/// Reward specification: per-state-action rewards gTilde(x,a) and transition
/// rewards rTilde(x,a,y), plus the discount factor in (0,1). The distinct
/// symbol alpha for return-time growth lives in PolicyWindowSpec, not here.
struct RewardModel {
  RowMatrixXd gTilde;               // d x k
  std::vector<RowMatrixXd> rTilde;  // rTilde[l](s, t)
  double discount = 0.0;
};

ValidationReport validateRewards(const RewardModel& rewards);
void ensureValidRewards(const RewardModel& rewards);

/// Stationary target policy pi(s, l); each row a simplex over actions.
struct TargetPolicy {
  RowMatrixXd pi;  // d x k
};

ValidationReport validateTargetPolicy(const TargetPolicy& policy);
void ensureValidTargetPolicy(const TargetPolicy& policy);

/// Pi: d x dk block-diagonal matrix with Pi(s, (s-1)k+l) = pi(s,l).
RowMatrixXd blockDiagonal(const TargetPolicy& policy);

/// Stacked kernel: dk x d matrix whose row (s-1)k+l is the kernel row
/// M^(l)(s, .).
RowMatrixXd stackKernel(const TransitionModel& model);

}  // namespace cmc
