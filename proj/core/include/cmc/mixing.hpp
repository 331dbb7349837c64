#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cmc/estimation.hpp"
#include "cmc/model.hpp"
#include "cmc/policy.hpp"

namespace cmc {

/// Exhaustive-enumeration budget for the brute-force coefficients.
inline constexpr std::int64_t kMixingPathBudget = 20'000'000;
/// Conditioning events below this probability are pruned; the definitions
/// restrict suprema to positive-probability events.
inline constexpr double kProbabilityFloor = 1e-300;

/// Weak mixing coefficient eta-bar_{i,j}: supremum over positive-probability
/// histories and conditioning pairs of the total-variation distance (half-L1)
/// between the conditional laws of the path segment from time j to n.
/// Exhaustive enumeration; requires n <= 8 and d*k <= 6.
double etaBarBruteForce(const TransitionModel& model, const LoggingPolicy& policy, int n, int i,
                        int j, const Eigen::Ref<const Eigen::VectorXd>& initial);

/// Independent code path for history-invariant policies: the pair process is
/// an inhomogeneous Markov chain, so the suffix-law distance collapses to the
/// marginal distance at time j, computed by matrix products.
double etaBarPairChain(const TransitionModel& model, const LoggingPolicy& policy, int n, int i,
                       int j, const Eigen::Ref<const Eigen::VectorXd>& initial);

struct MixingCaps {
  int iMax = 2;
  int jMax = 2;
  int pMax = 6;
};

/// Action-mixing coefficients gamma_{p,j,i} and the capped triple sum of the
/// action-mixing assumption: per i, sum over j <= jMax and p <= pMax of
/// gamma, and the supremum over i <= iMax. Exact zeros for policies whose
/// action law does not depend on the removed history segment.
struct GammaSumReport {
  std::vector<double> perISum;  // index i-1
  double supSum = 0.0;
  MixingCaps caps;
};

GammaSumReport gammaTripleSum(const TransitionModel& model, const LoggingPolicy& policy,
                              const MixingCaps& caps,
                              const Eigen::Ref<const Eigen::VectorXd>& initial);

/// State-mixing coefficients theta-bar_{i,j} (total variation between the
/// laws of X_j under two conditioning pairs at time i) for 1 <= i < j <= n,
/// with per-i sums. For history-invariant policies the laws come from matrix
/// products; otherwise from exhaustive enumeration within capacity.
struct ThetaReport {
  Eigen::MatrixXd thetaBar;    // (n+1) x (n+1), entries for j > i >= 1
  std::vector<double> perISum;  // index i-1, sum over j = i+1..n
  /// Geometric tail bound on the truncated part of each per-i sum; present
  /// when every kernel entry is positive and the policy is history-invariant.
  std::optional<std::vector<double>> tailBound;
};

ThetaReport thetaBarMatrix(const TransitionModel& model, const LoggingPolicy& policy, int n,
                           const Eigen::Ref<const Eigen::VectorXd>& initial);

/// Full brute-force mixing report on a tiny instance.
struct MixingReport {
  int horizon = 0;
  Eigen::MatrixXd etaBar;  // (n+1) x (n+1), entries for 1 <= i < j <= n
  double deltaNorm = 1.0;  // max_i (1 + sum_{j>i} etaBar[i][j])
  GammaSumReport gamma;
  ThetaReport theta;
};

MixingReport computeMixingReport(const TransitionModel& model, const LoggingPolicy& policy, int n,
                                 const MixingCaps& caps,
                                 const Eigen::Ref<const Eigen::VectorXd>& initial);

/// Check of the cumulative-dependence bound ||Delta_n|| <= C + C_theta + 1.
struct DeltaBoundCheck {
  double bound = 0.0;
  double margin = 0.0;  // bound - deltaNorm
  bool ok = false;      // margin >= -1e-9
};

DeltaBoundCheck deltaNormBound(const MixingReport& report, double c, double cTheta);

/// Least-squares growth exponents of the mean visit counts across a horizon
/// grid: exponent(s,l) is the slope of log mean N_s^(l)(n) against log n.
struct VisitationGrowthReport {
  std::vector<std::int64_t> grid;
  RowMatrixXd exponent;                                        // d x k
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> observed;  // false when a grid mean was 0
  double minObservedExponent = 0.0;
};

VisitationGrowthReport visitationGrowth(const std::vector<std::vector<Counts>>& countsPerGrid,
                                        const std::vector<std::int64_t>& grid);

}  // namespace cmc
