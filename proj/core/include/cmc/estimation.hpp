#pragma once

#include <cstdint>
#include <vector>

#include "cmc/model.hpp"
#include "cmc/simulate.hpp"

namespace cmc {

/// Sufficient statistics of a logged path: visit counts N_s^(l) over
/// i = 0..n-1 and transition counts N_{s,t}^(l).
struct Counts {
  int d = 0;
  int k = 0;
  std::int64_t horizon = 0;            // n
  CountMatrix visits;                  // d x k
  std::vector<CountMatrix> transitions;  // transitions[l](s, t)

  std::int64_t visitCount(int s0, int l0) const { return visits(s0, l0); }
};

Counts count(const Trajectory& traj, int d, int k);

/// Count-based estimate: mHat[l](s,t) = N_{s,t}^(l) / N_s^(l). Rows with
/// N_s^(l) = 0 are flagged undefined rather than fabricated; pHat = N/n.
struct EstimatedModel {
  int d = 0;
  int k = 0;
  std::vector<RowMatrixXd> mHat;                     // mHat[l](s, t); undefined rows are 0
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> defined;  // d x k
  RowMatrixXd pHat;                                  // d x k

  bool fullyDefined() const { return defined.all(); }
  /// 1-based (s, l) list of undefined pairs.
  std::vector<std::pair<int, int>> undefinedPairs() const;
  /// Kernel view of the defined estimate; throws InferenceImpossibleError if
  /// any row is undefined.
  TransitionModel asModel() const;
};

EstimatedModel estimateKernel(const Counts& counts);

/// Properly scaled CLT covariance: block diagonal over pairs (s,l) with
/// multinomial blocks diag(row) - row row^T, indexed by IndexMap triples.
Eigen::MatrixXd covarianceProper(const TransitionModel& model);

/// Improperly scaled covariance: the proper entry divided by
/// sqrt(p_s^(l) p_{s'}^(l')). Requires a strictly positive occupation measure.
Eigen::MatrixXd covarianceImproper(const TransitionModel& model, const RowMatrixXd& occupation);

/// Scaled error vector; entries for undefined rows are zero and flagged.
struct ScaledError {
  Eigen::VectorXd xi;                 // length d^2 k
  std::vector<std::uint8_t> missing;  // per coordinate
  int missingCount = 0;
};

/// xi[(s,l,t)] = sqrt(N_s^(l)) (mHat - m) per pair.
ScaledError scaledErrorProper(const EstimatedModel& estimate, const TransitionModel& truth,
                              const Counts& counts);

/// xi_is[(s,l,t)] = sqrt(n) (mHat - m), one global scaling.
ScaledError scaledErrorImproper(const EstimatedModel& estimate, const TransitionModel& truth,
                                std::int64_t n);

/// Exact occupation measure of the pair chain when the logging policy is
/// stationary Markov: the stationary distribution of the dk-state chain with
/// transition P((s,l) -> (t,l')) = M^(l)(s,t) table(t,l').
RowMatrixXd stationaryPairOccupation(const TransitionModel& model, const RowMatrixXd& table);

}  // namespace cmc
