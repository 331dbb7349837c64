#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cmc/estimation.hpp"
#include "cmc/model.hpp"

namespace cmc {

/// Upper-tail probability of the chi-square distribution, computed through
/// the regularized upper incomplete gamma function Q(df/2, x/2).
/// Absolute error below 1e-10 over x <= 500, df <= 200.
double chiSquareSurvival(double x, int df);

/// Lower-tail chi-square CDF (1 - survival), same accuracy.
double chiSquareCdf(double x, int df);

/// Standard normal CDF.
double normalCdf(double z);

/// Standard normal quantile: rational initial guess plus Newton refinement
/// against the erfc-based CDF; |Phi(z) - p| below 1e-9 on (0,1).
double normalQuantile(double p);

/// Pearson goodness-of-fit against a fixed null kernel (simple null).
struct PairGofEntry {
  int state = 0;   // 1-based
  int action = 0;  // 1-based
  double statistic = 0.0;
  int df = 0;  // d_(s,l) - 1
  double pValue = 1.0;
};

struct GofResult {
  std::vector<PairGofEntry> perPair;  // included pairs only
  double pooledStatistic = 0.0;
  int pooledDf = 0;  // sum of d_(s,l) - dk over included pairs
  double pooledPValue = 1.0;
  double level = 0.05;
  bool reject = false;
  std::vector<std::pair<int, int>> excludedPairs;  // zero-visit, 1-based
};

/// Per-pair statistic sums (N_{s,t} - N_s M_{s,t})^2 / (N_s M_{s,t}) over the
/// null-positive entries; an observed transition where the null is zero makes
/// the statistic infinite and forces rejection. Zero-visit pairs are excluded
/// with the degrees of freedom reduced accordingly.
GofResult gofTest(const Counts& counts, const TransitionModel& nullModel, double level);

/// Marginal Wald intervals for the transition probabilities.
struct IntervalEntry {
  int state = 0;      // 1-based
  int action = 0;     // 1-based
  int nextState = 0;  // 1-based
  double estimate = 0.0;
  double halfWidth = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t nVisits = 0;
  bool degenerate = false;  // estimate at 0 or 1, zero variance estimate
};

struct IntervalTable {
  std::vector<IntervalEntry> entries;
  double level = 0.95;
  bool bonferroni = false;
  std::vector<std::pair<int, int>> omittedPairs;  // zero-visit, 1-based
};

/// Per-coordinate intervals mHat +- z sqrt(mHat(1-mHat)/N), clipped to [0,1].
/// With bonferroni=true the per-coordinate miss level is (1-level)/(d^2 k).
IntervalTable transitionIntervals(const Counts& counts, double level, bool bonferroni = false);

}  // namespace cmc
