#include "cmc/inference.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace cmc {

namespace {

// Regularized lower incomplete gamma P(a,x) by series expansion; converges
// fast for x < a + 1.
double gammaPSeries(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a,x) by modified Lentz continued
// fraction; converges fast for x >= a + 1.
double gammaQContinuedFraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double regularizedGammaQ(double a, double x) {
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gammaPSeries(a, x);
  return gammaQContinuedFraction(a, x);
}

}  // namespace

double chiSquareSurvival(double x, int df) {
  if (df < 1) throw DomainError("chiSquareSurvival: df must be >= 1");
  if (!(x >= 0.0)) throw DomainError("chiSquareSurvival: x must be >= 0");
  if (std::isinf(x)) return 0.0;
  return regularizedGammaQ(0.5 * static_cast<double>(df), 0.5 * x);
}

double chiSquareCdf(double x, int df) { return 1.0 - chiSquareSurvival(x, df); }

double normalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normalQuantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normalQuantile: p must lie in (0,1)");

  // Acklam's rational approximation as the initial guess.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double e[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double pLow = 0.02425;
  double z;
  if (p < pLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((e[0] * q + e[1]) * q + e[2]) * q + e[3]) * q + 1.0);
  } else if (p <= 1.0 - pLow) {
    const double q = p - 0.5;
    const double r = q * q;
    z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((e[0] * q + e[1]) * q + e[2]) * q + e[3]) * q + 1.0);
  }
  // Two Newton steps against the erfc-based CDF.
  for (int it = 0; it < 2; ++it) {
    const double err = normalCdf(z) - p;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    if (pdf <= 0.0) break;
    z -= err / pdf;
  }
  return z;
}

GofResult gofTest(const Counts& counts, const TransitionModel& nullModel, double level) {
  ensureValidModel(nullModel);
  if (counts.d != nullModel.d || counts.k != nullModel.k)
    throw InvalidInputError("gofTest: counts dimensions differ from the null model");
  if (!(level > 0.0 && level < 1.0)) throw InvalidInputError("gofTest: level must lie in (0,1)");

  GofResult result;
  result.level = level;
  bool sawInfinity = false;
  for (int s = 0; s < counts.d; ++s) {
    for (int l = 0; l < counts.k; ++l) {
      const std::int64_t n = counts.visits(s, l);
      if (n == 0) {
        result.excludedPairs.emplace_back(s + 1, l + 1);
        continue;
      }
      PairGofEntry entry;
      entry.state = s + 1;
      entry.action = l + 1;
      int support = 0;
      double stat = 0.0;
      for (int t = 0; t < counts.d; ++t) {
        const double m = nullModel.kernel[static_cast<std::size_t>(l)](s, t);
        const std::int64_t observed = counts.transitions[static_cast<std::size_t>(l)](s, t);
        if (m > 0.0) {
          ++support;
          const double expected = static_cast<double>(n) * m;
          const double dev = static_cast<double>(observed) - expected;
          stat += dev * dev / expected;
        } else if (observed > 0) {
          // Probability-zero event under the null: immediate rejection.
          stat = std::numeric_limits<double>::infinity();
          sawInfinity = true;
        }
      }
      entry.statistic = stat;
      entry.df = support - 1;
      if (std::isinf(stat)) {
        entry.pValue = 0.0;
      } else if (entry.df == 0) {
        entry.pValue = 1.0;
      } else {
        entry.pValue = chiSquareSurvival(stat, entry.df);
      }
      result.perPair.push_back(entry);
    }
  }
  if (result.perPair.empty())
    throw InferenceImpossibleError("gofTest: every state-action pair has zero visits");

  for (const auto& entry : result.perPair) {
    result.pooledStatistic += entry.statistic;
    result.pooledDf += entry.df;
  }
  if (sawInfinity || std::isinf(result.pooledStatistic)) {
    result.pooledStatistic = std::numeric_limits<double>::infinity();
    result.pooledPValue = 0.0;
  } else if (result.pooledDf == 0) {
    result.pooledPValue = 1.0;
  } else {
    result.pooledPValue = chiSquareSurvival(result.pooledStatistic, result.pooledDf);
  }
  result.reject = result.pooledPValue < level;
  return result;
}

IntervalTable transitionIntervals(const Counts& counts, double level, bool bonferroni) {
  if (!(level > 0.0 && level < 1.0))
    throw InvalidInputError("transitionIntervals: level must lie in (0,1)");
  const EstimatedModel est = estimateKernel(counts);

  IntervalTable table;
  table.level = level;
  table.bonferroni = bonferroni;
  double miss = 1.0 - level;
  if (bonferroni) miss /= static_cast<double>(counts.d) * counts.d * counts.k;
  const double z = normalQuantile(1.0 - miss / 2.0);

  for (int s = 0; s < counts.d; ++s) {
    for (int l = 0; l < counts.k; ++l) {
      const std::int64_t n = counts.visits(s, l);
      if (n == 0) {
        table.omittedPairs.emplace_back(s + 1, l + 1);
        continue;
      }
      for (int t = 0; t < counts.d; ++t) {
        IntervalEntry entry;
        entry.state = s + 1;
        entry.action = l + 1;
        entry.nextState = t + 1;
        entry.nVisits = n;
        entry.estimate = est.mHat[static_cast<std::size_t>(l)](s, t);
        entry.halfWidth =
            z * std::sqrt(entry.estimate * (1.0 - entry.estimate) / static_cast<double>(n));
        entry.degenerate = entry.estimate == 0.0 || entry.estimate == 1.0;
        entry.lower = std::max(0.0, entry.estimate - entry.halfWidth);
        entry.upper = std::min(1.0, entry.estimate + entry.halfWidth);
        table.entries.push_back(entry);
      }
    }
  }
  return table;
}

}  // namespace cmc
