#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cmc/errors.hpp"
#include "cmc/inference.hpp"

namespace cmc {

/// Quantile with linear interpolation on a sorted sample.
inline double quantileSorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InvalidInputError("quantile of an empty sample");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

inline double quantile(std::vector<double> sample, double q) {
  std::sort(sample.begin(), sample.end());
  return quantileSorted(sample, q);
}

/// Kolmogorov-Smirnov distance of a sample against the standard normal.
inline double ksDistanceStandardNormal(std::vector<double> sample) {
  if (sample.empty()) throw InvalidInputError("KS distance of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double dist = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double cdf = normalCdf(sample[i]);
    dist = std::max(dist, std::abs(static_cast<double>(i + 1) / n - cdf));
    dist = std::max(dist, std::abs(cdf - static_cast<double>(i) / n));
  }
  return dist;
}

/// Kolmogorov-Smirnov distance against the chi-square CDF.
inline double ksDistanceChiSquare(std::vector<double> sample, int df) {
  if (sample.empty()) throw InvalidInputError("KS distance of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double dist = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double cdf = chiSquareCdf(sample[i], df);
    dist = std::max(dist, std::abs(static_cast<double>(i + 1) / n - cdf));
    dist = std::max(dist, std::abs(cdf - static_cast<double>(i) / n));
  }
  return dist;
}

inline double pearsonCorrelation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw InvalidInputError("correlation needs two samples of equal size >= 2");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace cmc
