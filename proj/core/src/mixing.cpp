#include "cmc/mixing.hpp"

#include <cmath>
#include <map>

namespace cmc {

namespace {

std::int64_t ipow(std::int64_t base, int exp) {
  std::int64_t out = 1;
  for (int m = 0; m < exp; ++m) out *= base;
  return out;
}

void checkInstance(const TransitionModel& model, const LoggingPolicy& policy,
                   const Eigen::Ref<const Eigen::VectorXd>& initial) {
  ensureValidModel(model);
  if (policy.actionCount() != model.k)
    throw ConfigError("mixing: policy action count differs from the model");
  if (initial.size() != model.d || std::abs(initial.sum() - 1.0) > kSimplexTol ||
      initial.minCoeff() < 0.0)
    throw InvalidInputError("mixing: initial distribution must be a simplex over states");
}

void checkBudget(std::int64_t paths, const char* what) {
  if (paths > kMixingPathBudget)
    throw CapacityError(std::string(what) + ": instance needs " + std::to_string(paths) +
                        " enumeration steps, budget is " + std::to_string(kMixingPathBudget));
}

double halfL1(const Eigen::Ref<const Eigen::VectorXd>& a,
              const Eigen::Ref<const Eigen::VectorXd>& b) {
  return 0.5 * (a - b).cwiseAbs().sum();
}

double halfL1(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) sum += std::abs(a[m] - b[m]);
  return 0.5 * sum;
}

/// Enumerates every positive-probability pair prefix (x_0,a_0),...,
/// (x_{L-1},a_{L-1}) together with its probability.
template <typename Fn>
void enumeratePairPrefixes(const TransitionModel& model, const LoggingPolicy& policy,
                           const Eigen::Ref<const Eigen::VectorXd>& initial, int length, Fn&& fn) {
  std::vector<StateAction> pairs;
  pairs.reserve(static_cast<std::size_t>(length));

  auto recurse = [&](auto&& self, double prob) -> void {
    const int time = static_cast<int>(pairs.size());
    if (time == length) {
      fn(pairs, prob);
      return;
    }
    // One distribution buffer per recursion level: deeper calls must not
    // clobber the probabilities this level is still iterating over.
    Eigen::VectorXd dist(model.k);
    for (int x = 0; x < model.d; ++x) {
      const double pState =
          time == 0 ? initial(x)
                    : model.kernel[static_cast<std::size_t>(pairs.back().action)](
                          pairs.back().state, x);
      if (pState <= kProbabilityFloor) continue;
      policy.actionDistribution(time, x, History(pairs.data(), pairs.size()), dist);
      for (int a = 0; a < model.k; ++a) {
        if (dist(a) <= kProbabilityFloor) continue;
        pairs.push_back({x, a});
        self(self, prob * pState * dist(a));
        pairs.pop_back();
      }
    }
  };
  recurse(recurse, 1.0);
}

/// Mixture of action distributions grouped by bit-identical component
/// vectors; a single-component mixture collapses to that vector exactly, so
/// policies whose action law ignores the conditioning yield exact zeros.
struct ComponentMixture {
  std::map<std::vector<double>, double> parts;

  void add(const Eigen::VectorXd& vec, double weight) {
    std::vector<double> key(vec.data(), vec.data() + vec.size());
    parts[key] += weight;
  }

  std::vector<double> collapse() const {
    if (parts.size() == 1) return parts.begin()->first;
    const std::size_t k = parts.begin()->first.size();
    std::vector<double> out(k, 0.0);
    double total = 0.0;
    for (const auto& [vec, w] : parts) total += w;
    for (const auto& [vec, w] : parts)
      for (std::size_t m = 0; m < k; ++m) out[m] += (w / total) * vec[m];
    return out;
  }
};

}  // namespace

double etaBarBruteForce(const TransitionModel& model, const LoggingPolicy& policy, int n, int i,
                        int j, const Eigen::Ref<const Eigen::VectorXd>& initial) {
  checkInstance(model, policy, initial);
  if (!(1 <= i && i < j && j <= n)) throw InvalidInputError("etaBar: require 1 <= i < j <= n");
  const int dk = model.d * model.k;
  if (n > 8 || dk > 6)
    throw CapacityError("etaBar: exhaustive enumeration requires n <= 8 and d*k <= 6");
  checkBudget(ipow(dk, n + 1), "etaBar");

  const IndexMap index{model.d, model.k};
  const int suffixLen = n - j + 1;
  const std::int64_t suffixSpace = ipow(dk, suffixLen);

  std::vector<StateAction> pairs;
  pairs.reserve(static_cast<std::size_t>(n) + 1);

  // Conditional suffix law given the conditioning prefix currently in
  // `pairs` (times 0..i); accumulates onto the law vector.
  auto accumulateSuffixLaw = [&](auto&& self, double prob, std::vector<double>& law) -> void {
    const int time = static_cast<int>(pairs.size()) - 1;
    if (time == n) {
      std::int64_t code = 0;
      for (int m = n; m >= j; --m)
        code = code * dk + index.pairOffset(pairs[static_cast<std::size_t>(m)].state,
                                            pairs[static_cast<std::size_t>(m)].action);
      law[static_cast<std::size_t>(code)] += prob;
      return;
    }
    Eigen::VectorXd dist(model.k);  // per level, recursion below reuses the name
    for (int x = 0; x < model.d; ++x) {
      const double pState =
          model.kernel[static_cast<std::size_t>(pairs.back().action)](pairs.back().state, x);
      if (pState <= kProbabilityFloor) continue;
      policy.actionDistribution(time + 1, x, History(pairs.data(), pairs.size()), dist);
      for (int a = 0; a < model.k; ++a) {
        if (dist(a) <= kProbabilityFloor) continue;
        pairs.push_back({x, a});
        self(self, prob * pState * dist(a), law);
        pairs.pop_back();
      }
    }
  };

  double sup = 0.0;
  std::vector<std::vector<double>> laws(static_cast<std::size_t>(dk));
  std::vector<char> valid(static_cast<std::size_t>(dk));

  enumeratePairPrefixes(model, policy, initial, i, [&](const std::vector<StateAction>& h,
                                                       double probH) {
    (void)probH;  // positivity of the conditioning event is what matters
    std::fill(valid.begin(), valid.end(), 0);
    for (int s = 0; s < model.d; ++s) {
      const double pState =
          model.kernel[static_cast<std::size_t>(h.back().action)](h.back().state, s);
      if (pState <= kProbabilityFloor) continue;
      Eigen::VectorXd pol(model.k);
      policy.actionDistribution(i, s, History(h.data(), h.size()), pol);
      for (int l = 0; l < model.k; ++l) {
        if (pol(l) <= kProbabilityFloor) continue;
        const int p = index.pairOffset(s, l);
        valid[static_cast<std::size_t>(p)] = 1;
        auto& law = laws[static_cast<std::size_t>(p)];
        law.assign(static_cast<std::size_t>(suffixSpace), 0.0);
        pairs = h;
        pairs.push_back({s, l});
        accumulateSuffixLaw(accumulateSuffixLaw, 1.0, law);
      }
    }
    for (int p1 = 0; p1 < dk; ++p1) {
      if (!valid[static_cast<std::size_t>(p1)]) continue;
      for (int p2 = p1 + 1; p2 < dk; ++p2) {
        if (!valid[static_cast<std::size_t>(p2)]) continue;
        sup = std::max(sup, halfL1(laws[static_cast<std::size_t>(p1)],
                                   laws[static_cast<std::size_t>(p2)]));
      }
    }
  });
  return sup;
}

double etaBarPairChain(const TransitionModel& model, const LoggingPolicy& policy, int n, int i,
                       int j, const Eigen::Ref<const Eigen::VectorXd>& initial) {
  checkInstance(model, policy, initial);
  if (!(1 <= i && i < j && j <= n)) throw InvalidInputError("etaBar: require 1 <= i < j <= n");
  if (!policy.historyInvariant())
    throw ConfigError("etaBarPairChain: requires a history-invariant policy");

  const IndexMap index{model.d, model.k};
  const int dk = index.pairCount();

  // Pair marginal at time i-1, to know which conditioning pairs can co-occur
  // with a shared positive-probability history.
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(dk);
  {
    RowMatrixXd table = policy.markovActionTable(0, model.d);
    for (int x = 0; x < model.d; ++x)
      for (int a = 0; a < model.k; ++a) mu(index.pairOffset(x, a)) = initial(x) * table(x, a);
    for (int m = 1; m <= i - 1; ++m) {
      Eigen::VectorXd next = Eigen::VectorXd::Zero(dk);
      table = policy.markovActionTable(m, model.d);
      for (int x = 0; x < model.d; ++x)
        for (int a = 0; a < model.k; ++a) {
          const double w = mu(index.pairOffset(x, a));
          if (w <= kProbabilityFloor) continue;
          for (int t = 0; t < model.d; ++t) {
            const double pt = model.kernel[static_cast<std::size_t>(a)](x, t);
            if (pt <= kProbabilityFloor) continue;
            for (int l = 0; l < model.k; ++l) next(index.pairOffset(t, l)) += w * pt * table(t, l);
          }
        }
      mu = next;
    }
  }

  // Law of the pair Z_j given Z_i = (s,l); the suffix-law distance equals the
  // marginal distance at j because both futures evolve by the same kernels.
  auto lawAtJ = [&](int s, int l) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dk);
    RowMatrixXd table = policy.markovActionTable(i + 1, model.d);
    for (int t = 0; t < model.d; ++t) {
      const double pt = model.kernel[static_cast<std::size_t>(l)](s, t);
      for (int l2 = 0; l2 < model.k; ++l2) v(index.pairOffset(t, l2)) += pt * table(t, l2);
    }
    for (int m = i + 1; m < j; ++m) {
      Eigen::VectorXd next = Eigen::VectorXd::Zero(dk);
      table = policy.markovActionTable(m + 1, model.d);
      for (int x = 0; x < model.d; ++x)
        for (int a = 0; a < model.k; ++a) {
          const double w = v(index.pairOffset(x, a));
          if (w <= kProbabilityFloor) continue;
          for (int t = 0; t < model.d; ++t) {
            const double pt = model.kernel[static_cast<std::size_t>(a)](x, t);
            if (pt <= kProbabilityFloor) continue;
            for (int l2 = 0; l2 < model.k; ++l2)
              next(index.pairOffset(t, l2)) += w * pt * table(t, l2);
          }
        }
      v = next;
    }
    return v;
  };

  // A pair (s,l) is admissible after ancestor z when the transition and the
  // policy give it positive probability.
  const RowMatrixXd tableI = policy.markovActionTable(i, model.d);
  std::vector<Eigen::VectorXd> laws(static_cast<std::size_t>(dk));
  std::vector<char> computed(static_cast<std::size_t>(dk), 0);
  double sup = 0.0;
  for (int zx = 0; zx < model.d; ++zx)
    for (int za = 0; za < model.k; ++za) {
      if (mu(index.pairOffset(zx, za)) <= kProbabilityFloor) continue;
      std::vector<int> admissible;
      for (int s = 0; s < model.d; ++s) {
        const double pt = model.kernel[static_cast<std::size_t>(za)](zx, s);
        if (pt <= kProbabilityFloor) continue;
        for (int l = 0; l < model.k; ++l)
          if (tableI(s, l) > kProbabilityFloor) admissible.push_back(index.pairOffset(s, l));
      }
      for (std::size_t m1 = 0; m1 < admissible.size(); ++m1)
        for (std::size_t m2 = m1 + 1; m2 < admissible.size(); ++m2) {
          for (int p : {admissible[m1], admissible[m2]}) {
            if (!computed[static_cast<std::size_t>(p)]) {
              const auto [s, l] = index.pairInverse(p + 1);
              laws[static_cast<std::size_t>(p)] = lawAtJ(s - 1, l - 1);
              computed[static_cast<std::size_t>(p)] = 1;
            }
          }
          sup = std::max(sup, halfL1(laws[static_cast<std::size_t>(admissible[m1])],
                                     laws[static_cast<std::size_t>(admissible[m2])]));
        }
    }
  return sup;
}

namespace {

double gammaSingle(const TransitionModel& model, const LoggingPolicy& policy, int i, int j, int p,
                   const Eigen::Ref<const Eigen::VectorXd>& initial) {
  const IndexMap index{model.d, model.k};
  const int dk = index.pairCount();

  // Bucket keys: the retained history segments plus the state at time p.
  auto encode = [&](const std::vector<StateAction>& pairs, bool keepEarly, int xp) {
    std::uint64_t code = 0;
    if (keepEarly)
      for (int m = 0; m <= i; ++m)
        code = code * static_cast<std::uint64_t>(dk + 1) + 1 +
               static_cast<std::uint64_t>(index.pairOffset(pairs[static_cast<std::size_t>(m)].state,
                                                           pairs[static_cast<std::size_t>(m)].action));
    code = code * static_cast<std::uint64_t>(dk + 1);  // segment separator
    for (int m = i + j; m <= p - 1; ++m)
      code = code * static_cast<std::uint64_t>(dk + 1) + 1 +
             static_cast<std::uint64_t>(index.pairOffset(pairs[static_cast<std::size_t>(m)].state,
                                                         pairs[static_cast<std::size_t>(m)].action));
    return code * static_cast<std::uint64_t>(model.d) + static_cast<std::uint64_t>(xp);
  };

  std::map<std::uint64_t, ComponentMixture> full;
  std::map<std::uint64_t, ComponentMixture> marginal;
  std::map<std::uint64_t, std::uint64_t> parentKey;

  std::vector<StateAction> scratch;
  enumeratePairPrefixes(model, policy, initial, p,
                        [&](const std::vector<StateAction>& pairs, double prob) {
                          for (int xp = 0; xp < model.d; ++xp) {
                            const double pState = model.kernel[static_cast<std::size_t>(
                                pairs.back().action)](pairs.back().state, xp);
                            if (pState <= kProbabilityFloor) continue;
                            const double w = prob * pState;
                            scratch = pairs;
                            Eigen::VectorXd pol(model.k);
                            policy.actionDistribution(p, xp,
                                                      History(scratch.data(), scratch.size()), pol);
                            const std::uint64_t kf = encode(pairs, true, xp);
                            const std::uint64_t km = encode(pairs, false, xp);
                            full[kf].add(pol, w);
                            marginal[km].add(pol, w);
                            parentKey[kf] = km;
                          }
                        });

  std::map<std::uint64_t, std::vector<double>> marginalLaw;
  for (const auto& [key, mix] : marginal) marginalLaw[key] = mix.collapse();

  double sup = 0.0;
  for (const auto& [key, mix] : full)
    sup = std::max(sup, halfL1(mix.collapse(), marginalLaw[parentKey[key]]));
  return sup;
}

}  // namespace

GammaSumReport gammaTripleSum(const TransitionModel& model, const LoggingPolicy& policy,
                              const MixingCaps& caps,
                              const Eigen::Ref<const Eigen::VectorXd>& initial) {
  checkInstance(model, policy, initial);
  if (caps.iMax < 1 || caps.jMax < 1 || caps.pMax < 3)
    throw InvalidInputError("gammaTripleSum: caps must satisfy iMax,jMax >= 1 and pMax >= 3");
  const int dk = model.d * model.k;
  if (dk > 6 || caps.pMax > 8)
    throw CapacityError("gammaTripleSum: exhaustive enumeration requires d*k <= 6 and pMax <= 8");
  std::int64_t work = 0;
  for (int i = 1; i <= caps.iMax; ++i)
    for (int j = 1; j <= caps.jMax; ++j)
      for (int p = i + j + 1; p <= caps.pMax; ++p) work += model.d * ipow(dk, p);
  checkBudget(work, "gammaTripleSum");

  GammaSumReport report;
  report.caps = caps;
  for (int i = 1; i <= caps.iMax; ++i) {
    double sum = 0.0;
    for (int j = 1; j <= caps.jMax; ++j)
      for (int p = i + j + 1; p <= caps.pMax; ++p)
        sum += gammaSingle(model, policy, i, j, p, initial);
    report.perISum.push_back(sum);
    report.supSum = std::max(report.supSum, sum);
  }
  return report;
}

ThetaReport thetaBarMatrix(const TransitionModel& model, const LoggingPolicy& policy, int n,
                           const Eigen::Ref<const Eigen::VectorXd>& initial) {
  checkInstance(model, policy, initial);
  if (n < 2) throw InvalidInputError("thetaBarMatrix: need n >= 2");
  const IndexMap index{model.d, model.k};
  const int dk = index.pairCount();

  ThetaReport report;
  report.thetaBar = Eigen::MatrixXd::Zero(n + 1, n + 1);

  if (policy.historyInvariant()) {
    // Forward pair marginal (for validity) and per-pair state laws.
    std::vector<Eigen::VectorXd> marginals;  // marginals[t] over pairs at time t
    {
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(dk);
      RowMatrixXd table = policy.markovActionTable(0, model.d);
      for (int x = 0; x < model.d; ++x)
        for (int a = 0; a < model.k; ++a) mu(index.pairOffset(x, a)) = initial(x) * table(x, a);
      marginals.push_back(mu);
      for (int m = 1; m <= n; ++m) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(dk);
        table = policy.markovActionTable(m, model.d);
        for (int x = 0; x < model.d; ++x)
          for (int a = 0; a < model.k; ++a) {
            const double w = mu(index.pairOffset(x, a));
            if (w <= kProbabilityFloor) continue;
            for (int t = 0; t < model.d; ++t) {
              const double pt = model.kernel[static_cast<std::size_t>(a)](x, t);
              if (pt <= kProbabilityFloor) continue;
              for (int l = 0; l < model.k; ++l)
                next(index.pairOffset(t, l)) += w * pt * table(t, l);
            }
          }
        marginals.push_back(next);
        mu = next;
      }
    }

    for (int i = 1; i < n; ++i) {
      std::vector<int> validPairs;
      for (int q = 0; q < dk; ++q)
        if (marginals[static_cast<std::size_t>(i)](q) > kProbabilityFloor) validPairs.push_back(q);
      // State law of X_j given (X_i, a_i) = pair, propagated step by step.
      std::vector<Eigen::VectorXd> law(validPairs.size());
      for (std::size_t m = 0; m < validPairs.size(); ++m) {
        const auto [s1, l1] = index.pairInverse(validPairs[m] + 1);
        law[m] = model.kernel[static_cast<std::size_t>(l1 - 1)].row(s1 - 1).transpose();
      }
      for (int j = i + 1; j <= n; ++j) {
        if (j > i + 1) {
          const RowMatrixXd table = policy.markovActionTable(j - 1, model.d);
          RowMatrixXd step = RowMatrixXd::Zero(model.d, model.d);
          for (int x = 0; x < model.d; ++x)
            for (int a = 0; a < model.k; ++a)
              step.row(x) += table(x, a) * model.kernel[static_cast<std::size_t>(a)].row(x);
          for (auto& v : law) v = (v.transpose() * step).transpose();
        }
        double sup = 0.0;
        for (std::size_t m1 = 0; m1 < law.size(); ++m1)
          for (std::size_t m2 = m1 + 1; m2 < law.size(); ++m2)
            sup = std::max(sup, halfL1(law[m1], law[m2]));
        report.thetaBar(i, j) = sup;
      }
    }

    // Geometric tail bound from the one-step Dobrushin contraction when the
    // kernel is strictly positive.
    double minEntry = 1.0;
    for (const auto& m : model.kernel) minEntry = std::min(minEntry, m.minCoeff());
    if (minEntry > 0.0) {
      const double rho = 1.0 - model.d * minEntry;
      std::vector<double> tail;
      for (int i = 1; i < n; ++i)
        tail.push_back(rho > 0.0 ? report.thetaBar(i, n) * rho / (1.0 - rho) : 0.0);
      report.tailBound = std::move(tail);
    }
  } else {
    const int dkCap = model.d * model.k;
    if (n > 8 || dkCap > 6)
      throw CapacityError(
          "thetaBarMatrix: history-dependent policies need exhaustive enumeration, n <= 8 and "
          "d*k <= 6");
    checkBudget(static_cast<std::int64_t>(n) * ipow(dkCap, n) * model.d, "thetaBarMatrix");
    for (int i = 1; i < n; ++i) {
      for (int j = i + 1; j <= n; ++j) {
        // Joint accumulation of (pair at i, X_j).
        std::vector<Eigen::VectorXd> acc(static_cast<std::size_t>(dk),
                                         Eigen::VectorXd::Zero(model.d));
        std::vector<double> total(static_cast<std::size_t>(dk), 0.0);
        enumeratePairPrefixes(model, policy, initial, j,
                              [&](const std::vector<StateAction>& pairs, double prob) {
                                const int q = index.pairOffset(pairs[static_cast<std::size_t>(i)].state,
                                                               pairs[static_cast<std::size_t>(i)].action);
                                for (int xj = 0; xj < model.d; ++xj) {
                                  const double pState = model.kernel[static_cast<std::size_t>(
                                      pairs.back().action)](pairs.back().state, xj);
                                  if (pState <= kProbabilityFloor) continue;
                                  acc[static_cast<std::size_t>(q)](xj) += prob * pState;
                                  total[static_cast<std::size_t>(q)] += prob * pState;
                                }
                              });
        double sup = 0.0;
        for (int q1 = 0; q1 < dk; ++q1) {
          if (total[static_cast<std::size_t>(q1)] <= kProbabilityFloor) continue;
          for (int q2 = q1 + 1; q2 < dk; ++q2) {
            if (total[static_cast<std::size_t>(q2)] <= kProbabilityFloor) continue;
            sup = std::max(
                sup, halfL1((acc[static_cast<std::size_t>(q1)] / total[static_cast<std::size_t>(q1)]).eval(),
                            (acc[static_cast<std::size_t>(q2)] / total[static_cast<std::size_t>(q2)]).eval()));
          }
        }
        report.thetaBar(i, j) = sup;
      }
    }
  }

  for (int i = 1; i < n; ++i) {
    double sum = 0.0;
    for (int j = i + 1; j <= n; ++j) sum += report.thetaBar(i, j);
    report.perISum.push_back(sum);
  }
  return report;
}

MixingReport computeMixingReport(const TransitionModel& model, const LoggingPolicy& policy, int n,
                                 const MixingCaps& caps,
                                 const Eigen::Ref<const Eigen::VectorXd>& initial) {
  checkInstance(model, policy, initial);
  if (n < 2) throw InvalidInputError("computeMixingReport: need n >= 2");
  const int dk = model.d * model.k;
  if (n > 8 || dk > 6)
    throw CapacityError("computeMixingReport: requires n <= 8 and d*k <= 6");
  checkBudget(static_cast<std::int64_t>(n) * n * ipow(dk, n + 1) / 2, "computeMixingReport");

  MixingReport report;
  report.horizon = n;
  report.etaBar = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int i = 1; i < n; ++i)
    for (int j = i + 1; j <= n; ++j)
      report.etaBar(i, j) = etaBarBruteForce(model, policy, n, i, j, initial);

  report.deltaNorm = 1.0;
  for (int i = 1; i <= n; ++i) {
    double sum = 1.0;
    for (int j = i + 1; j <= n; ++j) sum += report.etaBar(i, j);
    report.deltaNorm = std::max(report.deltaNorm, sum);
  }

  report.gamma = gammaTripleSum(model, policy, caps, initial);
  report.theta = thetaBarMatrix(model, policy, n, initial);
  return report;
}

DeltaBoundCheck deltaNormBound(const MixingReport& report, double c, double cTheta) {
  DeltaBoundCheck check;
  check.bound = c + cTheta + 1.0;
  check.margin = check.bound - report.deltaNorm;
  check.ok = check.margin >= -1e-9;
  return check;
}

VisitationGrowthReport visitationGrowth(const std::vector<std::vector<Counts>>& countsPerGrid,
                                        const std::vector<std::int64_t>& grid) {
  if (grid.size() < 3)
    throw DiagnosticError("visitationGrowth: need at least 3 horizon grid points");
  if (countsPerGrid.size() != grid.size())
    throw DiagnosticError("visitationGrowth: grid and counts sizes differ");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (countsPerGrid[g].size() < 50)
      throw DiagnosticError("visitationGrowth: need at least 50 replications per grid point");
    if (g > 0 && grid[g] <= grid[g - 1])
      throw DiagnosticError("visitationGrowth: grid must be strictly increasing");
  }
  const int d = countsPerGrid.front().front().d;
  const int k = countsPerGrid.front().front().k;

  VisitationGrowthReport report;
  report.grid = grid;
  report.exponent = RowMatrixXd::Zero(d, k);
  report.observed.setConstant(d, k, true);
  report.minObservedExponent = std::numeric_limits<double>::infinity();

  for (int s = 0; s < d; ++s) {
    for (int l = 0; l < k; ++l) {
      std::vector<double> logN, logMean;
      bool allPositive = true;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        double mean = 0.0;
        for (const auto& c : countsPerGrid[g]) mean += static_cast<double>(c.visits(s, l));
        mean /= static_cast<double>(countsPerGrid[g].size());
        if (mean <= 0.0) {
          allPositive = false;
          break;
        }
        logN.push_back(std::log(static_cast<double>(grid[g])));
        logMean.push_back(std::log(mean));
      }
      if (!allPositive) {
        report.observed(s, l) = false;
        report.exponent(s, l) = 0.0;
        continue;
      }
      const double m = static_cast<double>(logN.size());
      double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
      for (std::size_t g = 0; g < logN.size(); ++g) {
        sx += logN[g];
        sy += logMean[g];
        sxx += logN[g] * logN[g];
        sxy += logN[g] * logMean[g];
      }
      report.exponent(s, l) = (m * sxy - sx * sy) / (m * sxx - sx * sx);
      report.minObservedExponent = std::min(report.minObservedExponent, report.exponent(s, l));
    }
  }
  if (std::isinf(report.minObservedExponent)) report.minObservedExponent = 0.0;
  return report;
}

}  // namespace cmc
