#include "cmc/estimation.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace cmc {

Counts count(const Trajectory& traj, int d, int k) {
  if (traj.states.size() < 2)
    throw InvalidInputError("count: trajectory must have length >= 2");
  if (traj.states.size() != traj.actions.size())
    throw InvalidInputError("count: states and actions must have equal length");
  if (d < 1 || k < 1) throw InvalidInputError("count: d and k must be >= 1");

  Counts c;
  c.d = d;
  c.k = k;
  c.horizon = traj.horizon();
  c.visits = CountMatrix::Zero(d, k);
  c.transitions.assign(static_cast<std::size_t>(k), CountMatrix::Zero(d, d));
  for (std::int64_t i = 0; i < c.horizon; ++i) {
    const int s = traj.states[static_cast<std::size_t>(i)];
    const int a = traj.actions[static_cast<std::size_t>(i)];
    const int t = traj.states[static_cast<std::size_t>(i + 1)];
    if (s < 0 || s >= d || t < 0 || t >= d)
      throw InvalidInputError("count: state outside 1..d at step " + std::to_string(i));
    if (a < 0 || a >= k)
      throw InvalidInputError("count: action outside 1..k at step " + std::to_string(i));
    c.visits(s, a) += 1;
    c.transitions[static_cast<std::size_t>(a)](s, t) += 1;
  }
  return c;
}

std::vector<std::pair<int, int>> EstimatedModel::undefinedPairs() const {
  std::vector<std::pair<int, int>> out;
  for (int s = 0; s < d; ++s)
    for (int l = 0; l < k; ++l)
      if (!defined(s, l)) out.emplace_back(s + 1, l + 1);
  return out;
}

TransitionModel EstimatedModel::asModel() const {
  if (!fullyDefined()) {
    std::ostringstream os;
    os << "estimated kernel has undefined rows at pairs (s,l):";
    for (const auto& [s, l] : undefinedPairs()) os << " (" << s << "," << l << ")";
    throw InferenceImpossibleError(os.str());
  }
  return TransitionModel{d, k, mHat};
}

EstimatedModel estimateKernel(const Counts& counts) {
  EstimatedModel est;
  est.d = counts.d;
  est.k = counts.k;
  est.mHat.assign(static_cast<std::size_t>(counts.k), RowMatrixXd::Zero(counts.d, counts.d));
  est.defined.resize(counts.d, counts.k);
  est.pHat.resize(counts.d, counts.k);
  for (int s = 0; s < counts.d; ++s) {
    for (int l = 0; l < counts.k; ++l) {
      const std::int64_t n = counts.visits(s, l);
      est.pHat(s, l) = static_cast<double>(n) / static_cast<double>(counts.horizon);
      est.defined(s, l) = n > 0;
      if (n > 0) {
        for (int t = 0; t < counts.d; ++t)
          est.mHat[static_cast<std::size_t>(l)](s, t) =
              static_cast<double>(counts.transitions[static_cast<std::size_t>(l)](s, t)) /
              static_cast<double>(n);
      }
    }
  }
  return est;
}

Eigen::MatrixXd covarianceProper(const TransitionModel& model) {
  ensureValidModel(model);
  const IndexMap index{model.d, model.k};
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(index.tripleCount(), index.tripleCount());
  for (int s = 0; s < model.d; ++s) {
    for (int l = 0; l < model.k; ++l) {
      const auto& row = model.kernel[static_cast<std::size_t>(l)].row(s);
      for (int t = 0; t < model.d; ++t) {
        for (int t2 = 0; t2 < model.d; ++t2) {
          const double v = (t == t2 ? row(t) : 0.0) - row(t) * row(t2);
          lambda(index.tripleOffset(s, l, t), index.tripleOffset(s, l, t2)) = v;
        }
      }
    }
  }
  return lambda;
}

Eigen::MatrixXd covarianceImproper(const TransitionModel& model, const RowMatrixXd& occupation) {
  ensureValidModel(model);
  if (occupation.rows() != model.d || occupation.cols() != model.k)
    throw InvalidInputError("covarianceImproper: occupation measure must be d x k");
  for (int s = 0; s < model.d; ++s)
    for (int l = 0; l < model.k; ++l)
      if (!(occupation(s, l) > 0.0)) {
        std::ostringstream os;
        os << "covarianceImproper: occupation measure p_(" << s + 1 << ")^(" << l + 1
           << ") = " << occupation(s, l) << " is not strictly positive";
        throw DomainError(os.str());
      }
  const IndexMap index{model.d, model.k};
  Eigen::MatrixXd lambdaBar = covarianceProper(model);
  // Block-diagonal: only (s,l) == (s',l') entries are nonzero, scaled 1/p.
  for (int s = 0; s < model.d; ++s)
    for (int l = 0; l < model.k; ++l) {
      const double scale = 1.0 / occupation(s, l);
      for (int t = 0; t < model.d; ++t)
        for (int t2 = 0; t2 < model.d; ++t2)
          lambdaBar(index.tripleOffset(s, l, t), index.tripleOffset(s, l, t2)) *= scale;
    }
  return lambdaBar;
}

namespace {

ScaledError scaledError(const EstimatedModel& estimate, const TransitionModel& truth,
                        const std::function<double(int, int)>& scaleFor) {
  ensureValidModel(truth);
  if (estimate.d != truth.d || estimate.k != truth.k)
    throw InvalidInputError("scaled error: estimate and truth dimensions differ");
  const IndexMap index{truth.d, truth.k};
  ScaledError err;
  err.xi = Eigen::VectorXd::Zero(index.tripleCount());
  err.missing.assign(static_cast<std::size_t>(index.tripleCount()), 0);
  for (int s = 0; s < truth.d; ++s) {
    for (int l = 0; l < truth.k; ++l) {
      if (!estimate.defined(s, l)) {
        for (int t = 0; t < truth.d; ++t) {
          err.missing[static_cast<std::size_t>(index.tripleOffset(s, l, t))] = 1;
          ++err.missingCount;
        }
        continue;
      }
      const double scale = scaleFor(s, l);
      for (int t = 0; t < truth.d; ++t) {
        const double dev = estimate.mHat[static_cast<std::size_t>(l)](s, t) -
                           truth.kernel[static_cast<std::size_t>(l)](s, t);
        err.xi(index.tripleOffset(s, l, t)) = scale * dev;
      }
    }
  }
  return err;
}

}  // namespace

ScaledError scaledErrorProper(const EstimatedModel& estimate, const TransitionModel& truth,
                              const Counts& counts) {
  if (counts.d != truth.d || counts.k != truth.k)
    throw InvalidInputError("scaledErrorProper: counts dimensions differ from the model");
  return scaledError(estimate, truth, [&counts](int s, int l) {
    return std::sqrt(static_cast<double>(counts.visits(s, l)));
  });
}

ScaledError scaledErrorImproper(const EstimatedModel& estimate, const TransitionModel& truth,
                                std::int64_t n) {
  if (n < 1) throw InvalidInputError("scaledErrorImproper: n must be >= 1");
  const double scale = std::sqrt(static_cast<double>(n));
  return scaledError(estimate, truth, [scale](int, int) { return scale; });
}

RowMatrixXd stationaryPairOccupation(const TransitionModel& model, const RowMatrixXd& table) {
  ensureValidModel(model);
  if (table.rows() != model.d || table.cols() != model.k)
    throw InvalidInputError("stationaryPairOccupation: table must be d x k");
  const IndexMap index{model.d, model.k};
  const int m = index.pairCount();
  Eigen::MatrixXd pairChain(m, m);
  for (int s = 0; s < model.d; ++s)
    for (int l = 0; l < model.k; ++l)
      for (int t = 0; t < model.d; ++t)
        for (int l2 = 0; l2 < model.k; ++l2)
          pairChain(index.pairOffset(s, l), index.pairOffset(t, l2)) =
              model.kernel[static_cast<std::size_t>(l)](s, t) * table(t, l2);

  // Solve pi^T P = pi^T with the normalization sum(pi) = 1 as a least-squares
  // system; the pair chain here is a genuine stochastic matrix.
  Eigen::MatrixXd a(m + 1, m);
  a.topRows(m) = pairChain.transpose() - Eigen::MatrixXd::Identity(m, m);
  a.bottomRows(1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m + 1);
  b(m) = 1.0;
  Eigen::VectorXd pi = a.colPivHouseholderQr().solve(b);

  RowMatrixXd occupation(model.d, model.k);
  for (int s = 0; s < model.d; ++s)
    for (int l = 0; l < model.k; ++l) occupation(s, l) = pi(index.pairOffset(s, l));
  return occupation;
}

}  // namespace cmc
