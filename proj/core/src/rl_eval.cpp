#include "cmc/rl_eval.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cmc/inference.hpp"

namespace cmc {

namespace {

void checkDiscount(double discount) {
  if (!(discount > 0.0 && discount < 1.0))
    throw InvalidInputError("discount must lie strictly in (0,1)");
}

Eigen::VectorXd solveChecked(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs,
                             const char* what) {
  Eigen::VectorXd x = a.partialPivLu().solve(rhs);
  const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  const double residual = (a * x - rhs).lpNorm<Eigen::Infinity>();
  if (!(residual <= 1e-10 * scale)) {
    std::ostringstream os;
    os << what << ": linear solve residual " << residual << " exceeds 1e-10 * " << scale;
    throw std::runtime_error(os.str());
  }
  return x;
}

}  // namespace

DerivedRewards expectedRewards(const RewardModel& rewards, const TargetPolicy& policy,
                               const TransitionModel& model) {
  ensureValidRewards(rewards);
  ensureValidTargetPolicy(policy);
  ensureValidModel(model);
  const int d = model.d, k = model.k;
  if (rewards.gTilde.rows() != d || rewards.gTilde.cols() != k || policy.pi.rows() != d ||
      policy.pi.cols() != k)
    throw InvalidInputError("expectedRewards: dimension mismatch");

  DerivedRewards out;
  out.g = Eigen::VectorXd::Zero(d);
  out.r = Eigen::VectorXd::Zero(d * k);
  const IndexMap index{d, k};
  for (int s = 0; s < d; ++s) {
    for (int l = 0; l < k; ++l) {
      out.g(s) += policy.pi(s, l) * rewards.gTilde(s, l);
      double r = 0.0;
      for (int t = 0; t < d; ++t)
        r += model.kernel[static_cast<std::size_t>(l)](s, t) *
             rewards.rTilde[static_cast<std::size_t>(l)](s, t);
      out.r(index.pairOffset(s, l)) = r;
    }
  }
  return out;
}

Eigen::VectorXd valueFunction(const TransitionModel& model, const TargetPolicy& policy,
                              const Eigen::VectorXd& g, double discount) {
  checkDiscount(discount);
  if (g.size() != model.d) throw InvalidInputError("valueFunction: g must have length d");
  const RowMatrixXd pi = blockDiagonal(policy);
  const RowMatrixXd stacked = stackKernel(model);
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(model.d, model.d) - discount * (pi * stacked);
  return solveChecked(system, g, "valueFunction");
}

Eigen::VectorXd qFunction(const TransitionModel& model, const TargetPolicy& policy,
                          const Eigen::VectorXd& r, double discount) {
  checkDiscount(discount);
  if (r.size() != model.d * model.k)
    throw InvalidInputError("qFunction: r must have length d*k");
  const RowMatrixXd pi = blockDiagonal(policy);
  const RowMatrixXd stacked = stackKernel(model);
  const int m = model.d * model.k;
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(m, m) - discount * (stacked * pi);
  return solveChecked(system, r, "qFunction");
}

Eigen::MatrixXd kMatrix(int d, int k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d * k, d);
  for (int s = 0; s < d; ++s)
    for (int l = 0; l < k; ++l) out(s * k + l, s) = 1.0;
  return out;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

ValueBundle evaluatePolicy(const TransitionModel& model, const TargetPolicy& policy,
                           const RewardModel& rewards) {
  const DerivedRewards derived = expectedRewards(rewards, policy, model);
  ValueBundle bundle;
  bundle.discount = rewards.discount;
  bundle.v = valueFunction(model, policy, derived.g, rewards.discount);
  bundle.q = qFunction(model, policy, derived.r, rewards.discount);
  bundle.a = bundle.q - kMatrix(model.d, model.k) * bundle.v;
  return bundle;
}

CovarianceBundle covarianceBundle(const TransitionModel& model, const TargetPolicy& policy,
                                  const Eigen::VectorXd& v, const Eigen::VectorXd& q,
                                  const Eigen::MatrixXd& lambdaBar, const RowMatrixXd& occupation,
                                  double discount) {
  checkDiscount(discount);
  ensureValidModel(model);
  const int d = model.d, k = model.k;
  const IndexMap index{d, k};
  if (lambdaBar.rows() != index.tripleCount() || lambdaBar.cols() != index.tripleCount())
    throw InvalidInputError("covarianceBundle: lambdaBar must be d^2 k square");
  if (v.size() != d || q.size() != d * k)
    throw InvalidInputError("covarianceBundle: V/Q length mismatch");
  if (occupation.rows() != d || occupation.cols() != k)
    throw InvalidInputError("covarianceBundle: occupation measure must be d x k");

  const RowMatrixXd pi = blockDiagonal(policy);
  const RowMatrixXd stacked = stackKernel(model);
  const Eigen::MatrixXd piM = pi * stacked;  // d x d
  const Eigen::MatrixXd mPi = stacked * pi;  // dk x dk

  const Eigen::MatrixXd resolventV =
      (Eigen::MatrixXd::Identity(d, d) - discount * piM).partialPivLu().inverse();
  const Eigen::MatrixXd resolventQ =
      (Eigen::MatrixXd::Identity(d * k, d * k) - discount * mPi).partialPivLu().inverse();

  CovarianceBundle out;
  out.bV = discount * kron(resolventV * pi, v.transpose());
  out.bQ = discount * kron(resolventQ, (q.transpose() * pi.transpose()).eval());
  out.sigmaV = out.bV * lambdaBar * out.bV.transpose();
  out.sigmaQ = out.bQ * lambdaBar * out.bQ.transpose();
  const Eigen::MatrixXd bA = out.bQ - kMatrix(d, k) * out.bV;
  out.sigmaA = bA * lambdaBar * bA.transpose();

  out.lambdaQ.resize(d * k, d * k);
  for (int s = 0; s < d; ++s)
    for (int l = 0; l < k; ++l)
      for (int s2 = 0; s2 < d; ++s2)
        for (int l2 = 0; l2 < k; ++l2)
          out.lambdaQ(index.pairOffset(s, l), index.pairOffset(s2, l2)) =
              std::sqrt(occupation(s, l) * occupation(s2, l2)) *
              out.sigmaQ(index.pairOffset(s, l), index.pairOffset(s2, l2));
  return out;
}

PolicyIterationResult policyIteration(const TransitionModel& model, const RewardModel& rewards,
                                      double discount) {
  checkDiscount(discount);
  ensureValidModel(model);
  ensureValidRewards(rewards);
  const int d = model.d, k = model.k;
  const IndexMap index{d, k};

  // Per-stage reward r(x,a) derived from the transition rewards.
  Eigen::VectorXd r(d * k);
  for (int s = 0; s < d; ++s)
    for (int l = 0; l < k; ++l) {
      double v = 0.0;
      for (int t = 0; t < d; ++t)
        v += model.kernel[static_cast<std::size_t>(l)](s, t) *
             rewards.rTilde[static_cast<std::size_t>(l)](s, t);
      r(index.pairOffset(s, l)) = v;
    }

  auto evaluate = [&](const Eigen::VectorXi& actions) {
    // V solves V(s) = r(s, a_s) + discount * sum_t M^(a_s)(s,t) V(t).
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd rhs(d);
    for (int s = 0; s < d; ++s) {
      const int a = actions(s);
      rhs(s) = r(index.pairOffset(s, a));
      for (int t = 0; t < d; ++t)
        system(s, t) -= discount * model.kernel[static_cast<std::size_t>(a)](s, t);
    }
    return solveChecked(system, rhs, "policyIteration");
  };

  std::int64_t maxIterations = 1;
  for (int s = 0; s < d; ++s) {
    maxIterations *= k;
    if (maxIterations > (std::int64_t{1} << 40)) break;  // saturate the classic k^d bound
  }

  PolicyIterationResult result;
  Eigen::VectorXi actions = Eigen::VectorXi::Zero(d);
  Eigen::VectorXd v = evaluate(actions);
  for (std::int64_t it = 0; it < maxIterations + 1; ++it) {
    ++result.iterations;
    // Greedy improvement, ties toward the lowest action index.
    Eigen::VectorXi next(d);
    Eigen::VectorXd qGreedy(d * k);
    for (int s = 0; s < d; ++s) {
      int best = 0;
      double bestValue = -std::numeric_limits<double>::infinity();
      for (int l = 0; l < k; ++l) {
        double qsl = r(index.pairOffset(s, l));
        for (int t = 0; t < d; ++t)
          qsl += discount * model.kernel[static_cast<std::size_t>(l)](s, t) * v(t);
        qGreedy(index.pairOffset(s, l)) = qsl;
        if (qsl > bestValue) {
          bestValue = qsl;
          best = l;
        }
      }
      next(s) = best;
    }
    if ((next.array() == actions.array()).all()) {
      // Converged: certify with the Bellman optimality residual.
      double residual = 0.0;
      for (int s = 0; s < d; ++s) {
        double bestQ = -std::numeric_limits<double>::infinity();
        for (int l = 0; l < k; ++l) bestQ = std::max(bestQ, qGreedy(index.pairOffset(s, l)));
        residual = std::max(residual, std::abs(v(s) - bestQ));
      }
      if (!(residual <= 1e-9 * std::max(1.0, v.lpNorm<Eigen::Infinity>())))
        throw std::runtime_error("policyIteration: Bellman optimality residual too large");
      result.piOpt.pi = RowMatrixXd::Zero(d, k);
      for (int s = 0; s < d; ++s) result.piOpt.pi(s, actions(s)) = 1.0;
      result.vOpt = v;
      result.qOpt = qGreedy;
      return result;
    }
    result.visitedPolicies.push_back(actions);
    actions = next;
    v = evaluate(actions);
  }
  throw std::runtime_error("policyIteration: failed to converge within the k^d bound");
}

OptimalValueReport optimalValueInterval(const Trajectory& traj, int d, int k,
                                        const RewardModel& rewards, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw InvalidInputError("optimalValueInterval: level must lie in (0,1)");
  ensureValidRewards(rewards);
  const Counts counts = count(traj, d, k);
  const EstimatedModel est = estimateKernel(counts);
  const TransitionModel mHat = est.asModel();  // throws naming undefined pairs

  const PolicyIterationResult pi = policyIteration(mHat, rewards, rewards.discount);

  OptimalValueReport report;
  report.piHatOpt = pi.piOpt;
  report.vHat = pi.vOpt;
  report.level = level;
  report.horizon = counts.horizon;

  // Plug-in covariance of sqrt(n) (vHat - v) under the estimated optimum.
  const Eigen::MatrixXd lambdaBar = covarianceImproper(mHat, est.pHat);
  const DerivedRewards derived = expectedRewards(rewards, pi.piOpt, mHat);
  const Eigen::VectorXd qHat = qFunction(mHat, pi.piOpt, derived.r, rewards.discount);
  const CovarianceBundle cov = covarianceBundle(mHat, pi.piOpt, pi.vOpt, qHat, lambdaBar,
                                                est.pHat, rewards.discount);

  const double z = normalQuantile(1.0 - (1.0 - level) / 2.0);
  report.intervals.reserve(static_cast<std::size_t>(d));
  for (int s = 0; s < d; ++s) {
    StateInterval interval;
    interval.estimate = pi.vOpt(s);
    const double variance = std::max(0.0, cov.sigmaV(s, s));
    interval.halfWidth = z * std::sqrt(variance / static_cast<double>(counts.horizon));
    interval.lower = interval.estimate - interval.halfWidth;
    interval.upper = interval.estimate + interval.halfWidth;
    report.intervals.push_back(interval);
  }

  // Separation diagnostic: smallest state-wise value gap over the challenger
  // policies (policy-iteration iterates plus all one-state deviations).
  std::vector<Eigen::VectorXi> challengers = pi.visitedPolicies;
  Eigen::VectorXi optActions(d);
  for (int s = 0; s < d; ++s) {
    for (int l = 0; l < k; ++l)
      if (pi.piOpt.pi(s, l) == 1.0) optActions(s) = l;
  }
  for (int s = 0; s < d; ++s)
    for (int l = 0; l < k; ++l) {
      if (l == optActions(s)) continue;
      Eigen::VectorXi challenger = optActions;
      challenger(s) = l;
      challengers.push_back(challenger);
    }
  if (!challengers.empty()) {
    const IndexMap index{d, k};
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& actions : challengers) {
      if ((actions.array() == optActions.array()).all()) continue;
      TargetPolicy challengerPolicy;
      challengerPolicy.pi = RowMatrixXd::Zero(d, k);
      for (int s = 0; s < d; ++s) challengerPolicy.pi(s, actions(s)) = 1.0;
      Eigen::VectorXd g(d);
      for (int s = 0; s < d; ++s) g(s) = derived.r(index.pairOffset(s, actions(s)));
      const Eigen::VectorXd vChallenger =
          valueFunction(mHat, challengerPolicy, g, rewards.discount);
      margin = std::min(margin, (pi.vOpt - vChallenger).minCoeff());
    }
    if (std::isfinite(margin)) report.separationMargin = margin;
  }
  return report;
}

}  // namespace cmc
