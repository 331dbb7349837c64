#pragma once

#include <optional>
#include <vector>

#include "cmc/estimation.hpp"
#include "cmc/model.hpp"
#include "cmc/simulate.hpp"

namespace cmc {

/// g(x) = sum_a pi(x,a) gTilde(x,a) and r(x,a) = sum_y M^a(x,y) rTilde(x,a,y).
struct DerivedRewards {
  Eigen::VectorXd g;  // length d
  Eigen::VectorXd r;  // length dk, pair-indexed
};

DerivedRewards expectedRewards(const RewardModel& rewards, const TargetPolicy& policy,
                               const TransitionModel& model);

/// Solves (I - discount Pi M) V = g. Relative residual is checked at 1e-10.
Eigen::VectorXd valueFunction(const TransitionModel& model, const TargetPolicy& policy,
                              const Eigen::VectorXd& g, double discount);

/// Solves (I - discount M Pi) Q = r on the dk-dimensional pair space.
Eigen::VectorXd qFunction(const TransitionModel& model, const TargetPolicy& policy,
                          const Eigen::VectorXd& r, double discount);

/// K: dk x d selector with K[(s-1)k+l, s] = 1, so A = Q - K V.
Eigen::MatrixXd kMatrix(int d, int k);

/// Kronecker product, row-major blocks A(i,j) * B.
Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct ValueBundle {
  Eigen::VectorXd v;  // length d
  Eigen::VectorXd q;  // length dk
  Eigen::VectorXd a;  // length dk
  double discount = 0.0;
};

ValueBundle evaluatePolicy(const TransitionModel& model, const TargetPolicy& policy,
                           const RewardModel& rewards);

/// Asymptotic covariances for sqrt(n)-scaled V/Q/A estimation errors, plus
/// the properly scaled Q covariance. bV and bQ are the bracket operators so
/// that sigmaV = bV lambdaBar bV^T, sigmaQ = bQ lambdaBar bQ^T and
/// sigmaA = (bQ - K bV) lambdaBar (bQ - K bV)^T.
struct CovarianceBundle {
  Eigen::MatrixXd sigmaV;   // d x d
  Eigen::MatrixXd sigmaQ;   // dk x dk
  Eigen::MatrixXd sigmaA;   // dk x dk
  Eigen::MatrixXd lambdaQ;  // dk x dk, properly scaled
  Eigen::MatrixXd bV;       // d x d^2 k
  Eigen::MatrixXd bQ;       // dk x d^2 k
};

CovarianceBundle covarianceBundle(const TransitionModel& model, const TargetPolicy& policy,
                                  const Eigen::VectorXd& v, const Eigen::VectorXd& q,
                                  const Eigen::MatrixXd& lambdaBar, const RowMatrixXd& occupation,
                                  double discount);

/// Greedy policy iteration on the reward r(x,a) derived from rTilde. Starts
/// from the all-first-action policy; ties break toward the lowest action.
struct PolicyIterationResult {
  TargetPolicy piOpt;            // deterministic (0/1 rows)
  Eigen::VectorXd vOpt;          // length d
  Eigen::VectorXd qOpt;          // length dk
  std::vector<Eigen::VectorXi> visitedPolicies;  // action per state, iterates before the last
  int iterations = 0;
};

PolicyIterationResult policyIteration(const TransitionModel& model, const RewardModel& rewards,
                                      double discount);

/// Optimal-policy value inference from logged data: policy iteration on the
/// estimated kernel, per-state normal intervals from the plug-in sigmaV, and
/// a value-gap margin against the best challenger policy.
struct StateInterval {
  double estimate = 0.0;
  double halfWidth = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct OptimalValueReport {
  TargetPolicy piHatOpt;
  Eigen::VectorXd vHat;
  std::vector<StateInterval> intervals;
  double level = 0.95;
  std::optional<double> separationMargin;  // absent when no challenger exists (k = 1)
  std::int64_t horizon = 0;
};

OptimalValueReport optimalValueInterval(const Trajectory& traj, int d, int k,
                                        const RewardModel& rewards, double level);

}  // namespace cmc
