#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cmc/rl_eval.hpp"
#include "cmc/rng.hpp"

using namespace cmc;

namespace {

TransitionModel swapChain() {
  TransitionModel m;
  m.d = 2;
  m.k = 1;
  RowMatrixXd p(2, 2);
  p << 0, 1, 1, 0;
  m.kernel = {p};
  return m;
}

// Deterministic stay/swap instance: action 1 stays, action 2 swaps.
TransitionModel staySwapDeterministic() {
  TransitionModel m;
  m.d = 2;
  m.k = 2;
  RowMatrixXd stay(2, 2), swap(2, 2);
  stay << 1, 0, 0, 1;
  swap << 0, 1, 1, 0;
  m.kernel = {stay, swap};
  return m;
}

RewardModel staySwapRewards() {
  RewardModel r;
  r.gTilde = RowMatrixXd::Zero(2, 2);
  r.gTilde(0, 0) = 1.0;
  r.rTilde.assign(2, RowMatrixXd::Zero(2, 2));
  r.rTilde[0].row(0).setOnes();  // r(1, stay) = 1 regardless of landing state
  r.discount = 0.9;
  return r;
}

TargetPolicy onlyPolicy(int d) {
  TargetPolicy pi;
  pi.pi = RowMatrixXd::Ones(d, 1);
  return pi;
}

TransitionModel randomModel(int d, int k, RandomStream rng) {
  TransitionModel m;
  m.d = d;
  m.k = k;
  std::uint64_t counter = 0;
  for (int l = 0; l < k; ++l) {
    RowMatrixXd mat(d, d);
    for (int s = 0; s < d; ++s) {
      double sum = 0.0;
      for (int t = 0; t < d; ++t) {
        mat(s, t) = 0.05 + rng.uniform(counter++);
        sum += mat(s, t);
      }
      mat.row(s) /= sum;
    }
    m.kernel.push_back(mat);
  }
  return m;
}

}  // namespace

TEST_CASE("expectedRewards reduces gTilde and rTilde correctly") {
  TransitionModel m;
  m.d = 1;
  m.k = 2;
  m.kernel = {RowMatrixXd::Ones(1, 1), RowMatrixXd::Ones(1, 1)};
  RewardModel rewards;
  rewards.gTilde = RowMatrixXd(1, 2);
  rewards.gTilde << 1.0, 0.0;
  rewards.rTilde = {RowMatrixXd::Constant(1, 1, 3.0), RowMatrixXd::Constant(1, 1, 3.0)};
  rewards.discount = 0.5;

  SUBCASE("point mass picks one column") {
    TargetPolicy pi;
    pi.pi = RowMatrixXd(1, 2);
    pi.pi << 1.0, 0.0;
    const auto derived = expectedRewards(rewards, pi, m);
    CHECK(derived.g(0) == 1.0);
  }
  SUBCASE("mixture takes a dot product; constant rTilde passes through") {
    TargetPolicy pi;
    pi.pi = RowMatrixXd(1, 2);
    pi.pi << 0.25, 0.75;
    const auto derived = expectedRewards(rewards, pi, m);
    CHECK(derived.g(0) == doctest::Approx(0.25));
    CHECK(derived.r(0) == doctest::Approx(3.0));
    CHECK(derived.r(1) == doctest::Approx(3.0));
  }
}

TEST_CASE("valueFunction solves the Bellman system") {
  SUBCASE("near-zero discount returns g") {
    const auto m = swapChain();
    Eigen::VectorXd g(2);
    g << 1.0, 0.0;
    const auto v = valueFunction(m, onlyPolicy(2), g, 1e-9);
    CHECK(v(0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(v(1) == doctest::Approx(0.0).epsilon(1e-8));
  }
  SUBCASE("single state is the geometric series") {
    TransitionModel m;
    m.d = 1;
    m.k = 1;
    m.kernel = {RowMatrixXd::Ones(1, 1)};
    Eigen::VectorXd g(1);
    g << 2.0;
    const auto v = valueFunction(m, onlyPolicy(1), g, 0.5);
    CHECK(v(0) == doctest::Approx(4.0));
  }
  SUBCASE("swap chain solved by hand") {
    const auto m = swapChain();
    Eigen::VectorXd g(2);
    g << 1.0, 0.0;
    const auto v = valueFunction(m, onlyPolicy(2), g, 0.5);
    CHECK(v(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(v(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("discount is validated") {
    const auto m = swapChain();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(valueFunction(m, onlyPolicy(2), g, 0.0), InvalidInputError);
    CHECK_THROWS_AS(valueFunction(m, onlyPolicy(2), g, 1.0), InvalidInputError);
  }
}

TEST_CASE("qFunction solves the pair-space system and ties to V") {
  SUBCASE("single pair geometric series") {
    TransitionModel m;
    m.d = 1;
    m.k = 1;
    m.kernel = {RowMatrixXd::Ones(1, 1)};
    Eigen::VectorXd r(1);
    r << 1.0;
    CHECK(qFunction(m, onlyPolicy(1), r, 0.5)(0) == doctest::Approx(2.0));
  }
  SUBCASE("Pi Q = V when g = Pi r") {
    const auto m = staySwapDeterministic();
    TargetPolicy pi;
    pi.pi = RowMatrixXd(2, 2);
    pi.pi << 0.3, 0.7, 0.6, 0.4;
    Eigen::VectorXd r(4);
    r << 1.0, -0.5, 0.25, 2.0;
    const double alpha = 0.8;
    const Eigen::VectorXd q = qFunction(m, pi, r, alpha);
    const Eigen::VectorXd g = blockDiagonal(pi) * r;
    const Eigen::VectorXd v = valueFunction(m, pi, g, alpha);
    CHECK((blockDiagonal(pi) * q - v).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("matches value iteration on the stay/swap instance") {
    const auto m = staySwapDeterministic();
    TargetPolicy pi;
    pi.pi = RowMatrixXd(2, 2);
    pi.pi << 0.5, 0.5, 0.2, 0.8;
    Eigen::VectorXd r(4);
    r << 1.0, 0.0, 0.5, -1.0;
    const double alpha = 0.7;
    const Eigen::VectorXd q = qFunction(m, pi, r, alpha);
    // value-iteration oracle on the dk system
    const RowMatrixXd mp = stackKernel(m) * blockDiagonal(pi);
    Eigen::VectorXd iterate = Eigen::VectorXd::Zero(4);
    for (int sweep = 0; sweep < 1000; ++sweep) iterate = r + alpha * (mp * iterate);
    CHECK((q - iterate).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("value bundle ties A to Q and V and respects the sup-norm bounds") {
  const auto m = staySwapDeterministic();
  TargetPolicy pi;
  pi.pi = RowMatrixXd(2, 2);
  pi.pi << 0.3, 0.7, 0.6, 0.4;
  const auto rewards = staySwapRewards();
  const auto bundle = evaluatePolicy(m, pi, rewards);
  const Eigen::MatrixXd k = kMatrix(2, 2);
  CHECK((bundle.a - (bundle.q - k * bundle.v)).cwiseAbs().maxCoeff() == 0.0);
  const double gMax = rewards.gTilde.cwiseAbs().maxCoeff();
  CHECK(bundle.v.cwiseAbs().maxCoeff() <= gMax / (1.0 - rewards.discount) + 1e-12);
  double rMax = 0.0;
  for (const auto& rt : rewards.rTilde) rMax = std::max(rMax, rt.cwiseAbs().maxCoeff());
  CHECK(bundle.q.cwiseAbs().maxCoeff() <= rMax / (1.0 - rewards.discount) + 1e-12);
}

TEST_CASE("covarianceBundle is bilinear in lambdaBar and zero for degenerate models") {
  const auto m = staySwapDeterministic();
  TargetPolicy pi;
  pi.pi = RowMatrixXd(2, 2);
  pi.pi << 0.3, 0.7, 0.6, 0.4;
  Eigen::VectorXd v(2), q(4);
  v << 1.0, 2.0;
  q << 0.5, 1.5, -0.5, 1.0;
  RowMatrixXd occupation = RowMatrixXd::Constant(2, 2, 0.25);

  SUBCASE("zero lambdaBar gives zero covariances") {
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(8, 8);
    const auto bundle = covarianceBundle(m, pi, v, q, zero, occupation, 0.9);
    CHECK(bundle.sigmaV.cwiseAbs().maxCoeff() == 0.0);
    CHECK(bundle.sigmaQ.cwiseAbs().maxCoeff() == 0.0);
    CHECK(bundle.sigmaA.cwiseAbs().maxCoeff() == 0.0);
    CHECK(bundle.lambdaQ.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("d=k=1 deterministic model has zero lambdaBar and zero sigmaV") {
    TransitionModel single;
    single.d = 1;
    single.k = 1;
    single.kernel = {RowMatrixXd::Ones(1, 1)};
    RowMatrixXd p1 = RowMatrixXd::Ones(1, 1);
    const Eigen::MatrixXd lambdaBar = covarianceImproper(single, p1);
    CHECK(lambdaBar(0, 0) == 0.0);
    Eigen::VectorXd v1(1), q1(1);
    v1 << 3.0;
    q1 << 3.0;
    const auto bundle = covarianceBundle(single, onlyPolicy(1), v1, q1, lambdaBar, p1, 0.9);
    CHECK(bundle.sigmaV(0, 0) == 0.0);
  }
}

TEST_CASE("sigmaA assembled from parts equals the direct assembly") {
  // Random-ish stochastic instance; sigmaA must equal
  // (bQ - K bV) lambdaBar (bQ - K bV)^T assembled both ways.
  const auto m = randomModel(3, 2, RandomStream(2024));
  TargetPolicy pi;
  pi.pi = RowMatrixXd(3, 2);
  pi.pi << 0.7, 0.3, 0.4, 0.6, 0.5, 0.5;
  RowMatrixXd occupation = RowMatrixXd::Constant(3, 2, 1.0 / 6.0);
  const Eigen::MatrixXd lambdaBar = covarianceImproper(m, occupation);
  Eigen::VectorXd v(3), q(6);
  v << 1.0, -2.0, 0.5;
  q << 0.2, 0.4, -0.3, 1.1, 0.9, -0.7;
  const auto bundle = covarianceBundle(m, pi, v, q, lambdaBar, occupation, 0.9);
  const Eigen::MatrixXd bA = bundle.bQ - kMatrix(3, 2) * bundle.bV;
  const Eigen::MatrixXd direct = bA * lambdaBar * bA.transpose();
  CHECK((bundle.sigmaA - direct).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((bundle.sigmaV - bundle.bV * lambdaBar * bundle.bV.transpose()).cwiseAbs().maxCoeff() <
        1e-12);

  // symmetry and positive semidefiniteness
  for (const Eigen::MatrixXd* sigma : {&bundle.sigmaV, &bundle.sigmaQ, &bundle.sigmaA}) {
    CHECK((*sigma - sigma->transpose()).cwiseAbs().maxCoeff() < 1e-9);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(*sigma);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
  }

  // lambdaQ entries are sqrt(p p') sigmaQ entries by definition.
  const IndexMap index{3, 2};
  for (int p1 = 0; p1 < 6; ++p1)
    for (int p2 = 0; p2 < 6; ++p2) {
      const auto [s1, l1] = index.pairInverse(p1 + 1);
      const auto [s2, l2] = index.pairInverse(p2 + 1);
      const double direct2 = std::sqrt(occupation(s1 - 1, l1 - 1) * occupation(s2 - 1, l2 - 1)) *
                             bundle.sigmaQ(p1, p2);
      CHECK(std::abs(bundle.lambdaQ(p1, p2) - direct2) < 1e-12);
    }
}

TEST_CASE("policy iteration solves the stay/swap instance") {
  const auto m = staySwapDeterministic();
  const auto rewards = staySwapRewards();
  const auto result = policyIteration(m, rewards, 0.9);
  CHECK(result.piOpt.pi(0, 0) == 1.0);  // stay at state 1
  CHECK(result.piOpt.pi(1, 1) == 1.0);  // swap at state 2
  CHECK(result.vOpt(0) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(result.vOpt(1) == doctest::Approx(9.0).epsilon(1e-9));

  // enumeration oracle: the returned policy beats all four deterministic ones
  const IndexMap index{2, 2};
  Eigen::VectorXd r(4);
  for (int s = 0; s < 2; ++s)
    for (int l = 0; l < 2; ++l) {
      double val = 0.0;
      for (int t = 0; t < 2; ++t)
        val += m.kernel[static_cast<std::size_t>(l)](s, t) *
               rewards.rTilde[static_cast<std::size_t>(l)](s, t);
      r(index.pairOffset(s, l)) = val;
    }
  for (int a0 = 0; a0 < 2; ++a0)
    for (int a1 = 0; a1 < 2; ++a1) {
      TargetPolicy candidate;
      candidate.pi = RowMatrixXd::Zero(2, 2);
      candidate.pi(0, a0) = 1.0;
      candidate.pi(1, a1) = 1.0;
      Eigen::VectorXd g(2);
      g << r(index.pairOffset(0, a0)), r(index.pairOffset(1, a1));
      const auto v = valueFunction(m, candidate, g, 0.9);
      CHECK(v(0) <= result.vOpt(0) + 1e-9);
      CHECK(v(1) <= result.vOpt(1) + 1e-9);
    }
}

TEST_CASE("policy iteration with a single action returns the only policy") {
  const auto m = swapChain();
  RewardModel rewards;
  rewards.gTilde = RowMatrixXd::Zero(2, 1);
  rewards.rTilde = {RowMatrixXd::Zero(2, 2)};
  rewards.rTilde[0](0, 0) = 1.0;
  rewards.rTilde[0](0, 1) = 1.0;
  rewards.discount = 0.5;
  const auto result = policyIteration(m, rewards, 0.5);
  CHECK(result.piOpt.pi(0, 0) == 1.0);
  Eigen::VectorXd g(2);
  g << 1.0, 0.0;
  const auto v = valueFunction(m, onlyPolicy(2), g, 0.5);
  CHECK((result.vOpt - v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("no single-state action change improves the returned policy") {
  const auto m = randomModel(3, 3, RandomStream(77));
  RewardModel rewards;
  rewards.gTilde = RowMatrixXd::Zero(3, 3);
  rewards.rTilde.assign(3, RowMatrixXd::Zero(3, 3));
  RandomStream rng(78);
  std::uint64_t counter = 0;
  for (auto& rt : rewards.rTilde)
    for (int s = 0; s < 3; ++s)
      for (int t = 0; t < 3; ++t) rt(s, t) = rng.uniform(counter++) * 2.0 - 1.0;
  rewards.discount = 0.85;
  const auto result = policyIteration(m, rewards, 0.85);

  const IndexMap index{3, 3};
  Eigen::VectorXd r(9);
  for (int s = 0; s < 3; ++s)
    for (int l = 0; l < 3; ++l) {
      double val = 0.0;
      for (int t = 0; t < 3; ++t)
        val += m.kernel[static_cast<std::size_t>(l)](s, t) *
               rewards.rTilde[static_cast<std::size_t>(l)](s, t);
      r(index.pairOffset(s, l)) = val;
    }
  Eigen::VectorXi actions(3);
  for (int s = 0; s < 3; ++s)
    for (int l = 0; l < 3; ++l)
      if (result.piOpt.pi(s, l) == 1.0) actions(s) = l;
  for (int s = 0; s < 3; ++s)
    for (int l = 0; l < 3; ++l) {
      if (l == actions(s)) continue;
      Eigen::VectorXi deviated = actions;
      deviated(s) = l;
      TargetPolicy candidate;
      candidate.pi = RowMatrixXd::Zero(3, 3);
      for (int x = 0; x < 3; ++x) candidate.pi(x, deviated(x)) = 1.0;
      Eigen::VectorXd g(3);
      for (int x = 0; x < 3; ++x) g(x) = r(index.pairOffset(x, deviated(x)));
      const auto v = valueFunction(m, candidate, g, 0.85);
      for (int x = 0; x < 3; ++x) CHECK(v(x) <= result.vOpt(x) + 1e-9);
    }
}

TEST_CASE("policy iteration is invariant to positive affine reward maps") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const int d = 2 + static_cast<int>(seed % 3);
    const int k = 2 + static_cast<int>((seed + 1) % 3);
    const auto m = randomModel(d, k, RandomStream(seed * 101));
    RewardModel rewards;
    rewards.gTilde = RowMatrixXd::Zero(d, k);
    rewards.rTilde.assign(static_cast<std::size_t>(k), RowMatrixXd::Zero(d, d));
    RandomStream rng(seed * 202);
    std::uint64_t counter = 0;
    for (auto& rt : rewards.rTilde)
      for (int s = 0; s < d; ++s)
        for (int t = 0; t < d; ++t) rt(s, t) = rng.uniform(counter++) * 4.0 - 2.0;
    rewards.discount = 0.8;

    const auto base = policyIteration(m, rewards, 0.8);
    RewardModel scaled = rewards;
    for (auto& rt : scaled.rTilde) rt = (2.5 * rt).eval() + RowMatrixXd::Constant(d, d, 0.7);
    const auto transformed = policyIteration(m, scaled, 0.8);
    CHECK((base.piOpt.pi - transformed.piOpt.pi).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("optimalValueInterval demands full coverage of the pairs") {
  Trajectory traj;
  traj.states = {0, 0, 0, 0, 0};
  traj.actions = {0, 0, 0, 0, 0};
  RewardModel rewards;
  rewards.gTilde = RowMatrixXd::Zero(2, 2);
  rewards.rTilde.assign(2, RowMatrixXd::Zero(2, 2));
  rewards.discount = 0.9;
  CHECK_THROWS_AS(optimalValueInterval(traj, 2, 2, rewards, 0.95), InferenceImpossibleError);
}

TEST_CASE("optimal value intervals shrink at the root-n rate") {
  // Soft stay/swap instance (stochastic kernel, so sigmaV is nondegenerate).
  TransitionModel m;
  m.d = 2;
  m.k = 2;
  RowMatrixXd stay(2, 2), swap(2, 2);
  stay << 0.9, 0.1, 0.1, 0.9;
  swap << 0.1, 0.9, 0.9, 0.1;
  m.kernel = {stay, swap};
  const auto rewards = staySwapRewards();
  RowMatrixXd table = RowMatrixXd::Constant(2, 2, 0.5);
  StationaryMarkovPolicy logging(2, table);

  const std::int64_t nSmall = 20000;
  auto meanHalfWidth = [&](std::int64_t n, std::uint64_t seed) {
    double total = 0.0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
      const auto traj = simulate(m, logging, n, uniformInitial(2),
                                 RandomStream(seed).sub(static_cast<std::uint64_t>(rep)));
      const auto report = optimalValueInterval(traj, 2, 2, rewards, 0.95);
      total += report.intervals[0].halfWidth;
    }
    return total / reps;
  };
  const double hwSmall = meanHalfWidth(nSmall, 404);
  const double hwLarge = meanHalfWidth(4 * nSmall, 405);
  CHECK(hwLarge / hwSmall == doctest::Approx(0.5).epsilon(0.10));

  // k = 1 reduces to the plug-in interval of the only policy
  TransitionModel single;
  single.d = 2;
  single.k = 1;
  single.kernel = {m.kernel[0]};
  RewardModel singleRewards;
  singleRewards.gTilde = RowMatrixXd::Zero(2, 1);
  singleRewards.rTilde = {rewards.rTilde[0]};
  singleRewards.discount = 0.9;
  StationaryMarkovPolicy constantLogging(2, RowMatrixXd::Ones(2, 1));
  const auto traj = simulate(single, constantLogging, 5000, uniformInitial(2), RandomStream(11));
  const auto report = optimalValueInterval(traj, 2, 1, singleRewards, 0.95);
  CHECK_FALSE(report.separationMargin.has_value());
  CHECK(report.intervals.size() == 2);
  CHECK(report.piHatOpt.pi(0, 0) == 1.0);
}
