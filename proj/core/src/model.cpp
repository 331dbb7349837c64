#include "cmc/model.hpp"

#include <cmath>
#include <sstream>

namespace cmc {

namespace {

std::string describeCell(int l1, int s1) {
  std::ostringstream os;
  os << "(l=" << l1 << ",s=" << s1 << ")";
  return os.str();
}

void throwIfInvalid(const ValidationReport& report, const char* what) {
  if (report.empty()) return;
  std::ostringstream os;
  os << "invalid " << what << ":";
  for (const auto& v : report) os << " [" << v.message << "]";
  throw ValidationError(os.str());
}

}  // namespace

ValidationReport validateModel(const TransitionModel& model) {
  ValidationReport report;
  if (model.d < 1) report.push_back({0, 0, "state count d must be >= 1"});
  if (model.k < 1) report.push_back({0, 0, "action count k must be >= 1"});
  if (static_cast<int>(model.kernel.size()) != model.k) {
    report.push_back({0, 0, "kernel has " + std::to_string(model.kernel.size()) +
                                " action matrices, expected " + std::to_string(model.k)});
    return report;
  }
  for (int l = 0; l < model.k; ++l) {
    const auto& m = model.kernel[l];
    if (m.rows() != model.d || m.cols() != model.d) {
      report.push_back({l + 1, 0, "kernel matrix for action " + std::to_string(l + 1) +
                                      " is not d x d"});
      continue;
    }
    for (int s = 0; s < model.d; ++s) {
      double sum = 0.0;
      for (int t = 0; t < model.d; ++t) {
        const double v = m(s, t);
        if (!std::isfinite(v)) {
          report.push_back({l + 1, s + 1, "non-finite entry at " + describeCell(l + 1, s + 1)});
        } else if (v < 0.0) {
          report.push_back({l + 1, s + 1, "negative entry " + std::to_string(v) + " at " +
                                              describeCell(l + 1, s + 1)});
        } else if (v > 1.0) {
          report.push_back({l + 1, s + 1, "entry " + std::to_string(v) + " above 1 at " +
                                              describeCell(l + 1, s + 1)});
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > kSimplexTol) {
        std::ostringstream os;
        os << "row sum " << sum << " at " << describeCell(l + 1, s + 1);
        report.push_back({l + 1, s + 1, os.str()});
      }
    }
  }
  return report;
}

void ensureValidModel(const TransitionModel& model) {
  throwIfInvalid(validateModel(model), "transition model");
}

int IndexMap::tripleIndex(int s, int l, int t) const {
  if (s < 1 || s > d || t < 1 || t > d || l < 1 || l > k)
    throw std::out_of_range("tripleIndex: (s,l,t) out of range");
  return (s - 1) * d * k + (l - 1) * d + t;
}

std::tuple<int, int, int> IndexMap::tripleInverse(int flat) const {
  if (flat < 1 || flat > d * d * k) throw std::out_of_range("tripleInverse: index out of range");
  const int z = flat - 1;
  const int t = z % d;
  const int l = (z / d) % k;
  const int s = z / (d * k);
  return {s + 1, l + 1, t + 1};
}

int IndexMap::pairIndex(int s, int l) const {
  if (s < 1 || s > d || l < 1 || l > k) throw std::out_of_range("pairIndex: (s,l) out of range");
  return (s - 1) * k + l;
}

std::pair<int, int> IndexMap::pairInverse(int flat) const {
  if (flat < 1 || flat > d * k) throw std::out_of_range("pairInverse: index out of range");
  const int z = flat - 1;
  return {z / k + 1, z % k + 1};
}

ValidationReport validateRewards(const RewardModel& rewards) {
  ValidationReport report;
  const int d = static_cast<int>(rewards.gTilde.rows());
  const int k = static_cast<int>(rewards.gTilde.cols());
  if (d < 1 || k < 1) report.push_back({0, 0, "gTilde must be a d x k matrix with d,k >= 1"});
  if (!rewards.gTilde.allFinite()) report.push_back({0, 0, "non-finite entry in gTilde"});
  if (static_cast<int>(rewards.rTilde.size()) != k) {
    report.push_back({0, 0, "rTilde has " + std::to_string(rewards.rTilde.size()) +
                                " action matrices, expected " + std::to_string(k)});
  } else {
    for (int l = 0; l < k; ++l) {
      const auto& m = rewards.rTilde[l];
      if (m.rows() != d || m.cols() != d) {
        report.push_back({l + 1, 0, "rTilde matrix for action " + std::to_string(l + 1) +
                                        " is not d x d"});
      } else if (!m.allFinite()) {
        report.push_back({l + 1, 0, "non-finite entry in rTilde for action " +
                                        std::to_string(l + 1)});
      }
    }
  }
  if (!(rewards.discount > 0.0 && rewards.discount < 1.0)) {
    report.push_back({0, 0, "discount must lie strictly in (0,1), got " +
                                std::to_string(rewards.discount)});
  }
  return report;
}

void ensureValidRewards(const RewardModel& rewards) {
  throwIfInvalid(validateRewards(rewards), "reward model");
}

ValidationReport validateTargetPolicy(const TargetPolicy& policy) {
  ValidationReport report;
  const int d = static_cast<int>(policy.pi.rows());
  const int k = static_cast<int>(policy.pi.cols());
  if (d < 1 || k < 1) {
    report.push_back({0, 0, "policy table must be d x k with d,k >= 1"});
    return report;
  }
  for (int s = 0; s < d; ++s) {
    double sum = 0.0;
    for (int l = 0; l < k; ++l) {
      const double v = policy.pi(s, l);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        report.push_back({l + 1, s + 1, "policy entry out of [0,1] at " +
                                            describeCell(l + 1, s + 1)});
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) {
      std::ostringstream os;
      os << "policy row sum " << sum << " at state " << (s + 1);
      report.push_back({0, s + 1, os.str()});
    }
  }
  return report;
}

void ensureValidTargetPolicy(const TargetPolicy& policy) {
  throwIfInvalid(validateTargetPolicy(policy), "target policy");
}

RowMatrixXd blockDiagonal(const TargetPolicy& policy) {
  ensureValidTargetPolicy(policy);
  const int d = static_cast<int>(policy.pi.rows());
  const int k = static_cast<int>(policy.pi.cols());
  RowMatrixXd out = RowMatrixXd::Zero(d, d * k);
  for (int s = 0; s < d; ++s)
    for (int l = 0; l < k; ++l) out(s, s * k + l) = policy.pi(s, l);
  return out;
}

RowMatrixXd stackKernel(const TransitionModel& model) {
  ensureValidModel(model);
  RowMatrixXd out(model.d * model.k, model.d);
  for (int s = 0; s < model.d; ++s)
    for (int l = 0; l < model.k; ++l) out.row(s * model.k + l) = model.kernel[l].row(s);
  return out;
}

}  // namespace cmc
