#include "cmc/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cmc::io {

using nlohmann::json;

namespace {

template <typename Derived>
json matrixToJson(const Eigen::MatrixBase<Derived>& m) {
  json rows = json::array();
  for (Eigen::Index s = 0; s < m.rows(); ++s) {
    json row = json::array();
    for (Eigen::Index t = 0; t < m.cols(); ++t) row.push_back(static_cast<double>(m(s, t)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vectorToJson(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json out = json::array();
  for (Eigen::Index s = 0; s < v.size(); ++s) out.push_back(v(s));
  return out;
}

RowMatrixXd matrixFromJson(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty())
    throw InvalidInputError(std::string(what) + ": expected a non-empty array of rows");
  const std::size_t cols = rows.front().is_array() ? rows.front().size() : 0;
  if (cols == 0) throw InvalidInputError(std::string(what) + ": expected rows of numbers");
  RowMatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t s = 0; s < rows.size(); ++s) {
    if (!rows[s].is_array() || rows[s].size() != cols)
      throw InvalidInputError(std::string(what) + ": ragged rows");
    for (std::size_t t = 0; t < cols; ++t) {
      if (!rows[s][t].is_number())
        throw InvalidInputError(std::string(what) + ": non-numeric entry");
      m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = rows[s][t].get<double>();
    }
  }
  return m;
}

json parse(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InvalidInputError(std::string(what) + ": malformed JSON");
  return j;
}

void require(const json& j, const char* key, const char* what) {
  if (!j.contains(key))
    throw InvalidInputError(std::string(what) + ": missing required key \"" + key + "\"");
}

}  // namespace

std::string toJson(const TransitionModel& model) {
  json j;
  j["d"] = model.d;
  j["k"] = model.k;
  json kernel = json::array();
  for (const auto& m : model.kernel) kernel.push_back(matrixToJson(m));
  j["kernel"] = std::move(kernel);
  return j.dump(2);
}

TransitionModel modelFromJson(const std::string& text) {
  const json j = parse(text, "model");
  require(j, "d", "model");
  require(j, "k", "model");
  require(j, "kernel", "model");
  TransitionModel model;
  model.d = j["d"].get<int>();
  model.k = j["k"].get<int>();
  if (!j["kernel"].is_array() || static_cast<int>(j["kernel"].size()) != model.k)
    throw InvalidInputError("model: kernel must hold k matrices ordered [l][s][t]");
  for (const auto& m : j["kernel"]) model.kernel.push_back(matrixFromJson(m, "model kernel"));
  for (const auto& m : model.kernel)
    if (m.rows() != model.d || m.cols() != model.d)
      throw InvalidInputError("model: kernel matrices must be d x d");
  ensureValidModel(model);
  return model;
}

std::string toJson(const TargetPolicy& policy) {
  json j;
  j["pi"] = matrixToJson(policy.pi);
  return j.dump(2);
}

TargetPolicy targetPolicyFromJson(const std::string& text) {
  const json j = parse(text, "target policy");
  require(j, "pi", "target policy");
  TargetPolicy policy{matrixFromJson(j["pi"], "target policy pi")};
  ensureValidTargetPolicy(policy);
  return policy;
}

std::string toJson(const RewardModel& rewards) {
  const int d = static_cast<int>(rewards.gTilde.rows());
  const int k = static_cast<int>(rewards.gTilde.cols());
  json j;
  j["gTilde"] = matrixToJson(rewards.gTilde);
  json rTilde = json::array();
  for (int s = 0; s < d; ++s) {
    json perAction = json::array();
    for (int l = 0; l < k; ++l) {
      json row = json::array();
      for (int t = 0; t < d; ++t) row.push_back(rewards.rTilde[static_cast<std::size_t>(l)](s, t));
      perAction.push_back(std::move(row));
    }
    rTilde.push_back(std::move(perAction));
  }
  j["rTilde"] = std::move(rTilde);
  j["discount"] = rewards.discount;
  return j.dump(2);
}

RewardModel rewardsFromJson(const std::string& text) {
  const json j = parse(text, "rewards");
  require(j, "gTilde", "rewards");
  require(j, "rTilde", "rewards");
  require(j, "discount", "rewards");
  RewardModel rewards;
  rewards.gTilde = matrixFromJson(j["gTilde"], "rewards gTilde");
  const int d = static_cast<int>(rewards.gTilde.rows());
  const int k = static_cast<int>(rewards.gTilde.cols());
  rewards.discount = j["discount"].get<double>();
  const json& rt = j["rTilde"];
  if (!rt.is_array() || static_cast<int>(rt.size()) != d)
    throw InvalidInputError("rewards: rTilde must be ordered [s][l][t] with d outer entries");
  rewards.rTilde.assign(static_cast<std::size_t>(k), RowMatrixXd::Zero(d, d));
  for (int s = 0; s < d; ++s) {
    if (!rt[static_cast<std::size_t>(s)].is_array() ||
        static_cast<int>(rt[static_cast<std::size_t>(s)].size()) != k)
      throw InvalidInputError("rewards: rTilde[s] must hold k rows");
    for (int l = 0; l < k; ++l) {
      const json& row = rt[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)];
      if (!row.is_array() || static_cast<int>(row.size()) != d)
        throw InvalidInputError("rewards: rTilde[s][l] must hold d entries");
      for (int t = 0; t < d; ++t)
        rewards.rTilde[static_cast<std::size_t>(l)](s, t) =
            row[static_cast<std::size_t>(t)].get<double>();
    }
  }
  ensureValidRewards(rewards);
  return rewards;
}

std::string toJson(const LoggingPolicy& policy) {
  json j;
  const std::string kind = policy.kind();
  j["kind"] = kind;
  if (kind == "stationary_markov") {
    const auto& p = dynamic_cast<const StationaryMarkovPolicy&>(policy);
    j["table"] = matrixToJson(p.table());
  } else if (kind == "deterministic_cycle") {
    j["k"] = policy.actionCount();
  } else if (kind == "vanishing") {
    const auto& p = dynamic_cast<const VanishingActionPolicy&>(policy);
    j["beta"] = p.beta();
    j["target"] = json::array({p.targetState() + 1, p.targetAction() + 1});
    j["base"] = matrixToJson(p.baseTable());
  } else if (kind == "nonstationary_markov") {
    const auto& p = dynamic_cast<const NonStationaryMarkovPolicy&>(policy);
    json tables = json::array();
    for (const auto& t : p.tables()) tables.push_back(matrixToJson(t));
    j["tables"] = std::move(tables);
    j["period"] = p.period();
  } else {
    throw ConfigError("logging policy kind '" + kind + "' has no JSON form");
  }
  return j.dump(2);
}

std::shared_ptr<LoggingPolicy> loggingPolicyFromJson(const std::string& text) {
  const json j = parse(text, "logging policy");
  require(j, "kind", "logging policy");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "stationary_markov") {
    require(j, "table", "logging policy");
    RowMatrixXd table = matrixFromJson(j["table"], "logging policy table");
    return std::make_shared<StationaryMarkovPolicy>(static_cast<int>(table.rows()), table);
  }
  if (kind == "deterministic_cycle") {
    require(j, "k", "logging policy");
    const int k = j["k"].get<int>();
    if (k < 1) throw InvalidInputError("logging policy: k must be >= 1");
    return std::make_shared<DeterministicSequencePolicy>(
        k, [k](std::int64_t i) { return static_cast<int>(i % k); }, "deterministic_cycle");
  }
  if (kind == "vanishing") {
    require(j, "beta", "logging policy");
    require(j, "target", "logging policy");
    require(j, "base", "logging policy");
    RowMatrixXd base = matrixFromJson(j["base"], "logging policy base");
    const auto& target = j["target"];
    if (!target.is_array() || target.size() != 2)
      throw InvalidInputError("logging policy: target must be [s, l] (1-based)");
    return std::make_shared<VanishingActionPolicy>(
        static_cast<int>(base.rows()), base, target[0].get<int>() - 1, target[1].get<int>() - 1,
        j["beta"].get<double>());
  }
  if (kind == "nonstationary_markov") {
    require(j, "tables", "logging policy");
    require(j, "period", "logging policy");
    std::vector<RowMatrixXd> tables;
    for (const auto& t : j["tables"]) tables.push_back(matrixFromJson(t, "logging policy tables"));
    if (tables.empty()) throw InvalidInputError("logging policy: tables must be non-empty");
    return std::make_shared<NonStationaryMarkovPolicy>(static_cast<int>(tables.front().rows()),
                                                       std::move(tables), j["period"].get<int>());
  }
  throw InvalidInputError("logging policy: unknown kind '" + kind + "'");
}

std::string toJson(const EstimatedModel& estimate) {
  json j;
  j["d"] = estimate.d;
  j["k"] = estimate.k;
  json kernel = json::array();
  for (const auto& m : estimate.mHat) kernel.push_back(matrixToJson(m));
  j["kernel"] = std::move(kernel);
  json defined = json::array();
  for (int s = 0; s < estimate.d; ++s) {
    json row = json::array();
    for (int l = 0; l < estimate.k; ++l) row.push_back(static_cast<bool>(estimate.defined(s, l)));
    defined.push_back(std::move(row));
  }
  j["defined"] = std::move(defined);
  j["pHat"] = matrixToJson(estimate.pHat);
  return j.dump(2);
}

std::string toJson(const GofResult& result) {
  json j;
  j["pooled"] = {{"stat", result.pooledStatistic}, {"df", result.pooledDf},
                 {"p", result.pooledPValue}};
  json perPair = json::array();
  for (const auto& e : result.perPair)
    perPair.push_back({{"s", e.state}, {"l", e.action}, {"stat", e.statistic}, {"df", e.df},
                       {"p", e.pValue}});
  j["perPair"] = std::move(perPair);
  j["level"] = result.level;
  j["reject"] = result.reject;
  json excluded = json::array();
  for (const auto& [s, l] : result.excludedPairs) excluded.push_back(json::array({s, l}));
  j["excluded"] = std::move(excluded);
  return j.dump(2);
}

std::string toJson(const IntervalTable& table) {
  json j;
  j["level"] = table.level;
  j["bonferroni"] = table.bonferroni;
  json entries = json::array();
  for (const auto& e : table.entries)
    entries.push_back({{"s", e.state}, {"l", e.action}, {"t", e.nextState},
                       {"estimate", e.estimate}, {"halfWidth", e.halfWidth}, {"lower", e.lower},
                       {"upper", e.upper}, {"nVisits", e.nVisits}, {"degenerate", e.degenerate}});
  j["entries"] = std::move(entries);
  json omitted = json::array();
  for (const auto& [s, l] : table.omittedPairs) omitted.push_back(json::array({s, l}));
  j["omittedPairs"] = std::move(omitted);
  return j.dump(2);
}

std::string toJson(const OptimalValueReport& report) {
  json j;
  j["piOpt"] = matrixToJson(report.piHatOpt.pi);
  j["V"] = vectorToJson(report.vHat);
  json intervals = json::array();
  for (const auto& e : report.intervals)
    intervals.push_back({{"estimate", e.estimate}, {"halfWidth", e.halfWidth}, {"lower", e.lower},
                         {"upper", e.upper}});
  j["intervals"] = std::move(intervals);
  j["level"] = report.level;
  j["n"] = report.horizon;
  if (report.separationMargin)
    j["separationMargin"] = *report.separationMargin;
  else
    j["separationMargin"] = nullptr;
  return j.dump(2);
}

std::string toJson(const MixingReport& report) {
  json j;
  j["horizon"] = report.horizon;
  j["etaBar"] = matrixToJson(report.etaBar);
  j["deltaNorm"] = report.deltaNorm;
  j["gamma"] = {{"perISum", report.gamma.perISum}, {"supSum", report.gamma.supSum},
                {"caps", {{"iMax", report.gamma.caps.iMax}, {"jMax", report.gamma.caps.jMax},
                          {"pMax", report.gamma.caps.pMax}}}};
  json theta;
  theta["thetaBar"] = matrixToJson(report.theta.thetaBar);
  theta["perISum"] = report.theta.perISum;
  if (report.theta.tailBound)
    theta["tailBound"] = *report.theta.tailBound;
  else
    theta["tailBound"] = nullptr;
  j["theta"] = std::move(theta);
  return j.dump(2);
}

std::string toJson(const EvalReport& report) {
  json j;
  j["V"] = vectorToJson(report.values.v);
  j["Q"] = vectorToJson(report.values.q);
  j["A"] = vectorToJson(report.values.a);
  j["sigmaV"] = matrixToJson(report.covariances.sigmaV);
  j["sigmaQ"] = matrixToJson(report.covariances.sigmaQ);
  j["sigmaA"] = matrixToJson(report.covariances.sigmaA);
  j["lambdaQ"] = matrixToJson(report.covariances.lambdaQ);
  const double z = normalQuantile(1.0 - (1.0 - report.level) / 2.0);
  json vIntervals = json::array();
  for (Eigen::Index s = 0; s < report.values.v.size(); ++s) {
    const double hw = z * std::sqrt(std::max(0.0, report.covariances.sigmaV(s, s)) /
                                    static_cast<double>(report.horizon));
    vIntervals.push_back({{"estimate", report.values.v(s)}, {"halfWidth", hw},
                          {"lower", report.values.v(s) - hw}, {"upper", report.values.v(s) + hw}});
  }
  json qIntervals = json::array();
  for (Eigen::Index p = 0; p < report.values.q.size(); ++p) {
    const double hw = z * std::sqrt(std::max(0.0, report.covariances.sigmaQ(p, p)) /
                                    static_cast<double>(report.horizon));
    qIntervals.push_back({{"estimate", report.values.q(p)}, {"halfWidth", hw},
                          {"lower", report.values.q(p) - hw}, {"upper", report.values.q(p) + hw}});
  }
  j["intervals"] = {{"V", std::move(vIntervals)}, {"Q", std::move(qIntervals)},
                    {"level", report.level}};
  j["piOpt"] = matrixToJson(report.piOpt.pi);
  j["n"] = report.horizon;
  return j.dump(2);
}

namespace {

// Fetches a sub-config that is either inline JSON or a file reference.
std::string resolveRef(const json& j, const char* key, const std::filesystem::path& baseDir,
                       const char* what) {
  require(j, key, what);
  const json& v = j[key];
  if (v.is_string()) {
    std::filesystem::path p = v.get<std::string>();
    if (p.is_relative()) p = baseDir / p;
    return readTextFile(p);
  }
  return v.dump();
}

}  // namespace

ExperimentConfig experimentConfigFromJson(const std::string& text,
                                          const std::filesystem::path& baseDir) {
  const json j = parse(text, "experiment config");
  require(j, "kind", "experiment config");
  ExperimentConfig config;
  config.kind = experimentKindFromName(j["kind"].get<std::string>());
  config.model = modelFromJson(resolveRef(j, "model", baseDir, "experiment config"));
  config.policy = loggingPolicyFromJson(resolveRef(j, "policy", baseDir, "experiment config"));
  require(j, "n", "experiment config");
  require(j, "replications", "experiment config");
  config.n = j["n"].get<std::int64_t>();
  config.replications = j["replications"].get<std::int64_t>();
  config.seed = j.value("seed", std::uint64_t{0});
  config.level = j.value("level", 0.95);
  config.threads = j.value("threads", 0);
  if (j.contains("target"))
    config.target = targetPolicyFromJson(resolveRef(j, "target", baseDir, "experiment config"));
  if (j.contains("rewards"))
    config.rewards = rewardsFromJson(resolveRef(j, "rewards", baseDir, "experiment config"));
  if (j.contains("epsilons")) {
    for (const auto& e : j["epsilons"]) config.epsilons.push_back(e.get<double>());
  }
  if (j.contains("nGrid")) {
    for (const auto& g : j["nGrid"]) config.nGrid.push_back(g.get<std::int64_t>());
  }
  if (j.contains("initial")) {
    const auto v = j["initial"].get<std::vector<double>>();
    config.initial = Eigen::Map<const Eigen::VectorXd>(v.data(),
                                                       static_cast<Eigen::Index>(v.size()));
  }
  validateExperimentConfig(config);
  return config;
}

std::string toJson(const CltReport& report) {
  json j;
  j["kind"] = "clt";
  j["n"] = report.n;
  j["replications"] = report.replications;
  j["seed"] = report.seed;
  j["level"] = report.level;
  j["lambda"] = matrixToJson(report.lambda);
  j["lambdaBar"] = matrixToJson(report.lambdaBar);
  j["empCovProper"] = matrixToJson(report.empCovProper);
  j["empCovImproper"] = matrixToJson(report.empCovImproper);
  j["maxAbsDevProper"] = report.maxAbsDevProper;
  j["maxAbsDevImproper"] = report.maxAbsDevImproper;
  j["maxCrossBlockAbs"] = report.maxCrossBlockAbs;
  j["ksDistance"] = vectorToJson(report.ksDistance);
  j["coverage"] = vectorToJson(report.coverage);
  json samples = json::array();
  for (Eigen::Index c = 0; c < report.coordinateSamples.size(); ++c)
    samples.push_back(report.coordinateSamples(c));
  j["coordinateSamples"] = std::move(samples);
  j["replicationsUsed"] = report.replicationsUsed;
  j["excludedReplications"] = report.excludedReplications;
  j["lowReplicationWarning"] = report.lowReplicationWarning;
  j["occupation"] = matrixToJson(report.occupation);
  j["occupationExact"] = report.occupationExact;
  return j.dump(2);
}

std::string toJson(const GofStudyReport& report) {
  json j;
  j["kind"] = "gof";
  j["n"] = report.n;
  j["replications"] = report.replications;
  j["level"] = report.level;
  j["sizeEstimate"] = report.sizeEstimate;
  json power = json::array();
  for (const auto& [eps, rate] : report.powerCurve)
    power.push_back({{"epsilon", eps}, {"rejectionRate", rate}});
  j["powerCurve"] = std::move(power);
  j["pooledDf"] = report.pooledDf;
  return j.dump(2);
}

std::string toJson(const RlReport& report) {
  json j;
  j["kind"] = "rl";
  j["n"] = report.n;
  j["replications"] = report.replications;
  j["V"] = vectorToJson(report.vTrue);
  j["Q"] = vectorToJson(report.qTrue);
  j["A"] = vectorToJson(report.aTrue);
  j["sigmaV"] = matrixToJson(report.sigmaV);
  j["sigmaQ"] = matrixToJson(report.sigmaQ);
  j["sigmaA"] = matrixToJson(report.sigmaA);
  j["lambdaQ"] = matrixToJson(report.lambdaQ);
  j["empCovV"] = matrixToJson(report.empCovV);
  j["empCovQ"] = matrixToJson(report.empCovQ);
  j["empCovA"] = matrixToJson(report.empCovA);
  j["empCovQProper"] = matrixToJson(report.empCovQProper);
  j["maxDevV"] = report.maxDevV;
  j["maxDevQ"] = report.maxDevQ;
  j["maxDevA"] = report.maxDevA;
  j["maxDevQProper"] = report.maxDevQProper;
  j["lambdaQIdentityError"] = report.lambdaQIdentityError;
  j["replicationsUsed"] = report.replicationsUsed;
  j["excludedReplications"] = report.excludedReplications;
  j["occupation"] = matrixToJson(report.occupation);
  j["occupationExact"] = report.occupationExact;
  return j.dump(2);
}

std::string toJson(const SamplingEquivalenceReport& report) {
  json j;
  j["kind"] = "sampling-equivalence";
  j["n"] = report.n;
  j["samples"] = report.samples;
  j["exactLaw"] = report.exactLaw;
  j["directTable"] = report.directTable;
  j["auxiliaryTable"] = report.auxiliaryTable;
  j["twoSample"] = {{"stat", report.twoSampleStat}, {"df", report.twoSampleDf},
                    {"p", report.twoSampleP}};
  j["exactVsAuxiliary"] = {{"stat", report.exactVsAuxStat}, {"df", report.exactVsAuxDf},
                           {"p", report.exactVsAuxP}};
  j["exactVsDirect"] = {{"stat", report.exactVsDirectStat}, {"df", report.exactVsDirectDf},
                        {"p", report.exactVsDirectP}};
  return j.dump(2);
}

std::string toJson(const NoCltReport& report) {
  json j;
  j["kind"] = "no-clt";
  j["grid"] = report.grid;
  j["replications"] = report.replications;
  j["starvedPair"] = json::array({report.starvedState, report.starvedAction});
  j["coveredPair"] = json::array({report.coveredState, report.coveredAction});
  auto quantiles = [](const std::vector<double>& q25, const std::vector<double>& q50,
                      const std::vector<double>& q75) {
    json out = json::array();
    for (std::size_t g = 0; g < q25.size(); ++g) {
      json entry;
      entry["q25"] = std::isnan(q25[g]) ? json(nullptr) : json(q25[g]);
      entry["q50"] = std::isnan(q50[g]) ? json(nullptr) : json(q50[g]);
      entry["q75"] = std::isnan(q75[g]) ? json(nullptr) : json(q75[g]);
      out.push_back(std::move(entry));
    }
    return out;
  };
  j["starved"] = quantiles(report.starvedQ25, report.starvedQ50, report.starvedQ75);
  j["covered"] = quantiles(report.coveredQ25, report.coveredQ50, report.coveredQ75);
  j["starvedExcluded"] = report.starvedExcluded;
  return j.dump(2);
}

std::string toCsv(const Trajectory& traj) {
  std::ostringstream os;
  os << "step,state,action\n";
  for (std::size_t i = 0; i < traj.states.size(); ++i)
    os << i << "," << traj.states[i] + 1 << "," << traj.actions[i] + 1 << "\n";
  return os.str();
}

Trajectory trajectoryFromCsv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.find("step,state,action") != 0)
    throw InvalidInputError("trajectory CSV: missing header 'step,state,action'");
  Trajectory traj;
  std::int64_t expected = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string stepField, stateField, actionField;
    if (!std::getline(row, stepField, ',') || !std::getline(row, stateField, ',') ||
        !std::getline(row, actionField, ','))
      throw InvalidInputError("trajectory CSV: malformed row '" + line + "'");
    const std::int64_t step = std::stoll(stepField);
    if (step != expected)
      throw InvalidInputError("trajectory CSV: steps must be consecutive from 0");
    ++expected;
    const int state = std::stoi(stateField);
    const int action = std::stoi(actionField);
    if (state < 1 || action < 1)
      throw InvalidInputError("trajectory CSV: states and actions are 1-based");
    traj.states.push_back(state - 1);
    traj.actions.push_back(action - 1);
  }
  if (traj.states.size() < 2)
    throw InvalidInputError("trajectory CSV: need at least two steps");
  return traj;
}

std::string readTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open file: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void writeTextFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write file: " + path.string());
  out << content;
}

}  // namespace cmc::io
