#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "eldertrack/classify.hpp"
#include "eldertrack/deviation.hpp"
#include "eldertrack/localize.hpp"
#include "eldertrack/norms.hpp"
#include "eldertrack/preprocess.hpp"
#include "eldertrack/similarity.hpp"
#include "eldertrack/spectral.hpp"
#include "eldertrack/trajectory_io.hpp"

namespace eldertrack {

/// Every tunable of the pipeline. Serialized as versioned JSON; absent keys
/// keep their defaults.
struct Config {
  int version = 1;
  int h_slots = kDefaultWindowHalfWidth;
  int min_stay_slots = kDefaultMinStaySlots;
  double min_valid_fraction = kDefaultMinValidFraction;
  WeightKind weight_kind = WeightKind::ActiveDayFocus;
  double focus_ratio = kDefaultActiveFocusRatio;
  AwakeRule awake_rule = AwakeRule::UpperFence;
  int h_gap = kDefaultGapSlots;
  TransitionMode transition_mode = TransitionMode::Literal;
  bool leave_one_out = false;
  int rssi_threshold_dbm = kDefaultRssiThresholdDbm;
  int utc_offset_minutes = 0;
  std::optional<int> k;
  int k_min = 2;
  int k_max = 7;

  void validate() const {
    require(version == 1, "unsupported config version " + std::to_string(version));
    require(h_slots >= 0 && h_slots < kSlotsPerDay, "h_slots must lie in [0, 288)");
    require(min_stay_slots >= 1, "min_stay_slots must be at least 1");
    require(min_valid_fraction >= 0.0 && min_valid_fraction <= 1.0, "min_valid_fraction must lie in [0, 1]");
    require(focus_ratio > 0.0, "focus_ratio must be positive");
    require(h_gap >= 1 && h_gap <= kSlotsPerDay / 2, "h_gap must lie in [1, 144]");
    require(rssi_threshold_dbm < 0, "rssi_threshold_dbm must be negative");
    require(utc_offset_minutes > -24 * 60 && utc_offset_minutes < 24 * 60, "utc_offset_minutes out of range");
    require(!k || *k >= 2, "k must be at least 2");
    require(2 <= k_min && k_min <= k_max, "k range must satisfy 2 <= k_min <= k_max");
  }

  NormOptions norm_options() const { return NormOptions{h_gap, transition_mode}; }
  WeightVector weights() const { return WeightVector::of_kind(weight_kind, focus_ratio); }
  LocalClock clock() const { return LocalClock{utc_offset_minutes}; }
};

inline nlohmann::json to_json(const Config& c) {
  return {{"version", c.version},
          {"h_slots", c.h_slots},
          {"min_stay_slots", c.min_stay_slots},
          {"min_valid_fraction", c.min_valid_fraction},
          {"weight_kind", to_string(c.weight_kind)},
          {"focus_ratio", c.focus_ratio},
          {"awake_rule", to_string(c.awake_rule)},
          {"h_gap", c.h_gap},
          {"transition_mode", to_string(c.transition_mode)},
          {"leave_one_out", c.leave_one_out},
          {"rssi_threshold_dbm", c.rssi_threshold_dbm},
          {"utc_offset_minutes", c.utc_offset_minutes},
          {"k", c.k ? nlohmann::json(*c.k) : nlohmann::json(nullptr)},
          {"k_min", c.k_min},
          {"k_max", c.k_max}};
}

inline Config config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "version", "h_slots", "min_stay_slots", "min_valid_fraction", "weight_kind", "focus_ratio", "awake_rule",
      "h_gap", "transition_mode", "leave_one_out", "rssi_threshold_dbm", "utc_offset_minutes", "k", "k_min", "k_max"};
  Config c;
  try {
    require(j.is_object(), "config must be a JSON object");
    for (const auto& [key, value] : j.items()) require(known.count(key) != 0, "unknown config key '" + key + "'");
    c.version = j.at("version").get<int>();
    c.h_slots = j.value("h_slots", c.h_slots);
    c.min_stay_slots = j.value("min_stay_slots", c.min_stay_slots);
    c.min_valid_fraction = j.value("min_valid_fraction", c.min_valid_fraction);
    if (j.contains("weight_kind")) c.weight_kind = weight_kind_from_string(j["weight_kind"].get<std::string>());
    c.focus_ratio = j.value("focus_ratio", c.focus_ratio);
    if (j.contains("awake_rule")) c.awake_rule = awake_rule_from_string(j["awake_rule"].get<std::string>());
    c.h_gap = j.value("h_gap", c.h_gap);
    if (j.contains("transition_mode")) {
      c.transition_mode = transition_mode_from_string(j["transition_mode"].get<std::string>());
    }
    c.leave_one_out = j.value("leave_one_out", c.leave_one_out);
    c.rssi_threshold_dbm = j.value("rssi_threshold_dbm", c.rssi_threshold_dbm);
    c.utc_offset_minutes = j.value("utc_offset_minutes", c.utc_offset_minutes);
    if (j.contains("k") && !j["k"].is_null()) c.k = j["k"].get<int>();
    c.k_min = j.value("k_min", c.k_min);
    c.k_max = j.value("k_max", c.k_max);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------- origins

/// Origin symbol per resident, read off the encoded nights.
inline std::map<std::string, Location> detect_origins(const std::vector<SpatioTemporalMatrix>& residents) {
  std::map<std::string, Location> origins;
  for (const auto& m : residents) origins.emplace(m.resident_id(), detect_origin(m));
  return origins;
}

inline void write_origins(std::ostream& out, const std::map<std::string, OriginRoom>& origins) {
  out << "resident_id,origin_room,origin_code\n";
  for (const auto& [id, o] : origins) out << id << ',' << o.room_id << ',' << to_code(o.category) << '\n';
}

// ---------------------------------------------------------------- cluster

struct ClusterOutput {
  ClusterAssignment assignment;
  std::uint64_t seed = 0;
  WeightKind weight_kind = WeightKind::ActiveDayFocus;
  int h_slots = kDefaultWindowHalfWidth;
  std::vector<std::pair<int, double>> ssd_curve;
  std::vector<double> eigenvalues;
  std::vector<std::string> warnings;
};

inline ClusterOutput cluster_stage(const std::vector<SpatioTemporalMatrix>& residents, const Config& cfg,
                                   std::uint64_t seed, unsigned jobs = 1) {
  auto origins = detect_origins(residents);
  std::vector<AggregatedTrajectory> trajs;
  ClusterOutput out;
  out.seed = seed;
  out.weight_kind = cfg.weight_kind;
  out.h_slots = cfg.h_slots;
  for (const auto& m : residents) {
    if (m.valid_days(cfg.min_valid_fraction).empty()) {
      out.warnings.push_back("resident " + m.resident_id() + " has no valid day; left unclustered");
      continue;
    }
    trajs.push_back(aggregate(m, origins.at(m.resident_id()), cfg.min_valid_fraction));
  }
  SpectralModel model(trajs, cfg.weights(), cfg.h_slots, jobs);
  const int n = static_cast<int>(trajs.size());
  SpectralResult chosen;
  if (cfg.k) {
    chosen = model.cluster(*cfg.k, seed);
    out.ssd_curve.emplace_back(*cfg.k, ssd(trajs, chosen.assignment.labels, cfg.h_slots));
  } else {
    int k_max = std::min(cfg.k_max, n - 1);
    require(cfg.k_min <= k_max, "too few residents for the requested k range");
    if (k_max < cfg.k_max) out.warnings.push_back("k_max lowered to " + std::to_string(k_max) + " (n-1)");
    auto curve = ssd_curve(model, cfg.k_min, k_max, seed, cfg.h_slots);
    for (const auto& p : curve) out.ssd_curve.emplace_back(p.k, p.ssd);
    chosen = model.cluster(best_k(curve).k, seed);
  }
  out.assignment = chosen.assignment;
  for (Eigen::Index i = 0; i < chosen.eigenvalues.size(); ++i) out.eigenvalues.push_back(chosen.eigenvalues(i));
  for (auto& w : chosen.warnings) out.warnings.push_back(std::move(w));
  return out;
}

inline nlohmann::json to_json(const ClusterOutput& c) {
  nlohmann::json labels = nlohmann::json::object();
  for (std::size_t i = 0; i < c.assignment.resident_ids.size(); ++i) {
    labels[c.assignment.resident_ids[i]] = c.assignment.labels[i];
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& [k, v] : c.ssd_curve) curve.push_back(nlohmann::json::array({k, v}));
  return {{"version", 1},
          {"k", c.assignment.k},
          {"seed", c.seed},
          {"weight_kind", to_string(c.weight_kind)},
          {"h_slots", c.h_slots},
          {"labels", labels},
          {"ssd_curve", curve},
          {"eigenvalues", c.eigenvalues},
          {"warnings", c.warnings}};
}

inline ClusterAssignment assignment_from_json(const nlohmann::json& j) {
  ClusterAssignment a;
  try {
    require(j.at("version").get<int>() == 1, "unsupported cluster file version");
    a.k = j.at("k").get<int>();
    for (const auto& [id, label] : j.at("labels").items()) {
      int l = label.get<int>();
      require(l >= 0 && l < a.k, "cluster label out of range for resident '" + id + "'");
      a.resident_ids.push_back(id);
      a.labels.push_back(l);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed cluster file: ") + e.what());
  }
  return a;
}

// ---------------------------------------------------------------- norms

inline CohortNorms norms_stage(const std::vector<SpatioTemporalMatrix>& residents, const ClusterAssignment& assignment,
                               const Config& cfg, unsigned jobs = 1) {
  CohortNormOptions opt{cfg.norm_options(), cfg.min_valid_fraction, cfg.leave_one_out, jobs};
  return build_cohort_norms(residents, detect_origins(residents), assignment, opt);
}

using NormIndex = std::map<std::string, std::map<Date, const HybridNorm*>>;

inline NormIndex index_norms(const std::vector<HybridNorm>& norms) {
  NormIndex index;
  for (const auto& n : norms) {
    require(index[n.resident_id].emplace(n.date, &n).second,
            "duplicate norm for " + n.resident_id + " on " + format_date(n.date));
  }
  return index;
}

// ---------------------------------------------------------------- detect

/// Deviation history of every resident that has norms, by resident then date.
inline std::vector<DeviationDay> detect_stage(const std::vector<SpatioTemporalMatrix>& residents,
                                              const std::vector<HybridNorm>& norms, const Config& cfg) {
  auto index = index_norms(norms);
  std::vector<DeviationDay> out;
  for (const auto& m : residents) {
    auto it = index.find(m.resident_id());
    if (it == index.end()) continue;
    auto history = deviation_history(m, it->second, cfg.min_valid_fraction);
    out.insert(out.end(), history.begin(), history.end());
  }
  return out;
}

// ---------------------------------------------------------------- classify

struct ClassifyOutput {
  ThresholdTable thresholds;
  bool fitted = true;
  std::vector<DeviationProfile> profiles;
  CohortSummary summary;
  std::vector<std::string> warnings;
};

/// Profiles per resident; thresholds are fitted on the cohort unless given.
inline ClassifyOutput classify_stage(const std::vector<SpatioTemporalMatrix>& residents,
                                     const std::vector<HybridNorm>& norms, const std::vector<DeviationDay>& deviations,
                                     const Config& cfg, const std::optional<ThresholdTable>& fixed = std::nullopt) {
  auto origins = detect_origins(residents);
  std::map<std::string, std::vector<const HybridNorm*>> norms_of;
  for (const auto& n : norms) norms_of[n.resident_id].push_back(&n);
  std::map<std::string, std::vector<DeviationDay>> history_of;
  for (const auto& d : deviations) history_of[d.resident_id].push_back(d);

  ClassifyOutput out;
  for (const auto& [id, history] : history_of) {
    auto nit = norms_of.find(id);
    require(nit != norms_of.end(), "deviations for resident '" + id + "' without norms");
    auto oit = origins.find(id);
    require(oit != origins.end(), "deviations for resident '" + id + "' without trajectories");
    auto [p5, p6] = average_group_window(nit->second, oit->second, cfg.h_gap);
    auto layout = period_layout(p5, p6);
    for (const auto& w : layout.warnings) out.warnings.push_back(id + ": " + w);
    out.profiles.push_back(deviation_probabilities(id, history, std::move(layout)));
  }
  if (fixed) {
    out.thresholds = *fixed;
    out.fitted = false;
  } else {
    out.thresholds = fit_thresholds(out.profiles);
  }
  for (auto& prof : out.profiles) prof.labels = classify(prof, out.thresholds, cfg.awake_rule);
  out.summary = cohort_report(out.profiles);
  return out;
}

inline nlohmann::json to_json(const DeviationProfile& prof) {
  nlohmann::json p = nlohmann::json::object();
  for (Period period : kAllPeriods) {
    const auto& row = prof.p[idx(period)];
    if (!row) {
      p[std::string(to_string(period))] = nullptr;
      continue;
    }
    nlohmann::json cats = nlohmann::json::object();
    for (Category c : kAllCategories) cats[std::string(to_string(c))] = (*row)[idx(c)];
    p[std::string(to_string(period))] = cats;
  }
  nlohmann::json periods = nlohmann::json::object();
  for (int i = 0; i < kTilingPeriodCount; ++i) {
    const auto& r = prof.layout.ranges[static_cast<std::size_t>(i)];
    periods[std::string(to_string(static_cast<Period>(i)))] = {r.begin, r.end};
  }
  nlohmann::json labels = nlohmann::json::array();
  for (Label l : prof.labels) labels.push_back(to_string(l));
  return {{"resident_id", prof.resident_id}, {"periods", periods}, {"valid_slots", prof.valid_slots},
          {"P", p},                          {"labels", labels}};
}

inline nlohmann::json to_json(const ClassifyOutput& c) {
  nlohmann::json profiles = nlohmann::json::array();
  for (const auto& prof : c.profiles) profiles.push_back(to_json(prof));
  return {{"version", 1},
          {"thresholds", thresholds_to_json(c.thresholds)},
          {"thresholds_source", c.fitted ? "fitted" : "fixed"},
          {"profiles", profiles},
          {"cohort", c.summary.to_json()},
          {"warnings", c.warnings}};
}

}  // namespace eldertrack
