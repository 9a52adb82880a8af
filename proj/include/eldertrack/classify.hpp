#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eldertrack/core.hpp"
#include "eldertrack/deviation.hpp"

namespace eldertrack {

// The first seven periods tile the day; Midnight pools Midnight1 and
// Midnight2 and exists only as a statistics row.
enum class Period { Midnight1, Morning, PreGroup, Group, PostGroup, Evening, Midnight2, Midnight };

inline constexpr int kTilingPeriodCount = 7;
inline constexpr int kPeriodRowCount = 8;

inline constexpr std::array<Period, kPeriodRowCount> kAllPeriods = {
    Period::Midnight1, Period::Morning,   Period::PreGroup, Period::Group,
    Period::PostGroup, Period::Evening, Period::Midnight2, Period::Midnight};

inline std::string_view to_string(Period p) {
  switch (p) {
    case Period::Midnight1: return "Midnight1";
    case Period::Morning: return "Morning";
    case Period::PreGroup: return "PreGroup";
    case Period::Group: return "Group";
    case Period::PostGroup: return "PostGroup";
    case Period::Evening: return "Evening";
    case Period::Midnight2: return "Midnight2";
    case Period::Midnight: return "Midnight";
  }
  return "?";
}

inline Period period_from_string(std::string_view s) {
  for (Period p : kAllPeriods) {
    if (to_string(p) == s) return p;
  }
  fail(ErrorKind::Validation, "unknown period '" + std::string(s) + "'");
}

enum class Category { C1Null, C2Origin, C3Public, C4Private, C5Restricted };

inline constexpr int kCategoryCount = 5;
inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::C1Null, Category::C2Origin, Category::C3Public, Category::C4Private, Category::C5Restricted};

inline std::string_view to_string(Category c) {
  static constexpr std::array<std::string_view, kCategoryCount> names = {"C1", "C2", "C3", "C4", "C5"};
  return names[static_cast<std::size_t>(c)];
}

inline Category category_from_string(std::string_view s) {
  for (Category c : kAllCategories) {
    if (to_string(c) == s) return c;
  }
  fail(ErrorKind::Validation, "unknown category '" + std::string(s) + "'");
}

/// Combined category of a deviated slot.
inline Category category_of(Location loc) {
  if (is_origin(loc)) return Category::C2Origin;
  if (is_public(loc)) return Category::C3Public;
  if (is_private(loc)) return Category::C4Private;
  if (loc == Location::Restricted) return Category::C5Restricted;
  fail(ErrorKind::Validation, "Missing has no combined category");
}

constexpr std::size_t idx(Period p) { return static_cast<std::size_t>(p); }
constexpr std::size_t idx(Category c) { return static_cast<std::size_t>(c); }

struct PeriodRange {
  int begin = 0;  // inclusive slot
  int end = 0;    // exclusive slot
  int size() const { return end - begin; }
};

struct PeriodLayout {
  std::array<PeriodRange, kTilingPeriodCount> ranges;
  std::vector<std::string> warnings;

  const PeriodRange& operator[](Period p) const { return ranges.at(idx(p)); }

  Period period_of(int slot) const {
    for (int i = 0; i < kTilingPeriodCount; ++i) {
      const auto& r = ranges[static_cast<std::size_t>(i)];
      if (slot >= r.begin && slot < r.end) return static_cast<Period>(i);
    }
    fail(ErrorKind::Validation, "slot " + std::to_string(slot) + " outside the period layout");
  }
};

inline constexpr int kTransitionHourSlots = 12;  // 60 minutes

/// Seven-way tiling of the day around the average group window [p5, p6).
inline PeriodLayout period_layout(int p5, int p6) {
  require(0 <= p5 && p5 <= p6 && p6 <= kSlotsPerDay, "period layout needs 0 <= p5 <= p6 <= 288");
  PeriodLayout layout;
  auto set = [&](Period p, int b, int e) { layout.ranges[idx(p)] = PeriodRange{b, e}; };
  set(Period::Midnight1, 0, p5 / 2);
  set(Period::Morning, p5 / 2, p5);
  if (p6 - p5 >= 2 * kTransitionHourSlots) {
    set(Period::PreGroup, p5, p5 + kTransitionHourSlots);
    set(Period::Group, p5 + kTransitionHourSlots, p6 - kTransitionHourSlots);
    set(Period::PostGroup, p6 - kTransitionHourSlots, p6);
  } else {
    int mid = p5 + (p6 - p5) / 2;
    set(Period::PreGroup, p5, mid);
    set(Period::Group, mid, mid);
    set(Period::PostGroup, mid, p6);
    layout.warnings.push_back("group window [" + std::to_string(p5) + ", " + std::to_string(p6) +
                              ") shorter than two hours; group period empty");
  }
  int evening_end = p6 + (kSlotsPerDay - p6) / 2;
  set(Period::Evening, p6, evening_end);
  set(Period::Midnight2, evening_end, kSlotsPerDay);
  return layout;
}

/// Average group window of a resident's fused norm days (rounded to the
/// nearest slot). Without any fused day the individual day bounds are used.
inline std::pair<int, int> average_group_window(const std::vector<const HybridNorm*>& norms, Location origin,
                                                int h_gap = kDefaultGapSlots) {
  double s5 = 0.0, s6 = 0.0;
  int fused = 0;
  for (const auto* n : norms) {
    if (!n->fused()) continue;
    s5 += n->transitions.p5;
    s6 += n->transitions.p6;
    ++fused;
  }
  if (fused > 0) {
    return {static_cast<int>(std::lround(s5 / fused)), static_cast<int>(std::lround(s6 / fused))};
  }
  require(!norms.empty(), "average_group_window needs at least one norm");
  auto [start, end] = day_start_end(norms.front()->slots, origin, h_gap);
  if (start > end) std::swap(start, end);
  return {start, end};
}

enum class Label { SleepIrregularity, AwakeIrregularity, PrivateVisiting };

inline constexpr std::array<Label, 3> kAllLabels = {Label::SleepIrregularity, Label::AwakeIrregularity,
                                                    Label::PrivateVisiting};

inline std::string_view to_string(Label l) {
  switch (l) {
    case Label::SleepIrregularity: return "SleepIrregularity";
    case Label::AwakeIrregularity: return "AwakeIrregularity";
    case Label::PrivateVisiting: return "PrivateVisiting";
  }
  return "?";
}

using ProbabilityRow = std::array<double, kCategoryCount>;

struct DeviationProfile {
  std::string resident_id;
  PeriodLayout layout;
  std::array<int, kPeriodRowCount> valid_slots{};
  std::array<std::array<int, kCategoryCount>, kPeriodRowCount> deviated{};
  std::array<std::optional<ProbabilityRow>, kPeriodRowCount> p;  // absent: no valid slot in the period
  std::set<Label> labels;

  std::optional<double> probability(Period period, Category c) const {
    const auto& row = p[idx(period)];
    if (!row) return std::nullopt;
    return (*row)[idx(c)];
  }
};

/// Share of valid slots per period whose deviated location falls in each
/// category; C1 takes the remainder.
inline DeviationProfile deviation_probabilities(const std::string& resident_id,
                                                const std::vector<DeviationDay>& history, PeriodLayout layout) {
  require(!history.empty(), "deviation_probabilities needs a non-empty history");
  DeviationProfile profile;
  profile.resident_id = resident_id;
  std::array<int, kSlotsPerDay> period_of{};
  for (int s = 0; s < kSlotsPerDay; ++s) period_of[static_cast<std::size_t>(s)] = static_cast<int>(layout.period_of(s));
  profile.layout = std::move(layout);
  for (const auto& day : history) {
    for (int s = 0; s < kSlotsPerDay; ++s) {
      auto u = static_cast<std::size_t>(s);
      if (!day.valid[u]) continue;
      auto row = static_cast<std::size_t>(period_of[u]);
      bool midnight = row == idx(Period::Midnight1) || row == idx(Period::Midnight2);
      ++profile.valid_slots[row];
      if (midnight) ++profile.valid_slots[idx(Period::Midnight)];
      if (day.slots[u]) {
        auto c = idx(category_of(*day.slots[u]));
        ++profile.deviated[row][c];
        if (midnight) ++profile.deviated[idx(Period::Midnight)][c];
      }
    }
  }
  for (std::size_t row = 0; row < kPeriodRowCount; ++row) {
    int valid = profile.valid_slots[row];
    if (valid == 0) continue;
    ProbabilityRow probs{};
    int deviated_total = 0;
    for (std::size_t c = 1; c < kCategoryCount; ++c) {
      probs[c] = static_cast<double>(profile.deviated[row][c]) / valid;
      deviated_total += profile.deviated[row][c];
    }
    probs[idx(Category::C1Null)] = static_cast<double>(valid - deviated_total) / valid;
    profile.p[row] = probs;
  }
  return profile;
}

/// Type-1 (nearest-rank) quantile of an ascending sample.
inline double nearest_rank_quantile(const std::vector<double>& sorted, double q) {
  require(!sorted.empty(), "quantile of an empty sample");
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[rank == 0 ? 0 : rank - 1];
}

struct Fence {
  std::optional<double> uav;
  std::optional<double> lav;
};

struct ThresholdTable {
  std::array<std::array<Fence, kCategoryCount>, kPeriodRowCount> cells{};

  const Fence& at(Period p, Category c) const { return cells[idx(p)][idx(c)]; }
  Fence& at(Period p, Category c) { return cells[idx(p)][idx(c)]; }
};

inline constexpr int kMinProfilesForFences = 5;

/// Tukey fences per (period, category) over the cohort, clamped to [0, 1].
inline ThresholdTable fit_thresholds(const std::vector<DeviationProfile>& profiles) {
  require(static_cast<int>(profiles.size()) >= kMinProfilesForFences, "fit_thresholds needs at least 5 profiles");
  ThresholdTable table;
  for (Period period : kAllPeriods) {
    for (Category c : kAllCategories) {
      std::vector<double> values;
      for (const auto& prof : profiles) {
        if (auto v = prof.probability(period, c)) values.push_back(*v);
      }
      if (values.empty()) continue;
      std::sort(values.begin(), values.end());
      double q1 = nearest_rank_quantile(values, 0.25);
      double q3 = nearest_rank_quantile(values, 0.75);
      double iqr = q3 - q1;
      table.at(period, c) = Fence{std::clamp(q3 + 1.5 * iqr, 0.0, 1.0), std::clamp(q1 - 1.5 * iqr, 0.0, 1.0)};
    }
  }
  return table;
}

/// Fence values reported for the original six-month deployment; useful as a
/// fixed table for regression runs.
inline ThresholdTable reference_thresholds() {
  ThresholdTable t;
  t.at(Period::Midnight, Category::C1Null).lav = 0.8762;
  t.at(Period::Morning, Category::C1Null).lav = 0.7323;
  t.at(Period::Evening, Category::C1Null).lav = 0.7522;
  t.at(Period::PreGroup, Category::C2Origin).uav = 0.2717;
  t.at(Period::Morning, Category::C4Private).uav = 0.0118;
  t.at(Period::PreGroup, Category::C4Private).uav = 0.0312;
  t.at(Period::Group, Category::C4Private).uav = 0.0521;
  t.at(Period::PostGroup, Category::C4Private).uav = 0.0223;
  t.at(Period::Evening, Category::C4Private).uav = 0.0174;
  return t;
}

inline nlohmann::json thresholds_to_json(const ThresholdTable& t) {
  nlohmann::json cells = nlohmann::json::array();
  for (Period p : kAllPeriods) {
    for (Category c : kAllCategories) {
      const auto& f = t.at(p, c);
      if (!f.uav && !f.lav) continue;
      cells.push_back({{"period", to_string(p)},
                       {"category", to_string(c)},
                       {"uav", f.uav ? nlohmann::json(*f.uav) : nlohmann::json(nullptr)},
                       {"lav", f.lav ? nlohmann::json(*f.lav) : nlohmann::json(nullptr)}});
    }
  }
  return {{"version", 1}, {"cells", cells}};
}

inline ThresholdTable thresholds_from_json(const nlohmann::json& j) {
  ThresholdTable t;
  try {
    require(j.at("version").get<int>() == 1, "unsupported threshold table version");
    for (const auto& cell : j.at("cells")) {
      auto& f = t.at(period_from_string(cell.at("period").get<std::string>()),
                     category_from_string(cell.at("category").get<std::string>()));
      if (cell.contains("uav") && !cell["uav"].is_null()) f.uav = cell["uav"].get<double>();
      if (cell.contains("lav") && !cell["lav"].is_null()) f.lav = cell["lav"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed threshold table: ") + e.what());
  }
  return t;
}

enum class AwakeRule {
  UpperFence,  // P(pre-group, C2) > UAV: still at origin after the group started
  LowerFence,  // P(pre-group, C2) < LAV, the rule as printed
};

inline std::string_view to_string(AwakeRule r) { return r == AwakeRule::UpperFence ? "uav" : "lav"; }

inline AwakeRule awake_rule_from_string(std::string_view s) {
  if (s == "uav") return AwakeRule::UpperFence;
  if (s == "lav") return AwakeRule::LowerFence;
  fail(ErrorKind::Validation, "unknown awake rule '" + std::string(s) + "'");
}

namespace detail {

inline bool below_lav(const DeviationProfile& prof, const ThresholdTable& t, Period p, Category c) {
  auto v = prof.probability(p, c);
  const auto& f = t.at(p, c);
  return v && f.lav && *v < *f.lav;
}

inline bool above_uav(const DeviationProfile& prof, const ThresholdTable& t, Period p, Category c) {
  auto v = prof.probability(p, c);
  const auto& f = t.at(p, c);
  return v && f.uav && *v > *f.uav;
}

}  // namespace detail

inline std::set<Label> classify(const DeviationProfile& prof, const ThresholdTable& t,
                                AwakeRule awake_rule = AwakeRule::UpperFence) {
  using detail::above_uav;
  using detail::below_lav;
  std::set<Label> labels;
  if (below_lav(prof, t, Period::Midnight, Category::C1Null) || below_lav(prof, t, Period::Evening, Category::C1Null)) {
    labels.insert(Label::SleepIrregularity);
  }
  bool late_or_early = awake_rule == AwakeRule::UpperFence
                           ? above_uav(prof, t, Period::PreGroup, Category::C2Origin)
                           : below_lav(prof, t, Period::PreGroup, Category::C2Origin);
  if (below_lav(prof, t, Period::Morning, Category::C1Null) || late_or_early) {
    labels.insert(Label::AwakeIrregularity);
  }
  for (Period p : {Period::Morning, Period::PreGroup, Period::Group, Period::PostGroup, Period::Evening}) {
    if (above_uav(prof, t, p, Category::C4Private)) {
      labels.insert(Label::PrivateVisiting);
      break;
    }
  }
  return labels;
}

struct CohortSummary {
  std::size_t residents = 0;
  double zero = 0.0;
  double one = 0.0;
  double two_plus = 0.0;
  std::map<Label, double> per_label;             // share of residents carrying the label
  std::map<Label, double> per_label_among_one;   // share of one-label residents carrying it
  std::map<std::string, std::size_t> combinations;

  nlohmann::json to_json() const {
    nlohmann::json per = nlohmann::json::object();
    nlohmann::json among = nlohmann::json::object();
    for (Label l : kAllLabels) {
      per[std::string(to_string(l))] = per_label.at(l);
      among[std::string(to_string(l))] = per_label_among_one.at(l);
    }
    return {{"residents", residents}, {"zero", zero}, {"one", one}, {"two_plus", two_plus},
            {"per_label", per},       {"per_label_among_one", among}, {"combinations", combinations}};
  }
};

inline CohortSummary cohort_report(const std::vector<DeviationProfile>& profiles) {
  CohortSummary s;
  s.residents = profiles.size();
  std::size_t zero = 0, one = 0, many = 0;
  std::map<Label, std::size_t> per, among;
  for (const auto& prof : profiles) {
    std::size_t n = prof.labels.size();
    (n == 0 ? zero : n == 1 ? one : many)++;
    std::string combo;
    for (Label l : prof.labels) {
      ++per[l];
      if (n == 1) ++among[l];
      combo += (combo.empty() ? "" : "+") + std::string(to_string(l));
    }
    ++s.combinations[combo.empty() ? "none" : combo];
  }
  auto share = [](std::size_t part, std::size_t whole) {
    return whole == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(whole);
  };
  s.zero = share(zero, s.residents);
  s.one = share(one, s.residents);
  s.two_plus = share(many, s.residents);
  for (Label l : kAllLabels) {
    s.per_label[l] = share(per[l], s.residents);
    s.per_label_among_one[l] = share(among[l], one);
  }
  return s;
}

}  // namespace eldertrack
