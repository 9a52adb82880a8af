#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eldertrack/core.hpp"
#include "eldertrack/csv.hpp"
#include "eldertrack/parallel.hpp"
#include "eldertrack/similarity.hpp"
#include "eldertrack/spectral.hpp"

namespace eldertrack {

inline constexpr int kDefaultGapSlots = 6;
inline constexpr int kMinGroupRows = 3;

struct GroupNorm {
  int label;
  Date date;
  SlotArray slots;
  int contributors;
};

/// Modal day of one cluster on one date, from the valid day rows of its
/// members. Absent unless more than two rows contribute.
inline std::optional<GroupNorm> group_norm(int label, std::span<const DayTrajectory* const> day_rows,
                                           const ClusterAssignment& assignment,
                                           double min_valid_fraction = kDefaultMinValidFraction) {
  auto members = assignment.as_map();
  std::vector<const DayTrajectory*> rows;
  std::optional<Date> date;
  for (const auto* row : day_rows) {
    require(!date || *date == row->date(), "group_norm rows must share one date");
    date = row->date();
    auto it = members.find(row->resident_id());
    if (it != members.end() && it->second == label && valid_day(*row, min_valid_fraction)) rows.push_back(row);
  }
  if (static_cast<int>(rows.size()) < kMinGroupRows) return std::nullopt;
  return GroupNorm{label, *date, aggregate_rows(rows, std::nullopt), static_cast<int>(rows.size())};
}

/// First slot in [0,144) opening a run of at least `h_gap` slots away from
/// the origin, and the last slot in (144,288] closing such a run. A side
/// without a qualifying run reports 144.
inline std::pair<int, int> day_start_end(const SlotArray& slots, Location origin, int h_gap = kDefaultGapSlots) {
  require(h_gap >= 1, "h_gap must be at least 1");
  auto away = [&](int t) { return slots[static_cast<std::size_t>(t)] != origin; };
  auto away_run = [&](int from, int to) {  // [from, to)
    if (from < 0 || to > kSlotsPerDay) return false;
    for (int t = from; t < to; ++t) {
      if (!away(t)) return false;
    }
    return true;
  };
  int start = kSlotsPerDay / 2;
  for (int t = 0; t < kSlotsPerDay / 2; ++t) {
    if (away_run(t, t + h_gap)) {
      start = t;
      break;
    }
  }
  int end = kSlotsPerDay / 2;
  for (int t = kSlotsPerDay; t > kSlotsPerDay / 2; --t) {
    if (away_run(t - h_gap, t)) {
      end = t;
      break;
    }
  }
  return {start, end};
}

enum class TransitionMode {
  Literal,   // the sign conditions exactly as written
  Earliest,  // a gap wider than h takes the earlier of the two points
};

inline std::string_view to_string(TransitionMode m) { return m == TransitionMode::Literal ? "literal" : "earliest"; }

inline TransitionMode transition_mode_from_string(std::string_view s) {
  if (s == "literal") return TransitionMode::Literal;
  if (s == "earliest") return TransitionMode::Earliest;
  fail(ErrorKind::Validation, "unknown transition mode '" + std::string(s) + "'");
}

struct TransitionPoints {
  int p1 = 0, p2 = 0, p3 = 0, p4 = 0, p5 = 0, p6 = 0;
  friend bool operator==(const TransitionPoints&, const TransitionPoints&) = default;
};

/// Group window [p5, p6) from individual (p1, p4) and group (p2, p3) day
/// bounds, both measured in slots.
inline std::pair<int, int> transition_points(int p1, int p2, int p3, int p4, int h_gap = kDefaultGapSlots,
                                             TransitionMode mode = TransitionMode::Literal) {
  for (int p : {p1, p2, p3, p4}) require(p >= 0 && p <= kSlotsPerDay, "transition input out of [0, 288]");
  const bool start_close = std::abs(p1 - p2) <= h_gap;
  const bool end_close = std::abs(p3 - p4) <= h_gap;
  if (mode == TransitionMode::Literal) {
    int p5 = (start_close || p1 - p2 >= 0) ? p1 : p2;
    int p6 = (end_close || p3 - p4 < 0) ? p4 : p3;
    return {p5, p6};
  }
  int p5 = start_close ? p1 : std::min(p1, p2);
  int p6 = end_close ? p4 : std::min(p3, p4);
  return {p5, p6};
}

enum class Provenance : std::uint8_t { Individual, Group };

struct HybridNorm {
  std::string resident_id;
  Date date;
  SlotArray slots;
  std::array<Provenance, kSlotsPerDay> provenance;
  TransitionPoints transitions;
  bool group_present = false;
  bool degenerate = false;  // group window collapsed; pure individual norm

  Location operator[](int slot) const { return slots[static_cast<std::size_t>(slot)]; }
  bool fused() const { return transitions.p5 < transitions.p6; }
};

struct NormOptions {
  int h_gap = kDefaultGapSlots;
  TransitionMode mode = TransitionMode::Literal;
};

/// Splices the group norm into the individual norm over [p5, p6).
inline HybridNorm hybrid_norm(const AggregatedTrajectory& individual, const std::optional<GroupNorm>& group,
                              const Date& date, Location origin, const NormOptions& opt = {}) {
  HybridNorm norm;
  norm.resident_id = individual.resident_id;
  norm.date = date;
  norm.slots = individual.slots;
  norm.provenance.fill(Provenance::Individual);
  auto [p1, p4] = day_start_end(individual.slots, origin, opt.h_gap);
  if (!group) {
    norm.transitions = TransitionPoints{p1, p1, p4, p4, p1, p1};
    return norm;
  }
  norm.group_present = true;
  auto [p2, p3] = day_start_end(group->slots, origin, opt.h_gap);
  // An individual side without any excursion (the 144 sentinel) carries no
  // bound of its own; the group point stands in for it.
  const int no_bound = kSlotsPerDay / 2;
  auto [p5, p6] = transition_points(p1 == no_bound ? p2 : p1, p2, p3, p4 == no_bound ? p3 : p4, opt.h_gap, opt.mode);
  if (p5 >= p6) {
    norm.degenerate = true;
    norm.transitions = TransitionPoints{p1, p2, p3, p4, p5, p5};
    return norm;
  }
  norm.transitions = TransitionPoints{p1, p2, p3, p4, p5, p6};
  for (int t = p5; t < p6; ++t) {
    norm.slots[static_cast<std::size_t>(t)] = group->slots[static_cast<std::size_t>(t)];
    norm.provenance[static_cast<std::size_t>(t)] = Provenance::Group;
  }
  return norm;
}

struct CohortNormOptions {
  NormOptions norm;
  double min_valid_fraction = kDefaultMinValidFraction;
  bool leave_one_out = false;  // individual norm excludes the day under test
  unsigned jobs = 1;
};

struct CohortNorms {
  std::vector<HybridNorm> norms;  // by resident, then date
  std::vector<std::string> warnings;
};

/// Hybrid norms for every valid day of every clustered resident.
inline CohortNorms build_cohort_norms(const std::vector<SpatioTemporalMatrix>& residents,
                                      const std::map<std::string, Location>& origins,
                                      const ClusterAssignment& assignment, const CohortNormOptions& opt = {}) {
  std::map<Date, std::vector<const DayTrajectory*>> by_date;
  for (const auto& m : residents) {
    for (const auto& d : m.days()) by_date[d.date()].push_back(&d);
  }
  std::map<std::pair<int, Date>, std::optional<GroupNorm>> groups;
  for (const auto& [date, rows] : by_date) {
    for (int label = 0; label < assignment.k; ++label) {
      groups.emplace(std::make_pair(label, date), group_norm(label, rows, assignment, opt.min_valid_fraction));
    }
  }

  std::vector<std::vector<HybridNorm>> per_resident(residents.size());
  std::vector<std::vector<std::string>> per_warnings(residents.size());
  auto members = assignment.as_map();
  parallel_for(residents.size(), opt.jobs, [&](std::size_t r) {
    const auto& m = residents[r];
    auto label_it = members.find(m.resident_id());
    if (label_it == members.end()) return;
    Location origin = origins.at(m.resident_id());
    auto valid = m.valid_days(opt.min_valid_fraction);
    if (valid.empty()) return;
    SlotCounts all;
    for (const auto* d : valid) all.add(d->slots());
    for (const auto* d : valid) {
      AggregatedTrajectory individual{m.resident_id(), {}};
      if (opt.leave_one_out && all.rows() > 1) {
        SlotCounts others = all;
        others.add(d->slots(), -1);
        individual.slots = others.modes(origin);
      } else {
        individual.slots = all.modes(origin);
      }
      const auto& group = groups.at({label_it->second, d->date()});
      auto norm = hybrid_norm(individual, group, d->date(), origin, opt.norm);
      if (norm.degenerate) {
        per_warnings[r].push_back("degenerate group window for " + m.resident_id() + " on " +
                                  format_date(d->date()) + "; individual norm used");
      }
      per_resident[r].push_back(std::move(norm));
    }
  });
  CohortNorms out;
  for (std::size_t r = 0; r < residents.size(); ++r) {
    for (auto& n : per_resident[r]) out.norms.push_back(std::move(n));
    for (auto& w : per_warnings[r]) out.warnings.push_back(std::move(w));
  }
  return out;
}

inline void write_norms(std::ostream& out, const std::vector<HybridNorm>& norms) {
  out << "resident_id,date";
  for (int i = 0; i < kSlotsPerDay; ++i) out << ",slot_" << i;
  for (int i = 0; i < kSlotsPerDay; ++i) out << ",provenance_" << i;
  out << ",p5,p6\n";
  for (const auto& n : norms) {
    out << n.resident_id << ',' << format_date(n.date);
    for (Location loc : n.slots) out << ',' << to_code(loc);
    for (Provenance p : n.provenance) out << ',' << (p == Provenance::Group ? 'G' : 'I');
    out << ',' << n.transitions.p5 << ',' << n.transitions.p6 << '\n';
  }
}

/// Reads a norms file. Only p5/p6 are persisted, so p1..p4 come back as
/// copies of them.
inline std::vector<HybridNorm> read_norms(std::istream& in) {
  auto table = csv::read_table(in);
  require(table.header.rfind("resident_id,date,slot_0,", 0) == 0 &&
              table.header.size() > 6 && table.header.substr(table.header.size() - 6) == ",p5,p6",
          "norms CSV header mismatch");
  std::vector<HybridNorm> norms;
  for (const auto& row : table.rows) {
    auto f = csv::split(row);
    require(f.size() == 2 + 2 * kSlotsPerDay + 2, "norms row has wrong field count");
    HybridNorm n;
    n.resident_id = std::string(csv::trim(f[0]));
    n.date = parse_date(csv::trim(f[1]));
    for (int i = 0; i < kSlotsPerDay; ++i) {
      n.slots[static_cast<std::size_t>(i)] = location_from_code(csv::to_int(f[2 + i], "norm slot"));
      auto p = csv::trim(f[2 + kSlotsPerDay + i]);
      require(p == "I" || p == "G", "provenance must be I or G");
      n.provenance[static_cast<std::size_t>(i)] = p == "G" ? Provenance::Group : Provenance::Individual;
      n.group_present = n.group_present || p == "G";
    }
    int p5 = csv::to_int(f[2 + 2 * kSlotsPerDay], "p5");
    int p6 = csv::to_int(f[3 + 2 * kSlotsPerDay], "p6");
    require(0 <= p5 && p5 <= p6 && p6 <= kSlotsPerDay, "norm transition points out of order");
    n.transitions = TransitionPoints{p5, p5, p6, p6, p5, p6};
    norms.push_back(n);
  }
  return norms;
}

}  // namespace eldertrack
