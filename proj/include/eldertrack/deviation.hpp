#pragma once

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eldertrack/core.hpp"
#include "eldertrack/norms.hpp"

namespace eldertrack {

/// Observed day with every slot that agrees with the norm blanked out.
struct DeviationDay {
  std::string resident_id;
  Date date;
  std::array<std::optional<Location>, kSlotsPerDay> slots;
  std::array<bool, kSlotsPerDay> valid;  // false where the input was Missing
  int deviated_count = 0;
  int invalid_count = 0;

  const std::optional<Location>& operator[](int slot) const { return slots[static_cast<std::size_t>(slot)]; }
};

/// Null where the input equals the norm or is Missing; the input symbol otherwise.
inline DeviationDay filter_day(const DayTrajectory& input, const HybridNorm& norm) {
  require(input.resident_id() == norm.resident_id && input.date() == norm.date,
          "filter_day needs input and norm of the same resident-day");
  DeviationDay out;
  out.resident_id = input.resident_id();
  out.date = input.date();
  for (int t = 0; t < kSlotsPerDay; ++t) {
    auto u = static_cast<std::size_t>(t);
    Location x = input[t];
    out.valid[u] = x != Location::Missing;
    if (x == Location::Missing) {
      ++out.invalid_count;
    } else if (x != norm[t]) {
      out.slots[u] = x;
      ++out.deviated_count;
    }
  }
  return out;
}

/// One DeviationDay per valid day of `matrix`, in date order.
inline std::vector<DeviationDay> deviation_history(const SpatioTemporalMatrix& matrix,
                                                   const std::map<Date, const HybridNorm*>& norms,
                                                   double min_valid_fraction = kDefaultMinValidFraction) {
  std::vector<DeviationDay> history;
  for (const auto* day : matrix.valid_days(min_valid_fraction)) {
    auto it = norms.find(day->date());
    if (it == norms.end()) {
      fail(ErrorKind::NormGap, "no hybrid norm for " + matrix.resident_id() + " on " + format_date(day->date()));
    }
    history.push_back(filter_day(*day, *it->second));
  }
  return history;
}

struct Episode {
  int start_slot;  // inclusive
  int end_slot;    // exclusive
  Location location;

  friend bool operator==(const Episode&, const Episode&) = default;
};

/// Maximal runs of the same deviated symbol.
inline std::vector<Episode> episodes(const DeviationDay& day) {
  std::vector<Episode> out;
  for (int t = 0; t < kSlotsPerDay; ++t) {
    const auto& s = day[t];
    if (!s) continue;
    if (!out.empty() && out.back().end_slot == t && out.back().location == *s) {
      ++out.back().end_slot;
    } else {
      out.push_back(Episode{t, t + 1, *s});
    }
  }
  return out;
}

inline void write_deviation_jsonl(std::ostream& out, const std::vector<DeviationDay>& days) {
  for (const auto& d : days) {
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& e : episodes(d)) {
      eps.push_back({{"start_slot", e.start_slot}, {"end_slot", e.end_slot}, {"location_code", to_code(e.location)}});
    }
    nlohmann::json j = {{"resident_id", d.resident_id},
                        {"date", format_date(d.date)},
                        {"episodes", eps},
                        {"deviated_count", d.deviated_count}};
    out << j.dump() << '\n';
  }
}

/// Dense mirror: one row per resident-day, empty field for null slots and
/// code 8 where the input was Missing.
inline void write_deviation_csv(std::ostream& out, const std::vector<DeviationDay>& days) {
  out << "resident_id,date";
  for (int i = 0; i < kSlotsPerDay; ++i) out << ",slot_" << i;
  out << '\n';
  for (const auto& d : days) {
    out << d.resident_id << ',' << format_date(d.date);
    for (int t = 0; t < kSlotsPerDay; ++t) {
      out << ',';
      if (d[t]) {
        out << to_code(*d[t]);
      } else if (!d.valid[static_cast<std::size_t>(t)]) {
        out << to_code(Location::Missing);
      }
    }
    out << '\n';
  }
}

inline std::vector<DeviationDay> read_deviation_csv(std::istream& in) {
  auto table = csv::read_table(in);
  require(table.header.rfind("resident_id,date,slot_0,", 0) == 0, "deviation CSV header mismatch");
  std::vector<DeviationDay> days;
  for (const auto& row : table.rows) {
    auto f = csv::split(row);
    require(f.size() == 2 + kSlotsPerDay, "deviation row has wrong field count");
    DeviationDay d;
    d.resident_id = std::string(csv::trim(f[0]));
    d.date = parse_date(csv::trim(f[1]));
    for (int t = 0; t < kSlotsPerDay; ++t) {
      auto u = static_cast<std::size_t>(t);
      auto field = csv::trim(f[2 + u]);
      d.valid[u] = true;
      if (field.empty()) continue;
      Location loc = location_from_code(csv::to_int(field, "deviation slot"));
      if (loc == Location::Missing) {
        d.valid[u] = false;
        ++d.invalid_count;
      } else {
        d.slots[u] = loc;
        ++d.deviated_count;
      }
    }
    days.push_back(d);
  }
  return days;
}

}  // namespace eldertrack
