#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "eldertrack/core.hpp"
#include "eldertrack/csv.hpp"

namespace eldertrack {

// Trajectory CSV: `resident_id,date,slot_0,...,slot_287` with integer codes.

inline std::string trajectory_header() {
  std::string header = "resident_id,date";
  for (int i = 0; i < kSlotsPerDay; ++i) header += ",slot_" + std::to_string(i);
  return header;
}

inline void write_trajectories(std::ostream& out, const std::vector<DayTrajectory>& days) {
  out << trajectory_header() << '\n';
  for (const auto& day : days) {
    out << csv::checked_token(day.resident_id(), "resident_id") << ',' << format_date(day.date());
    for (Location loc : day.slots()) out << ',' << to_code(loc);
    out << '\n';
  }
}

inline std::vector<DayTrajectory> read_trajectories(std::istream& in) {
  auto table = csv::read_table(in);
  require(table.header == trajectory_header(), "trajectory CSV header mismatch");
  std::vector<DayTrajectory> days;
  days.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    auto fields = csv::split(row);
    require(fields.size() == 2 + kSlotsPerDay,
            "trajectory row needs 290 fields, got " + std::to_string(fields.size()));
    SlotArray slots;
    for (int i = 0; i < kSlotsPerDay; ++i) {
      slots[static_cast<std::size_t>(i)] = location_from_code(csv::to_int(fields[2 + i], "slot code"));
    }
    days.emplace_back(csv::checked_token(csv::trim(fields[0]), "resident_id"), parse_date(csv::trim(fields[1])),
                      slots);
  }
  return days;
}

/// Groups day rows into per-resident matrices, ordered by resident id.
inline std::vector<SpatioTemporalMatrix> group_by_resident(std::vector<DayTrajectory> days) {
  std::map<std::string, std::vector<DayTrajectory>> by_resident;
  for (auto& day : days) {
    auto id = day.resident_id();
    by_resident[id].push_back(std::move(day));
  }
  std::vector<SpatioTemporalMatrix> out;
  out.reserve(by_resident.size());
  for (auto& [id, rows] : by_resident) out.emplace_back(id, std::move(rows));
  return out;
}

inline std::vector<DayTrajectory> flatten(const std::vector<SpatioTemporalMatrix>& matrices) {
  std::vector<DayTrajectory> days;
  for (const auto& m : matrices) days.insert(days.end(), m.days().begin(), m.days().end());
  return days;
}

}  // namespace eldertrack
