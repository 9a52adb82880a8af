#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eldertrack/core.hpp"
#include "eldertrack/localize.hpp"
#include "eldertrack/time.hpp"

namespace eldertrack {

inline constexpr int kDefaultMinStaySlots = 2;

/// True for the slots covering 23:00-06:00 (276..287 and 0..71).
constexpr bool is_night_slot(int slot) { return slot >= 276 || slot < 72; }

/// Rooms ordered by room_id; the index order is the room tie-break order.
class RoomIndex {
 public:
  explicit RoomIndex(const ReceiverMap& map) {
    for (const auto& [id, room] : map.rooms()) {
      index_.emplace(id, static_cast<int>(rooms_.size()));
      rooms_.push_back(room);
    }
  }

  int index_of(const std::string& room_id) const {
    auto it = index_.find(room_id);
    if (it == index_.end()) fail(ErrorKind::Validation, "room '" + room_id + "' not in receiver map");
    return it->second;
  }

  const RoomInfo& room(int index) const { return rooms_.at(static_cast<std::size_t>(index)); }
  std::size_t size() const { return rooms_.size(); }

 private:
  std::vector<RoomInfo> rooms_;
  std::map<std::string, int> index_;
};

inline constexpr int kNoRoom = -1;

/// Window-fitted day at room granularity, before origin-relative encoding.
struct RoomDay {
  Date date;
  std::array<int, kSlotsPerDay> rooms;  // RoomIndex index or kNoRoom
};

/// Windows fitting: each fix stands for the 15 s cycle that ended at
/// `cycle_end`; a slot keeps the room with the longest total dwell inside
/// it (equal dwell: lowest room_id). Slots without fixes stay empty.
/// Returns one RoomDay per local date that has at least one fix.
inline std::vector<RoomDay> fit_room_days(std::span<const LocationFix> fixes, const RoomIndex& rooms,
                                          const LocalClock& clock) {
  std::map<Date, std::vector<std::map<int, long long>>> dwell;
  for (const auto& fix : fixes) {
    Instant start = fix.cycle_end - Millis{kCycleMillis};
    Date date = clock.local_date(start);
    int slot = static_cast<int>(clock.millis_into_day(start) / kSlotMillis);
    auto& day = dwell[date];
    if (day.empty()) day.resize(kSlotsPerDay);
    day[static_cast<std::size_t>(slot)][rooms.index_of(fix.room_id)] += kCycleMillis;
  }
  std::vector<RoomDay> out;
  for (const auto& [date, slots] : dwell) {
    RoomDay day{date, {}};
    for (int s = 0; s < kSlotsPerDay; ++s) {
      int best = kNoRoom;
      long long best_dwell = 0;
      for (const auto& [room, ms] : slots[static_cast<std::size_t>(s)]) {  // ascending index
        if (ms > best_dwell) {
          best = room;
          best_dwell = ms;
        }
      }
      day.rooms[static_cast<std::size_t>(s)] = best;
    }
    out.push_back(day);
  }
  return out;
}

/// Location encoding relative to the resident's origin room.
inline DayTrajectory encode_day(const std::string& resident_id, const RoomDay& day, const RoomIndex& rooms,
                                std::optional<int> origin_room) {
  SlotArray slots;
  for (int s = 0; s < kSlotsPerDay; ++s) {
    int r = day.rooms[static_cast<std::size_t>(s)];
    if (r == kNoRoom) {
      slots[static_cast<std::size_t>(s)] = Location::Missing;
      continue;
    }
    const RoomInfo& info = rooms.room(r);
    slots[static_cast<std::size_t>(s)] =
        is_residential(info.category) ? residential_category(info.level, origin_room && *origin_room == r)
                                      : info.category;
  }
  return DayTrajectory(resident_id, day.date, slots);
}

/// Windows fitting plus encoding for the fixes of one resident-day.
inline DayTrajectory build_day(std::span<const LocationFix> fixes, const RoomIndex& rooms, const LocalClock& clock,
                               std::optional<int> origin_room) {
  require(!fixes.empty(), "build_day needs at least one fix");
  auto days = fit_room_days(fixes, rooms, clock);
  require(days.size() == 1, "build_day fixes span more than one local day");
  return encode_day(fixes.front().resident_id, days.front(), rooms, origin_room);
}

/// Replaces every maximal run of equal non-missing values shorter than
/// `min_stay` with the value of its longer non-missing neighbouring run
/// (equal length: the preceding run). Shortest runs are absorbed first, so
/// the result has no absorbable short run left and smoothing is idempotent.
/// A short run whose only neighbours are missing or the day edge is kept.
template <typename T>
std::vector<T> smooth_runs(std::span<const T> values, int min_stay, const T& missing) {
  require(min_stay >= 1, "min_stay_slots must be at least 1");
  struct Run {
    T value;
    int length;
  };
  std::vector<Run> runs;
  for (const auto& v : values) {
    if (!runs.empty() && runs.back().value == v) {
      ++runs.back().length;
    } else {
      runs.push_back(Run{v, 1});
    }
  }
  auto usable = [&](std::size_t i) { return !(runs[i].value == missing); };
  while (true) {
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (!usable(i) || runs[i].length >= min_stay) continue;
      bool has_neighbour = (i > 0 && usable(i - 1)) || (i + 1 < runs.size() && usable(i + 1));
      if (has_neighbour && (!pick || runs[i].length < runs[*pick].length)) pick = i;
    }
    if (!pick) break;
    std::size_t i = *pick;
    std::optional<std::size_t> target;
    if (i > 0 && usable(i - 1)) target = i - 1;
    if (i + 1 < runs.size() && usable(i + 1) && (!target || runs[i + 1].length > runs[*target].length)) {
      target = i + 1;
    }
    runs[i].value = runs[*target].value;
    std::vector<Run> merged;
    for (const auto& r : runs) {
      if (!merged.empty() && merged.back().value == r.value) {
        merged.back().length += r.length;
      } else {
        merged.push_back(r);
      }
    }
    runs = std::move(merged);
  }
  std::vector<T> out;
  out.reserve(values.size());
  for (const auto& r : runs) out.insert(out.end(), static_cast<std::size_t>(r.length), r.value);
  return out;
}

inline DayTrajectory smooth(const DayTrajectory& traj, int min_stay_slots = kDefaultMinStaySlots) {
  auto out = smooth_runs(std::span<const Location>(traj.slots()), min_stay_slots, Location::Missing);
  return DayTrajectory(traj.resident_id(), traj.date(), std::span<const Location>(out));
}

struct OriginRoom {
  int room;
  std::string room_id;
  Location category;
};

/// Origin = residential room with the most night-window dwell over all days
/// (equal dwell: lowest room_id).
inline OriginRoom detect_origin_room(std::span<const RoomDay> days, const RoomIndex& rooms) {
  std::map<int, long long> night;
  for (const auto& day : days) {
    for (int s = 0; s < kSlotsPerDay; ++s) {
      int r = day.rooms[static_cast<std::size_t>(s)];
      if (is_night_slot(s) && r != kNoRoom && is_residential(rooms.room(r).category)) ++night[r];
    }
  }
  if (night.empty()) fail(ErrorKind::NoOriginDetectable, "no residential-room dwell in the night window");
  auto best = std::max_element(night.begin(), night.end(), [](const auto& a, const auto& b) {
    return a.second < b.second;  // first maximum == lowest index
  });
  const RoomInfo& info = rooms.room(best->first);
  return OriginRoom{best->first, info.room_id, residential_category(info.level, true)};
}

/// Origin category of an already-encoded resident: the origin symbol with the
/// most night-window slots across all days (OriginL2 on a tie).
inline Location detect_origin(const SpatioTemporalMatrix& matrix) {
  int l2 = 0, l3 = 0;
  for (const auto& day : matrix.days()) {
    for (int s = 0; s < kSlotsPerDay; ++s) {
      if (!is_night_slot(s)) continue;
      l2 += day[s] == Location::OriginL2;
      l3 += day[s] == Location::OriginL3;
    }
  }
  if (l2 == 0 && l3 == 0) {
    fail(ErrorKind::NoOriginDetectable, "resident '" + matrix.resident_id() + "' never at origin overnight");
  }
  return l3 > l2 ? Location::OriginL3 : Location::OriginL2;
}

struct PreprocessResult {
  std::vector<DayTrajectory> days;
  std::map<std::string, OriginRoom> origins;
};

/// Full preprocessing for a fix stream: windows fitting, origin detection,
/// encoding and smoothing, per resident.
inline PreprocessResult preprocess_fixes(const std::vector<LocationFix>& fixes, const ReceiverMap& map,
                                         const LocalClock& clock, int min_stay_slots = kDefaultMinStaySlots) {
  RoomIndex rooms(map);
  std::map<std::string, std::vector<LocationFix>> by_resident;
  for (const auto& f : fixes) by_resident[f.resident_id].push_back(f);
  PreprocessResult result;
  for (const auto& [resident, own] : by_resident) {
    auto room_days = fit_room_days(own, rooms, clock);
    auto origin = detect_origin_room(room_days, rooms);
    for (const auto& rd : room_days) {
      result.days.push_back(smooth(encode_day(resident, rd, rooms, origin.room), min_stay_slots));
    }
    result.origins.emplace(resident, origin);
  }
  return result;
}

}  // namespace eldertrack
