#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eldertrack/error.hpp"
#include "eldertrack/time.hpp"

namespace eldertrack {

/// Room category alphabet. The integer values are persisted in every file
/// format and double as the deterministic tie-break order.
enum class Location : std::uint8_t {
  OriginL2 = 0,
  OriginL3 = 1,
  PrivateL2 = 2,
  PrivateL3 = 3,
  PublicB1 = 4,
  PublicL2 = 5,
  PublicL3 = 6,
  Restricted = 7,
  Missing = 8,
};

inline constexpr int kLocationCount = 9;
inline constexpr int kObservableLocationCount = 8;

inline constexpr std::array<Location, kLocationCount> kAllLocations = {
    Location::OriginL2, Location::OriginL3, Location::PrivateL2, Location::PrivateL3, Location::PublicB1,
    Location::PublicL2, Location::PublicL3, Location::Restricted, Location::Missing};

constexpr int to_code(Location loc) { return static_cast<int>(loc); }

inline Location location_from_code(int code) {
  if (code < 0 || code >= kLocationCount) {
    fail(ErrorKind::Validation, "location code out of range: " + std::to_string(code));
  }
  return static_cast<Location>(code);
}

inline std::string_view to_string(Location loc) {
  switch (loc) {
    case Location::OriginL2: return "OriginL2";
    case Location::OriginL3: return "OriginL3";
    case Location::PrivateL2: return "PrivateL2";
    case Location::PrivateL3: return "PrivateL3";
    case Location::PublicB1: return "PublicB1";
    case Location::PublicL2: return "PublicL2";
    case Location::PublicL3: return "PublicL3";
    case Location::Restricted: return "Restricted";
    case Location::Missing: return "Missing";
  }
  return "?";
}

constexpr bool is_origin(Location loc) { return loc == Location::OriginL2 || loc == Location::OriginL3; }
constexpr bool is_private(Location loc) { return loc == Location::PrivateL2 || loc == Location::PrivateL3; }
constexpr bool is_residential(Location loc) { return is_origin(loc) || is_private(loc); }
constexpr bool is_public(Location loc) {
  return loc == Location::PublicB1 || loc == Location::PublicL2 || loc == Location::PublicL3;
}

/// Residential category for a room on `level` (2 or 3).
inline Location residential_category(int level, bool origin) {
  require(level == 2 || level == 3, "residential rooms exist only on levels 2 and 3");
  if (level == 2) return origin ? Location::OriginL2 : Location::PrivateL2;
  return origin ? Location::OriginL3 : Location::PrivateL3;
}

inline constexpr int kSlotsPerDay = 288;
inline constexpr int kSlotMinutes = 5;
inline constexpr long long kSlotMillis = kSlotMinutes * 60'000LL;

/// Index of a 5-minute slot of the local day; slot i covers [5i, 5i+5) minutes.
class TimeSlot {
 public:
  explicit TimeSlot(int index) : index_(index) {
    require(index >= 0 && index < kSlotsPerDay, "time slot out of range: " + std::to_string(index));
  }

  static TimeSlot from_clock(int hour, int minute) { return TimeSlot((hour * 60 + minute) / kSlotMinutes); }

  int index() const { return index_; }
  int start_minute() const { return index_ * kSlotMinutes; }

  friend auto operator<=>(const TimeSlot&, const TimeSlot&) = default;

 private:
  int index_;
};

using SlotArray = std::array<Location, kSlotsPerDay>;

inline SlotArray filled_slots(Location loc) {
  SlotArray slots;
  slots.fill(loc);
  return slots;
}

/// One resident-day of 288 encoded slots.
class DayTrajectory {
 public:
  DayTrajectory(std::string resident_id, Date date, const SlotArray& slots)
      : resident_id_(std::move(resident_id)), date_(date), slots_(slots) {}

  /// Rejects any input that is not exactly one day of slots.
  DayTrajectory(std::string resident_id, Date date, std::span<const Location> slots)
      : resident_id_(std::move(resident_id)), date_(date) {
    require(slots.size() == kSlotsPerDay, "a day trajectory needs exactly 288 slots, got " +
                                              std::to_string(slots.size()));
    std::copy(slots.begin(), slots.end(), slots_.begin());
  }

  const std::string& resident_id() const { return resident_id_; }
  const Date& date() const { return date_; }
  const SlotArray& slots() const { return slots_; }
  Location operator[](int slot) const { return slots_[static_cast<std::size_t>(slot)]; }

  int missing_count() const {
    return static_cast<int>(std::count(slots_.begin(), slots_.end(), Location::Missing));
  }

  double valid_fraction() const {
    return static_cast<double>(kSlotsPerDay - missing_count()) / kSlotsPerDay;
  }

  friend bool operator==(const DayTrajectory&, const DayTrajectory&) = default;

 private:
  std::string resident_id_;
  Date date_;
  SlotArray slots_;
};

inline constexpr double kDefaultMinValidFraction = 0.5;

inline bool valid_day(const DayTrajectory& traj, double min_valid_fraction = kDefaultMinValidFraction) {
  require(min_valid_fraction >= 0.0 && min_valid_fraction <= 1.0, "min_valid_fraction must lie in [0,1]");
  return traj.valid_fraction() >= min_valid_fraction;
}

/// All days of one resident, strictly increasing by date.
class SpatioTemporalMatrix {
 public:
  SpatioTemporalMatrix(std::string resident_id, std::vector<DayTrajectory> days)
      : resident_id_(std::move(resident_id)), days_(std::move(days)) {
    std::sort(days_.begin(), days_.end(),
              [](const DayTrajectory& a, const DayTrajectory& b) { return a.date() < b.date(); });
    for (std::size_t i = 0; i < days_.size(); ++i) {
      require(days_[i].resident_id() == resident_id_,
              "day row for '" + days_[i].resident_id() + "' placed in matrix of '" + resident_id_ + "'");
      require(i == 0 || days_[i - 1].date() < days_[i].date(),
              "duplicate date " + format_date(days_[i].date()) + " for resident '" + resident_id_ + "'");
    }
  }

  const std::string& resident_id() const { return resident_id_; }
  const std::vector<DayTrajectory>& days() const { return days_; }
  std::size_t size() const { return days_.size(); }

  const DayTrajectory* find(const Date& date) const {
    auto it = std::lower_bound(days_.begin(), days_.end(), date,
                               [](const DayTrajectory& d, const Date& x) { return d.date() < x; });
    return it != days_.end() && it->date() == date ? &*it : nullptr;
  }

  std::vector<const DayTrajectory*> valid_days(double min_valid_fraction) const {
    std::vector<const DayTrajectory*> out;
    for (const auto& d : days_) {
      if (valid_day(d, min_valid_fraction)) out.push_back(&d);
    }
    return out;
  }

 private:
  std::string resident_id_;
  std::vector<DayTrajectory> days_;
};

struct ResidentProfile {
  std::string resident_id;
  Location origin;
  std::optional<int> cluster_label;

  ResidentProfile(std::string id, Location origin_loc, std::optional<int> label = std::nullopt)
      : resident_id(std::move(id)), origin(origin_loc), cluster_label(label) {
    require(is_origin(origin), "resident origin must be OriginL2 or OriginL3");
  }
};

}  // namespace eldertrack
