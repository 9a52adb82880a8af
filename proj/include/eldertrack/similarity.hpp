#pragma once

#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eldertrack/core.hpp"

namespace eldertrack {

/// Per-resident modal day (individual norm).
struct AggregatedTrajectory {
  std::string resident_id;
  SlotArray slots;

  Location operator[](int slot) const { return slots[static_cast<std::size_t>(slot)]; }
  friend bool operator==(const AggregatedTrajectory&, const AggregatedTrajectory&) = default;
};

/// Per-slot symbol counts over a set of days; Missing is never counted.
class SlotCounts {
 public:
  SlotCounts() {
    for (auto& row : counts_) row.fill(0);
  }

  void add(const SlotArray& day, int sign = 1) {
    for (int s = 0; s < kSlotsPerDay; ++s) {
      Location loc = day[static_cast<std::size_t>(s)];
      if (loc != Location::Missing) counts_[static_cast<std::size_t>(s)][static_cast<std::size_t>(to_code(loc))] += sign;
    }
    rows_ += sign;
  }

  int rows() const { return rows_; }
  int count(int slot, Location loc) const {
    return counts_[static_cast<std::size_t>(slot)][static_cast<std::size_t>(to_code(loc))];
  }

  /// Most frequent symbol at `slot`; on a tie the preferred symbol wins if it
  /// is among the tied ones, otherwise the lowest code. Missing if no data.
  Location mode(int slot, std::optional<Location> preferred) const {
    const auto& row = counts_[static_cast<std::size_t>(slot)];
    int best = 0;
    for (int c : row) best = std::max(best, c);
    if (best == 0) return Location::Missing;
    if (preferred && *preferred != Location::Missing && row[static_cast<std::size_t>(to_code(*preferred))] == best) {
      return *preferred;
    }
    for (int code = 0; code < kObservableLocationCount; ++code) {
      if (row[static_cast<std::size_t>(code)] == best) return static_cast<Location>(code);
    }
    return Location::Missing;
  }

  SlotArray modes(std::optional<Location> preferred) const {
    SlotArray out;
    for (int s = 0; s < kSlotsPerDay; ++s) out[static_cast<std::size_t>(s)] = mode(s, preferred);
    return out;
  }

 private:
  std::array<std::array<int, kObservableLocationCount>, kSlotsPerDay> counts_;
  int rows_ = 0;
};

/// Slot-wise mode over the given rows (ordinal ranking by frequency).
inline SlotArray aggregate_rows(std::span<const DayTrajectory* const> rows, std::optional<Location> preferred) {
  SlotCounts counts;
  for (const auto* row : rows) counts.add(row->slots());
  return counts.modes(preferred);
}

/// Individual norm over the resident's valid days. Ties go to the origin.
inline AggregatedTrajectory aggregate(const SpatioTemporalMatrix& matrix, std::optional<Location> origin,
                                      double min_valid_fraction = kDefaultMinValidFraction) {
  auto valid = matrix.valid_days(min_valid_fraction);
  if (valid.empty()) fail(ErrorKind::NoValidDays, "resident '" + matrix.resident_id() + "' has no valid days");
  return AggregatedTrajectory{matrix.resident_id(), aggregate_rows(valid, origin)};
}

enum class WeightKind { Uniform, ActiveDayFocus, OnlyActiveDay };

inline std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::Uniform: return "Uniform";
    case WeightKind::ActiveDayFocus: return "ActiveDayFocus";
    case WeightKind::OnlyActiveDay: return "OnlyActiveDay";
  }
  return "?";
}

inline WeightKind weight_kind_from_string(std::string_view s) {
  if (s == "Uniform") return WeightKind::Uniform;
  if (s == "ActiveDayFocus") return WeightKind::ActiveDayFocus;
  if (s == "OnlyActiveDay") return WeightKind::OnlyActiveDay;
  fail(ErrorKind::Validation, "unknown weight kind '" + std::string(s) + "'");
}

inline constexpr double kDefaultActiveFocusRatio = 4.0;

/// Temporal weights over the day's slots, summing to one.
class WeightVector {
 public:
  static WeightVector uniform() {
    std::array<double, kSlotsPerDay> w;
    w.fill(1.0);
    return WeightVector(WeightKind::Uniform, w);
  }

  /// 06:00-23:59 weighted `ratio` times higher than 00:00-05:59.
  static WeightVector active_day_focus(double ratio = kDefaultActiveFocusRatio) {
    require(ratio > 0.0, "active-day focus ratio must be positive");
    std::array<double, kSlotsPerDay> w;
    for (int s = 0; s < kSlotsPerDay; ++s) w[static_cast<std::size_t>(s)] = s >= 72 ? ratio : 1.0;
    return WeightVector(WeightKind::ActiveDayFocus, w);
  }

  /// Only 07:00-20:00 (slots 84..239) carries weight.
  static WeightVector only_active_day() {
    std::array<double, kSlotsPerDay> w;
    for (int s = 0; s < kSlotsPerDay; ++s) w[static_cast<std::size_t>(s)] = (s >= 84 && s < 240) ? 1.0 : 0.0;
    return WeightVector(WeightKind::OnlyActiveDay, w);
  }

  static WeightVector of_kind(WeightKind kind, double focus_ratio = kDefaultActiveFocusRatio) {
    switch (kind) {
      case WeightKind::Uniform: return uniform();
      case WeightKind::ActiveDayFocus: return active_day_focus(focus_ratio);
      case WeightKind::OnlyActiveDay: return only_active_day();
    }
    return uniform();
  }

  WeightKind kind() const { return kind_; }
  const std::array<double, kSlotsPerDay>& weights() const { return weights_; }
  double operator[](int slot) const { return weights_[static_cast<std::size_t>(slot)]; }

 private:
  WeightVector(WeightKind kind, std::array<double, kSlotsPerDay> raw) : kind_(kind), weights_(raw) {
    double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    for (auto& v : weights_) v /= total;
  }

  WeightKind kind_;
  std::array<double, kSlotsPerDay> weights_;
};

inline constexpr int kDefaultWindowHalfWidth = 6;  // 30 minutes

/// Slot equality for the kernels: Missing never matches, not even Missing.
constexpr bool slots_match(Location a, Location b) { return a == b && a != Location::Missing; }

/// Windowed mismatch m(i): share of unequal slots in [i-h, i+h], the window
/// clamped to the day and averaged over its actual width.
inline std::array<double, kSlotsPerDay> windowed_mismatch(const SlotArray& a, const SlotArray& b, int h_slots) {
  require(h_slots >= 0, "window half-width must be non-negative");
  std::array<int, kSlotsPerDay + 1> prefix{};
  for (int j = 0; j < kSlotsPerDay; ++j) {
    auto u = static_cast<std::size_t>(j);
    prefix[u + 1] = prefix[u] + (slots_match(a[u], b[u]) ? 0 : 1);
  }
  std::array<double, kSlotsPerDay> m;
  for (int i = 0; i < kSlotsPerDay; ++i) {
    int lo = std::max(0, i - h_slots);
    int hi = std::min(kSlotsPerDay - 1, i + h_slots);
    m[static_cast<std::size_t>(i)] = static_cast<double>(prefix[static_cast<std::size_t>(hi + 1)] -
                                                         prefix[static_cast<std::size_t>(lo)]) /
                                     (hi - lo + 1);
  }
  return m;
}

/// Weighted Windowed Overlap distance, uniformly weighted; in [0, 1].
inline double wwo_distance(const AggregatedTrajectory& a, const AggregatedTrajectory& b,
                           int h_slots = kDefaultWindowHalfWidth) {
  auto m = windowed_mismatch(a.slots, b.slots, h_slots);
  return std::accumulate(m.begin(), m.end(), 0.0) / kSlotsPerDay;
}

inline double weighted_distance(const AggregatedTrajectory& a, const AggregatedTrajectory& b, const WeightVector& w,
                                int h_slots = kDefaultWindowHalfWidth) {
  auto m = windowed_mismatch(a.slots, b.slots, h_slots);
  double d = 0.0;
  for (int i = 0; i < kSlotsPerDay; ++i) d += w[i] * m[static_cast<std::size_t>(i)];
  return d;
}

/// s = 1 / (1 + sum_i w_i m(i)).
inline double similarity(const AggregatedTrajectory& a, const AggregatedTrajectory& b, const WeightVector& w,
                         int h_slots = kDefaultWindowHalfWidth) {
  return 1.0 / (1.0 + weighted_distance(a, b, w, h_slots));
}

/// Share of slots holding the same symbol (test baseline).
inline double overlap_similarity(const AggregatedTrajectory& a, const AggregatedTrajectory& b) {
  int equal = 0;
  for (int i = 0; i < kSlotsPerDay; ++i) equal += slots_match(a[i], b[i]) ? 1 : 0;
  return static_cast<double>(equal) / kSlotsPerDay;
}

}  // namespace eldertrack
