#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "eldertrack/core.hpp"
#include "eldertrack/localize.hpp"

namespace eldertrack::synth {

// Synthetic nursing-home cohorts with planted group schedules and injected
// deviations. Every schedule boundary and every planted episode sits on a
// 15-minute grid, so planted runs are at least three slots long and survive
// smoothing unchanged.

enum class DeviationKind { Sleep, Awake, PrivateVisit };

inline std::string_view to_string(DeviationKind k) {
  switch (k) {
    case DeviationKind::Sleep: return "Sleep";
    case DeviationKind::Awake: return "Awake";
    case DeviationKind::PrivateVisit: return "PrivateVisit";
  }
  return "?";
}

inline DeviationKind deviation_kind_from_string(std::string_view s) {
  if (s == "Sleep") return DeviationKind::Sleep;
  if (s == "Awake") return DeviationKind::Awake;
  if (s == "PrivateVisit") return DeviationKind::PrivateVisit;
  fail(ErrorKind::Validation, "unknown deviation kind '" + std::string(s) + "'");
}

struct Injection {
  std::string resident_id;
  Date date;
  DeviationKind kind;
  int start_slot;  // inclusive
  int end_slot;    // exclusive
  Location location;
};

/// Planted behaviour: episodes of `kind` on round(frequency * days) days.
struct PlantedBehavior {
  std::string resident_id;
  DeviationKind kind;
  double frequency;
};

struct NoiseModel {
  double slot_flip_rate = 0.0;
  double missing_rate = 0.0;
  int rssi_jitter_db = 0;
};

struct CohortSpec {
  int version = 1;
  int n_residents = 50;
  int n_groups = 5;
  int days = 60;
  Date start_date{std::chrono::year{2019}, std::chrono::month{9}, std::chrono::day{1}};
  int utc_offset_minutes = 0;
  NoiseModel noise;
  std::vector<PlantedBehavior> planted;
  std::vector<Injection> injections;
  bool raw = false;
};

inline constexpr int kMaxGroups = 10;

inline std::string resident_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "r%03d", i);
  return buf;
}

inline Date date_at(const CohortSpec& spec, int day) {
  return Date{std::chrono::sys_days{spec.start_date} + std::chrono::days{day}};
}

inline int day_index(const CohortSpec& spec, const Date& date) {
  return static_cast<int>((std::chrono::sys_days{date} - std::chrono::sys_days{spec.start_date}).count());
}

inline int group_of(int resident, int n_groups) { return resident % n_groups; }

/// Residential level of a group: even groups live on level 3, odd on level 2.
inline int group_level(int group) { return group % 2 == 0 ? 3 : 2; }

inline void validate(const CohortSpec& spec) {
  require(spec.version == 1, "unsupported cohort spec version " + std::to_string(spec.version));
  require(spec.n_groups >= 1 && spec.n_groups <= kMaxGroups, "n_groups must lie in [1, 10]");
  require(spec.n_residents >= spec.n_groups, "need at least one resident per group");
  require(spec.n_residents <= 1000, "n_residents must not exceed 1000");
  require(spec.days >= 1, "days must be positive");
  require(spec.noise.slot_flip_rate >= 0.0 && spec.noise.slot_flip_rate <= 1.0, "slot_flip_rate must lie in [0,1]");
  require(spec.noise.missing_rate >= 0.0 && spec.noise.missing_rate <= 1.0, "missing_rate must lie in [0,1]");
  require(spec.noise.rssi_jitter_db >= 0 && spec.noise.rssi_jitter_db <= 10, "rssi_jitter_db must lie in [0,10]");
  std::set<std::string> ids;
  for (int i = 0; i < spec.n_residents; ++i) ids.insert(resident_name(i));
  for (const auto& p : spec.planted) {
    require(ids.count(p.resident_id) != 0, "planted behaviour for unknown resident '" + p.resident_id + "'");
    require(p.frequency >= 0.0 && p.frequency <= 1.0, "planted frequency must lie in [0,1]");
  }
  for (const auto& inj : spec.injections) {
    require(ids.count(inj.resident_id) != 0, "injection for unknown resident '" + inj.resident_id + "'");
    int d = day_index(spec, inj.date);
    require(d >= 0 && d < spec.days, "injection on " + format_date(inj.date) + " outside the cohort's day range");
    require(0 <= inj.start_slot && inj.start_slot < inj.end_slot && inj.end_slot <= kSlotsPerDay,
            "injection slot range must satisfy 0 <= start < end <= 288");
    require(inj.location != Location::Missing, "injection location cannot be Missing");
  }
}

// ---------------------------------------------------------------- JSON I/O

inline nlohmann::json to_json(const CohortSpec& spec) {
  nlohmann::json planted = nlohmann::json::array();
  for (const auto& p : spec.planted) {
    planted.push_back({{"resident_id", p.resident_id}, {"kind", to_string(p.kind)}, {"frequency", p.frequency}});
  }
  nlohmann::json injections = nlohmann::json::array();
  for (const auto& i : spec.injections) {
    injections.push_back({{"resident_id", i.resident_id},
                          {"date", format_date(i.date)},
                          {"kind", to_string(i.kind)},
                          {"start_slot", i.start_slot},
                          {"end_slot", i.end_slot},
                          {"location_code", to_code(i.location)}});
  }
  return {{"version", spec.version},
          {"n_residents", spec.n_residents},
          {"n_groups", spec.n_groups},
          {"days", spec.days},
          {"start_date", format_date(spec.start_date)},
          {"utc_offset_minutes", spec.utc_offset_minutes},
          {"noise",
           {{"slot_flip_rate", spec.noise.slot_flip_rate},
            {"missing_rate", spec.noise.missing_rate},
            {"rssi_jitter_db", spec.noise.rssi_jitter_db}}},
          {"planted", planted},
          {"injections", injections},
          {"raw", spec.raw}};
}

inline CohortSpec spec_from_json(const nlohmann::json& j) {
  CohortSpec spec;
  try {
    spec.version = j.at("version").get<int>();
    spec.n_residents = j.value("n_residents", spec.n_residents);
    spec.n_groups = j.value("n_groups", spec.n_groups);
    spec.days = j.value("days", spec.days);
    if (j.contains("start_date")) spec.start_date = parse_date(j["start_date"].get<std::string>());
    spec.utc_offset_minutes = j.value("utc_offset_minutes", 0);
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      spec.noise.slot_flip_rate = n.value("slot_flip_rate", 0.0);
      spec.noise.missing_rate = n.value("missing_rate", 0.0);
      spec.noise.rssi_jitter_db = n.value("rssi_jitter_db", 0);
    }
    for (const auto& p : j.value("planted", nlohmann::json::array())) {
      spec.planted.push_back(PlantedBehavior{p.at("resident_id").get<std::string>(),
                                             deviation_kind_from_string(p.at("kind").get<std::string>()),
                                             p.at("frequency").get<double>()});
    }
    for (const auto& i : j.value("injections", nlohmann::json::array())) {
      spec.injections.push_back(Injection{i.at("resident_id").get<std::string>(),
                                          parse_date(i.at("date").get<std::string>()),
                                          deviation_kind_from_string(i.at("kind").get<std::string>()),
                                          i.at("start_slot").get<int>(), i.at("end_slot").get<int>(),
                                          location_from_code(i.at("location_code").get<int>())});
    }
    spec.raw = j.value("raw", false);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed cohort spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

// ---------------------------------------------------------------- building

inline std::string resident_room(int resident, int level) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "L%d-R%03d", level, resident);
  return buf;
}

inline constexpr const char* kBasementHall = "B1-HALL";
inline constexpr const char* kLevel2Lounge = "L2-LOUNGE";
inline constexpr const char* kLevel3Lounge = "L3-LOUNGE";
inline constexpr const char* kStaffRoom = "L1-STAFF";

inline std::string receiver_for(const std::string& room) { return "rx-" + room; }
inline std::string tag_for(const std::string& resident) { return "tag-" + resident; }

/// Planned group timetable of one day; every value is a slot index.
struct GroupDay {
  int wake;
  int sleep;
  SlotArray slots;
};

inline Location level_public(int level) { return level == 2 ? Location::PublicL2 : Location::PublicL3; }
inline Location level_origin(int level) { return residential_category(level, true); }
inline Location level_private(int level) { return residential_category(level, false); }

/// Group timetable: night at the origin, meals in the basement hall,
/// activities whose place and length vary from day to day, a lounge evening.
inline GroupDay group_day(int group, std::mt19937_64& rng) {
  const int level = group_level(group);
  const int shift = 3 * group;
  // Boundary jitter and place switches stay rare enough that every slot
  // keeps a clear modal location over a few weeks.
  std::discrete_distribution<int> shift_pick({0.15, 0.7, 0.15});
  auto jitter = [&](std::mt19937_64& g) { return shift_pick(g) - 1; };
  std::bernoulli_distribution switch_place(0.2);
  const int style = group % 3;
  Location morning_place = style == 1 ? Location::PublicB1 : level_public(level);
  Location afternoon_place = style == 2 ? Location::PublicB1 : level_public(level);
  if (switch_place(rng)) morning_place = morning_place == Location::PublicB1 ? level_public(level) : Location::PublicB1;
  if (switch_place(rng)) {
    afternoon_place = afternoon_place == Location::PublicB1 ? level_public(level) : Location::PublicB1;
  }
  const int wake = 78 + shift;
  const int rest = 126 + shift + 3 * jitter(rng);
  const int afternoon_end = 198 + shift + 3 * jitter(rng);
  const int sleep = 240 + shift;

  GroupDay day{wake, sleep, filled_slots(level_origin(level))};
  auto paint = [&](int from, int to, Location loc) {
    for (int t = from; t < to; ++t) day.slots[static_cast<std::size_t>(t)] = loc;
  };
  paint(wake, wake + 9, Location::PublicB1);
  paint(wake + 9, rest, morning_place);
  paint(rest, rest + 12, level_origin(level));
  paint(rest + 12, rest + 24, Location::PublicB1);
  paint(rest + 24, afternoon_end, afternoon_place);
  paint(afternoon_end, afternoon_end + 9, level_origin(level));
  paint(afternoon_end + 9, afternoon_end + 21, Location::PublicB1);
  paint(afternoon_end + 21, sleep, level_public(level));
  return day;
}

struct ResidentTruth {
  std::string resident_id;
  int group;
  int level;
  std::string origin_room;
  Location origin;
};

struct InjectionRecord {
  Injection injection;
  std::vector<int> deviated_slots;  // slots where the injection departs from the planned day
};

struct Cohort {
  CohortSpec spec;
  std::uint64_t seed = 0;
  std::vector<ResidentTruth> residents;      // by resident index
  std::vector<DayTrajectory> days;           // by resident, then date; noise applied
  std::vector<DayTrajectory> planned_days;   // same order; before noise
  std::vector<InjectionRecord> plan;
  std::map<std::pair<std::string, Date>, std::set<int>> expected_deviations;
  ReceiverMap receivers;
  Registry registry;

  std::vector<int> true_labels() const {
    std::vector<int> out;
    for (const auto& r : residents) out.push_back(r.group);
    return out;
  }
};

namespace detail {

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

inline Injection planted_episode(const PlantedBehavior& p, const ResidentTruth& who, const GroupDay& day,
                                 const Date& date, std::mt19937_64& rng) {
  switch (p.kind) {
    case DeviationKind::Sleep:
      return Injection{p.resident_id, date, p.kind, day.sleep, std::min(kSlotsPerDay, day.sleep + 30),
                       level_public(who.level)};
    case DeviationKind::Awake:
      return Injection{p.resident_id, date, p.kind, day.wake, day.wake + 18, who.origin};
    case DeviationKind::PrivateVisit: {
      // 30 slots inside the group period [wake + 12, sleep - 12), on the 15-minute grid.
      int lo = (day.wake + 15) / 3;
      int hi = (day.sleep - 15 - 30) / 3;
      std::uniform_int_distribution<int> pick(lo, std::max(lo, hi));
      int start = 3 * pick(rng);
      return Injection{p.resident_id, date, p.kind, start, start + 30, level_private(who.level)};
    }
  }
  return {};
}

}  // namespace detail

inline ReceiverMap building_map(const std::vector<ResidentTruth>& residents) {
  ReceiverMap map;
  for (const auto& r : residents) {
    map.add(receiver_for(r.origin_room), RoomInfo{r.origin_room, level_private(r.level), r.level});
  }
  map.add(receiver_for(kBasementHall), RoomInfo{kBasementHall, Location::PublicB1, -1});
  map.add(receiver_for(kLevel2Lounge), RoomInfo{kLevel2Lounge, Location::PublicL2, 2});
  map.add(receiver_for(kLevel3Lounge), RoomInfo{kLevel3Lounge, Location::PublicL3, 3});
  map.add(receiver_for(kStaffRoom), RoomInfo{kStaffRoom, Location::Restricted, 1});
  return map;
}

/// Deterministic cohort for (spec, seed).
inline Cohort generate(const CohortSpec& spec, std::uint64_t seed) {
  validate(spec);
  Cohort cohort;
  cohort.spec = spec;
  cohort.seed = seed;
  for (int i = 0; i < spec.n_residents; ++i) {
    int g = group_of(i, spec.n_groups);
    int level = group_level(g);
    cohort.residents.push_back(
        ResidentTruth{resident_name(i), g, level, resident_room(i, level), level_origin(level)});
  }
  cohort.receivers = building_map(cohort.residents);
  for (const auto& r : cohort.residents) cohort.registry.emplace(tag_for(r.resident_id), r.resident_id);

  auto schedule_rng = detail::stream(seed, 1);
  std::vector<std::vector<GroupDay>> timetable(static_cast<std::size_t>(spec.n_groups));
  for (int d = 0; d < spec.days; ++d) {
    for (int g = 0; g < spec.n_groups; ++g) timetable[static_cast<std::size_t>(g)].push_back(group_day(g, schedule_rng));
  }

  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < cohort.residents.size(); ++i) index_of[cohort.residents[i].resident_id] = i;

  std::vector<Injection> injections = spec.injections;
  auto plant_rng = detail::stream(seed, 2);
  for (const auto& p : spec.planted) {
    const auto& who = cohort.residents[index_of.at(p.resident_id)];
    std::vector<int> order(static_cast<std::size_t>(spec.days));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), plant_rng);
    auto count = static_cast<std::size_t>(std::lround(p.frequency * spec.days));
    order.resize(count);
    std::sort(order.begin(), order.end());
    for (int d : order) {
      const auto& day = timetable[static_cast<std::size_t>(who.group)][static_cast<std::size_t>(d)];
      injections.push_back(detail::planted_episode(p, who, day, date_at(spec, d), plant_rng));
    }
  }

  // Planned days: group timetable plus injections. The plan records exactly
  // the slots where an injection departs from the timetable.
  std::vector<SlotArray> planned(static_cast<std::size_t>(spec.n_residents * spec.days));
  auto cell = [&](std::size_t r, int d) -> SlotArray& {
    return planned[r * static_cast<std::size_t>(spec.days) + static_cast<std::size_t>(d)];
  };
  for (std::size_t r = 0; r < cohort.residents.size(); ++r) {
    for (int d = 0; d < spec.days; ++d) {
      cell(r, d) = timetable[static_cast<std::size_t>(cohort.residents[r].group)][static_cast<std::size_t>(d)].slots;
    }
  }
  std::map<std::pair<std::size_t, int>, std::set<int>> protected_slots;
  for (const auto& inj : injections) {
    std::size_t r = index_of.at(inj.resident_id);
    int d = day_index(spec, inj.date);
    const auto& base = timetable[static_cast<std::size_t>(cohort.residents[r].group)][static_cast<std::size_t>(d)].slots;
    InjectionRecord rec{inj, {}};
    auto& slots = cell(r, d);
    for (int t = inj.start_slot; t < inj.end_slot; ++t) {
      slots[static_cast<std::size_t>(t)] = inj.location;
      protected_slots[{r, d}].insert(t);
    }
    for (int t = inj.start_slot; t < inj.end_slot; ++t) {
      if (base[static_cast<std::size_t>(t)] != inj.location) rec.deviated_slots.push_back(t);
    }
    cohort.plan.push_back(std::move(rec));
  }
  for (std::size_t r = 0; r < cohort.residents.size(); ++r) {
    const auto& id = cohort.residents[r].resident_id;
    for (int d = 0; d < spec.days; ++d) {
      const auto& base = timetable[static_cast<std::size_t>(cohort.residents[r].group)][static_cast<std::size_t>(d)].slots;
      const auto& slots = cell(r, d);
      std::set<int> dev;
      for (int t = 0; t < kSlotsPerDay; ++t) {
        if (slots[static_cast<std::size_t>(t)] != base[static_cast<std::size_t>(t)]) dev.insert(t);
      }
      if (!dev.empty()) cohort.expected_deviations[{id, date_at(spec, d)}] = std::move(dev);
    }
  }

  // Noise after the plan is fixed: slot flips, then missing masks that
  // never cover an injected slot.
  auto noise_rng = detail::stream(seed, 3);
  std::bernoulli_distribution flip(spec.noise.slot_flip_rate);
  std::bernoulli_distribution drop(spec.noise.missing_rate);
  std::uniform_int_distribution<int> other(1, kObservableLocationCount - 1);
  for (std::size_t r = 0; r < cohort.residents.size(); ++r) {
    const auto& id = cohort.residents[r].resident_id;
    for (int d = 0; d < spec.days; ++d) {
      SlotArray noisy = cell(r, d);
      auto prot = protected_slots.find({r, d});
      for (int t = 0; t < kSlotsPerDay; ++t) {
        auto u = static_cast<std::size_t>(t);
        if (spec.noise.slot_flip_rate > 0.0 && flip(noise_rng)) {
          noisy[u] = static_cast<Location>((to_code(noisy[u]) + other(noise_rng)) % kObservableLocationCount);
        }
        if (spec.noise.missing_rate > 0.0 && drop(noise_rng) &&
            (prot == protected_slots.end() || prot->second.count(t) == 0)) {
          noisy[u] = Location::Missing;
        }
      }
      cohort.planned_days.emplace_back(id, date_at(spec, d), cell(r, d));
      cohort.days.emplace_back(id, date_at(spec, d), noisy);
    }
  }
  return cohort;
}

/// Room a resident occupies for an encoded symbol. Private visits go to the
/// next resident's room on the wanted level.
inline std::string room_for(const Cohort& cohort, std::size_t resident, Location loc) {
  const auto& who = cohort.residents[resident];
  switch (loc) {
    case Location::OriginL2:
    case Location::OriginL3:
      return who.origin_room;
    case Location::PrivateL2:
    case Location::PrivateL3: {
      int level = loc == Location::PrivateL2 ? 2 : 3;
      const auto n = cohort.residents.size();
      for (std::size_t step = 1; step <= n; ++step) {
        const auto& other = cohort.residents[(resident + step) % n];
        if (other.level == level && other.resident_id != who.resident_id) return other.origin_room;
      }
      fail(ErrorKind::Validation, "no other residential room on level " + std::to_string(level));
    }
    case Location::PublicB1: return kBasementHall;
    case Location::PublicL2: return kLevel2Lounge;
    case Location::PublicL3: return kLevel3Lounge;
    case Location::Restricted: return kStaffRoom;
    case Location::Missing: break;
  }
  fail(ErrorKind::Validation, "Missing has no room");
}

/// Raw scan log whose ideal localization reproduces `cohort.days`. In each
/// 15 s cycle the occupied room wins sub-windows 0, 2 and 4, a neighbouring
/// lounge wins sub-windows 1 and 3, and one record below the default RSSI
/// threshold is dropped by the filter. Missing slots are silent.
inline std::vector<ScanRecord> scan_log(const Cohort& cohort) {
  auto rng = detail::stream(cohort.seed, 4);
  const int jitter = cohort.spec.noise.rssi_jitter_db;
  std::uniform_int_distribution<int> noise(-jitter, jitter);
  auto jittered = [&](int rssi) { return jitter ? std::clamp(rssi + noise(rng), -120, 0) : rssi; };
  LocalClock clock{cohort.spec.utc_offset_minutes};
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < cohort.residents.size(); ++i) index_of[cohort.residents[i].resident_id] = i;

  std::vector<ScanRecord> scans;
  for (const auto& day : cohort.days) {
    std::size_t r = index_of.at(day.resident_id());
    const std::string tag = tag_for(day.resident_id());
    const Instant midnight = clock.local_midnight_utc(day.date());
    for (int s = 0; s < kSlotsPerDay; ++s) {
      Location loc = day[s];
      if (loc == Location::Missing) continue;
      const std::string rx = receiver_for(room_for(cohort, r, loc));
      const std::string neighbour = receiver_for(loc == Location::PublicL2 ? kLevel3Lounge : kLevel2Lounge);
      const std::string far = receiver_for(kStaffRoom);
      for (int c = 0; c < kSlotMillis / kCycleMillis; ++c) {
        Instant cycle = midnight + Millis{s * kSlotMillis + c * kCycleMillis};
        for (int w = 0; w < kSubWindowsPerCycle; ++w) {
          Instant ts = cycle + Millis{w * kSubWindowMillis + 1000};
          if (w % 2 == 0) {
            scans.emplace_back(ts, rx, tag, jittered(-55));
          } else {
            scans.emplace_back(ts, neighbour, tag, jittered(-62));
          }
        }
        scans.emplace_back(cycle + Millis{500}, far, tag, -85);
      }
    }
  }
  return scans;
}

inline void write_plan(std::ostream& out, const Cohort& cohort) {
  for (const auto& r : cohort.residents) {
    nlohmann::json j = {{"kind", "membership"},     {"resident_id", r.resident_id},
                        {"group", r.group},          {"origin_room", r.origin_room},
                        {"origin_code", to_code(r.origin)}};
    out << j.dump() << '\n';
  }
  for (const auto& rec : cohort.plan) {
    const auto& i = rec.injection;
    nlohmann::json j = {{"kind", "injection"},
                        {"resident_id", i.resident_id},
                        {"date", format_date(i.date)},
                        {"deviation", to_string(i.kind)},
                        {"start_slot", i.start_slot},
                        {"end_slot", i.end_slot},
                        {"location_code", to_code(i.location)},
                        {"deviated_slots", rec.deviated_slots.size()}};
    out << j.dump() << '\n';
  }
}

}  // namespace eldertrack::synth
