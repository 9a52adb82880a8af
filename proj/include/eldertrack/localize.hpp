#pragma once

#include <algorithm>
#include <array>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "eldertrack/core.hpp"
#include "eldertrack/csv.hpp"
#include "eldertrack/time.hpp"

namespace eldertrack {

inline constexpr int kDefaultRssiThresholdDbm = -70;
inline constexpr long long kCycleMillis = 15'000;
inline constexpr long long kSubWindowMillis = 3'000;
inline constexpr int kSubWindowsPerCycle = 5;

struct ScanRecord {
  Instant timestamp;
  std::string receiver_id;
  std::string tag_id;
  int rssi = 0;

  ScanRecord(Instant ts, std::string rx, std::string tag, int rssi_dbm)
      : timestamp(ts), receiver_id(std::move(rx)), tag_id(std::move(tag)), rssi(rssi_dbm) {
    require(rssi >= -120 && rssi <= 0, "rssi out of [-120, 0]: " + std::to_string(rssi));
  }

  friend bool operator==(const ScanRecord&, const ScanRecord&) = default;
};

inline bool scan_less(const ScanRecord& a, const ScanRecord& b) {
  return std::tie(a.timestamp, a.receiver_id, a.tag_id, a.rssi) <
         std::tie(b.timestamp, b.receiver_id, b.tag_id, b.rssi);
}

struct RoomInfo {
  std::string room_id;
  Location category;  // residential rooms carry their Private* category
  int level;          // basement is -1
};

/// receiver_id -> room. Authoritative: a scan from an unmapped receiver is an error.
class ReceiverMap {
 public:
  void add(const std::string& receiver_id, RoomInfo room) {
    require(room.category != Location::Missing, "receiver '" + receiver_id + "' mapped to Missing");
    if (is_residential(room.category)) {
      require(room.level == 2 || room.level == 3, "residential room '" + room.room_id + "' must be on level 2 or 3");
      // Origin is resident-relative; the map only records that the room is residential.
      room.category = residential_category(room.level, false);
    }
    auto [it, inserted] = entries_.emplace(receiver_id, std::move(room));
    require(inserted, "receiver '" + receiver_id + "' mapped twice");
    auto& stored = it->second;
    auto existing = rooms_.find(stored.room_id);
    if (existing == rooms_.end()) {
      rooms_.emplace(stored.room_id, stored);
    } else {
      require(existing->second.category == stored.category && existing->second.level == stored.level,
              "room '" + stored.room_id + "' has conflicting category or level");
    }
  }

  const RoomInfo& at(const std::string& receiver_id) const {
    auto it = entries_.find(receiver_id);
    if (it == entries_.end()) fail(ErrorKind::UnknownReceiver, "unknown receiver_id '" + receiver_id + "'");
    return it->second;
  }

  bool contains(const std::string& receiver_id) const { return entries_.count(receiver_id) != 0; }

  const RoomInfo* room(const std::string& room_id) const {
    auto it = rooms_.find(room_id);
    return it == rooms_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, RoomInfo>& entries() const { return entries_; }
  const std::map<std::string, RoomInfo>& rooms() const { return rooms_; }

 private:
  std::map<std::string, RoomInfo> entries_;
  std::map<std::string, RoomInfo> rooms_;
};

inline ReceiverMap read_receiver_map(std::istream& in) {
  auto table = csv::read_table(in);
  require(table.header == "receiver_id,room_id,category_code,level", "receiver map CSV header mismatch");
  ReceiverMap map;
  for (const auto& row : table.rows) {
    auto f = csv::split(row);
    require(f.size() == 4, "receiver map row needs 4 fields");
    map.add(csv::checked_token(csv::trim(f[0]), "receiver_id"),
            RoomInfo{csv::checked_token(csv::trim(f[1]), "room_id"),
                     location_from_code(csv::to_int(f[2], "category_code")), csv::to_int(f[3], "level")});
  }
  return map;
}

inline void write_receiver_map(std::ostream& out, const ReceiverMap& map) {
  out << "receiver_id,room_id,category_code,level\n";
  for (const auto& [rx, room] : map.entries()) {
    out << rx << ',' << room.room_id << ',' << to_code(room.category) << ',' << room.level << '\n';
  }
}

using Registry = std::map<std::string, std::string>;  // tag_id -> resident_id

inline Registry read_registry(std::istream& in) {
  auto table = csv::read_table(in);
  require(table.header == "tag_id,resident_id", "registry CSV header mismatch");
  Registry registry;
  for (const auto& row : table.rows) {
    auto f = csv::split(row);
    require(f.size() == 2, "registry row needs 2 fields");
    auto [it, inserted] = registry.emplace(csv::checked_token(csv::trim(f[0]), "tag_id"),
                                           csv::checked_token(csv::trim(f[1]), "resident_id"));
    require(inserted, "tag '" + it->first + "' registered twice");
  }
  return registry;
}

inline void write_registry(std::ostream& out, const Registry& registry) {
  out << "tag_id,resident_id\n";
  for (const auto& [tag, resident] : registry) out << tag << ',' << resident << '\n';
}

inline ScanRecord parse_scan_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
    return ScanRecord(parse_instant(j.at("ts").get<std::string>()), j.at("rx").get<std::string>(),
                      j.at("tag").get<std::string>(), j.at("rssi").get<int>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed scan record: ") + e.what());
  }
}

inline std::vector<ScanRecord> read_scan_log(std::istream& in) {
  std::vector<ScanRecord> scans;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    scans.push_back(parse_scan_line(line));
  }
  return scans;
}

inline void write_scan_line(std::ostream& out, const ScanRecord& scan) {
  // Field order fixed for byte-stable logs.
  out << R"({"ts":")" << format_instant(scan.timestamp) << R"(","rx":")" << scan.receiver_id << R"(","tag":")"
      << scan.tag_id << R"(","rssi":)" << scan.rssi << "}\n";
}

/// Keeps records at or above the threshold; order preserved.
inline std::vector<ScanRecord> filter_scans(const std::vector<ScanRecord>& scans,
                                            int threshold_dbm = kDefaultRssiThresholdDbm) {
  require(threshold_dbm < 0, "rssi threshold must be negative");
  std::vector<ScanRecord> kept;
  std::copy_if(scans.begin(), scans.end(), std::back_inserter(kept),
               [threshold_dbm](const ScanRecord& s) { return s.rssi >= threshold_dbm; });
  return kept;
}

inline Instant cycle_start_of(Instant ts) {
  auto ms = ts.time_since_epoch().count();
  auto start = ms >= 0 ? ms - ms % kCycleMillis : ms - ((ms % kCycleMillis) + kCycleMillis) % kCycleMillis;
  return Instant{Millis{start}};
}

/// Sub-window index of `ts` inside the cycle starting at `cycle_start`;
/// a record exactly on a boundary belongs to the later sub-window.
inline int sub_window_of(Instant ts, Instant cycle_start) {
  auto offset = (ts - cycle_start).count();
  require(offset >= 0 && offset < kCycleMillis, "scan outside its detection cycle");
  return static_cast<int>(offset / kSubWindowMillis);
}

struct RoomVote {
  std::string room_id;
  Location category;
  int votes;      // sub-windows won
  int peak_rssi;  // strongest record for this room in the cycle

  friend bool operator==(const RoomVote&, const RoomVote&) = default;
};

using CycleVotes = std::map<std::string, RoomVote>;

struct TagKey {
  const std::string& operator()(const ScanRecord& s) const { return s.tag_id; }
};

/// Strongest-RSSI voting over one 15 s cycle. Per sub-window each subject's
/// candidate is the room of its single strongest record (equal RSSI: lowest
/// room_id); the result is the modal candidate across sub-windows, ties broken
/// by the higher peak RSSI and then the lower room_id. Subjects with no
/// records are absent from the result.
template <typename KeyFn = TagKey>
CycleVotes vote_cycle(std::span<const ScanRecord> scans, Instant cycle_start, const ReceiverMap& map,
                      KeyFn key = {}) {
  struct Best {
    int rssi;
    const RoomInfo* room;
  };
  struct Tally {
    std::array<std::optional<Best>, kSubWindowsPerCycle> windows;
    std::map<std::string, int> peak;  // room_id -> peak rssi
  };
  std::map<std::string, Tally> tallies;
  for (const auto& scan : scans) {
    const RoomInfo& room = map.at(scan.receiver_id);
    int w = sub_window_of(scan.timestamp, cycle_start);
    auto& tally = tallies[key(scan)];
    auto& best = tally.windows[static_cast<std::size_t>(w)];
    if (!best || scan.rssi > best->rssi || (scan.rssi == best->rssi && room.room_id < best->room->room_id)) {
      best = Best{scan.rssi, &room};
    }
    auto [it, inserted] = tally.peak.emplace(room.room_id, scan.rssi);
    if (!inserted) it->second = std::max(it->second, scan.rssi);
  }

  CycleVotes result;
  for (const auto& [subject, tally] : tallies) {
    std::map<std::string, std::pair<int, const RoomInfo*>> counts;
    for (const auto& best : tally.windows) {
      if (!best) continue;
      auto& entry = counts[best->room->room_id];
      ++entry.first;
      entry.second = best->room;
    }
    std::optional<RoomVote> winner;
    for (const auto& [room_id, entry] : counts) {  // ascending room_id
      RoomVote candidate{room_id, entry.second->category, entry.first, tally.peak.at(room_id)};
      if (!winner || candidate.votes > winner->votes ||
          (candidate.votes == winner->votes && candidate.peak_rssi > winner->peak_rssi)) {
        winner = candidate;
      }
    }
    if (winner) result.emplace(subject, *winner);
  }
  return result;
}

inline std::optional<RoomVote> vote_for(const CycleVotes& votes, const std::string& subject) {
  auto it = votes.find(subject);
  if (it == votes.end()) return std::nullopt;
  return it->second;
}

enum class FixSource { Voted, Fallback };

inline std::string_view to_string(FixSource s) { return s == FixSource::Voted ? "voted" : "fallback"; }

struct LocationFix {
  std::string resident_id;
  Instant cycle_end;
  std::string room_id;
  Location location;
  FixSource source;

  friend bool operator==(const LocationFix&, const LocationFix&) = default;
};

struct IngestReport {
  std::size_t total_records = 0;
  std::size_t weak_records = 0;
  std::size_t unknown_tag_records = 0;
  std::set<std::string> unknown_tags;
  std::size_t cycles = 0;
  std::size_t voted_fixes = 0;
  std::size_t fallback_fixes = 0;

  nlohmann::json to_json() const {
    return {{"total_records", total_records},   {"weak_records", weak_records},
            {"unknown_tag_records", unknown_tag_records}, {"unknown_tags", unknown_tags},
            {"cycles", cycles},                 {"voted_fixes", voted_fixes},
            {"fallback_fixes", fallback_fixes}};
  }
};

/// Resolves every resident's room per 15 s cycle across the whole log. A
/// resident gets a fix in every cycle from its first successful vote on:
/// the vote when one exists, otherwise its last known room.
inline std::vector<LocationFix> localize_stream(std::vector<ScanRecord> scans, const ReceiverMap& map,
                                                const Registry& registry,
                                                int threshold_dbm = kDefaultRssiThresholdDbm,
                                                IngestReport* report = nullptr) {
  require(threshold_dbm < 0, "rssi threshold must be negative");
  IngestReport local_report;
  IngestReport& rep = report ? *report : local_report;
  rep.total_records += scans.size();

  std::vector<ScanRecord> known;
  known.reserve(scans.size());
  for (auto& scan : scans) {
    map.at(scan.receiver_id);
    auto it = registry.find(scan.tag_id);
    if (it == registry.end()) {
      ++rep.unknown_tag_records;
      rep.unknown_tags.insert(scan.tag_id);
      continue;
    }
    scan.tag_id = it->second;  // from here on the subject key is the resident
    known.push_back(std::move(scan));
  }
  std::vector<LocationFix> fixes;
  if (known.empty()) return fixes;
  std::sort(known.begin(), known.end(), scan_less);

  const Instant first_cycle = cycle_start_of(known.front().timestamp);
  const Instant last_cycle = cycle_start_of(known.back().timestamp);
  std::map<std::string, RoomVote> last_known;
  std::vector<ScanRecord> strong;
  std::size_t cursor = 0;
  for (Instant cycle = first_cycle; cycle <= last_cycle; cycle += Millis{kCycleMillis}) {
    ++rep.cycles;
    const Instant cycle_end = cycle + Millis{kCycleMillis};
    strong.clear();
    for (; cursor < known.size() && known[cursor].timestamp < cycle_end; ++cursor) {
      if (known[cursor].rssi >= threshold_dbm) {
        strong.push_back(known[cursor]);
      } else {
        ++rep.weak_records;
      }
    }
    auto votes = vote_cycle(std::span<const ScanRecord>(strong), cycle, map);
    for (auto& [resident, vote] : votes) last_known.insert_or_assign(resident, vote);
    for (const auto& [resident, vote] : last_known) {
      bool voted = votes.count(resident) != 0;
      fixes.push_back(LocationFix{resident, cycle_end, vote.room_id, vote.category,
                                  voted ? FixSource::Voted : FixSource::Fallback});
      ++(voted ? rep.voted_fixes : rep.fallback_fixes);
    }
  }
  return fixes;
}

inline void write_fixes(std::ostream& out, const std::vector<LocationFix>& fixes) {
  out << "resident_id,cycle_end,room_id,category_code,source\n";
  for (const auto& f : fixes) {
    out << f.resident_id << ',' << format_instant(f.cycle_end) << ',' << f.room_id << ',' << to_code(f.location)
        << ',' << to_string(f.source) << '\n';
  }
}

inline std::vector<LocationFix> read_fixes(std::istream& in) {
  auto table = csv::read_table(in);
  require(table.header == "resident_id,cycle_end,room_id,category_code,source", "fix CSV header mismatch");
  std::vector<LocationFix> fixes;
  fixes.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    auto f = csv::split(row);
    require(f.size() == 5, "fix row needs 5 fields");
    auto source = csv::trim(f[4]);
    require(source == "voted" || source == "fallback", "fix source must be voted or fallback");
    fixes.push_back(LocationFix{std::string(csv::trim(f[0])), parse_instant(csv::trim(f[1])),
                                std::string(csv::trim(f[2])), location_from_code(csv::to_int(f[3], "category_code")),
                                source == "voted" ? FixSource::Voted : FixSource::Fallback});
  }
  return fixes;
}

}  // namespace eldertrack
