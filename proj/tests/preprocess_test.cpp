#include <gtest/gtest.h>

#include "support.hpp"

using namespace eldertrack;
using testing_support::day;

namespace {

ReceiverMap building() {
  ReceiverMap map;
  map.add("rx-r1", RoomInfo{"R1", Location::PrivateL2, 2});
  map.add("rx-r2", RoomInfo{"R2", Location::PrivateL2, 2});
  map.add("rx-r3", RoomInfo{"R3", Location::PrivateL3, 3});
  map.add("rx-p2", RoomInfo{"P2", Location::PublicL2, 2});
  map.add("rx-p3", RoomInfo{"P3", Location::PublicL3, 3});
  return map;
}

const LocalClock kUtc{0};

/// `n` consecutive 15 s fixes in `room` starting at the first cycle of `slot`.
void add_fixes(std::vector<LocationFix>& out, const Date& date, int slot, int first_cycle, int n,
               const std::string& room, const ReceiverMap& map) {
  Instant midnight = kUtc.local_midnight_utc(date);
  for (int c = first_cycle; c < first_cycle + n; ++c) {
    Instant end = midnight + Millis{slot * kSlotMillis + (c + 1) * kCycleMillis};
    out.push_back(LocationFix{"res", end, room, map.room(room)->category, FixSource::Voted});
  }
}

std::vector<char> smooth_chars(const std::string& s, int min) {
  std::vector<char> v(s.begin(), s.end());
  return smooth_runs(std::span<const char>(v), min, '.');
}

std::string str(const std::vector<char>& v) { return std::string(v.begin(), v.end()); }

}  // namespace

TEST(WindowsFitting, UnanimousSlot) {
  auto map = building();
  RoomIndex rooms(map);
  std::vector<LocationFix> fixes;
  add_fixes(fixes, day(2024, 1, 1), 100, 0, 12, "P2", map);
  auto days = fit_room_days(fixes, rooms, kUtc);
  ASSERT_EQ(days.size(), 1u);
  EXPECT_EQ(rooms.room(days[0].rooms[100]).room_id, "P2");
  EXPECT_EQ(days[0].rooms[101], kNoRoom);
}

TEST(WindowsFitting, LongestDwellWins) {
  auto map = building();
  RoomIndex rooms(map);
  std::vector<LocationFix> fixes;
  add_fixes(fixes, day(2024, 1, 1), 10, 0, 8, "R3", map);
  add_fixes(fixes, day(2024, 1, 1), 10, 8, 4, "P3", map);
  auto d = build_day(fixes, rooms, kUtc, rooms.index_of("R3"));
  EXPECT_EQ(d[10], Location::OriginL3);
  EXPECT_EQ(d[11], Location::Missing);
}

TEST(WindowsFitting, EqualDwellGoesToLowestRoomId) {
  auto map = building();
  RoomIndex rooms(map);
  std::vector<LocationFix> fixes;
  add_fixes(fixes, day(2024, 1, 1), 10, 0, 6, "R2", map);
  add_fixes(fixes, day(2024, 1, 1), 10, 6, 6, "P2", map);
  auto days = fit_room_days(fixes, rooms, kUtc);
  EXPECT_EQ(rooms.room(days[0].rooms[10]).room_id, "P2");
}

TEST(WindowsFitting, EmptyDayIsAllMissingAndCycleEndBelongsToPriorSlot) {
  auto map = building();
  RoomIndex rooms(map);
  std::vector<LocationFix> fixes;
  add_fixes(fixes, day(2024, 1, 1), 287, 19, 1, "P2", map);  // ends exactly at midnight
  auto days = fit_room_days(fixes, rooms, kUtc);
  ASSERT_EQ(days.size(), 1u);
  EXPECT_EQ(days[0].date, day(2024, 1, 1));
  EXPECT_NE(days[0].rooms[287], kNoRoom);
  auto d = encode_day("res", days[0], rooms, std::nullopt);
  EXPECT_EQ(d.missing_count(), 287);
}

TEST(WindowsFitting, UsesLocalClock) {
  auto map = building();
  RoomIndex rooms(map);
  LocalClock plus2{120};
  std::vector<LocationFix> fixes{
      {"res", parse_instant("2024-01-01T22:30:15Z"), "P2", Location::PublicL2, FixSource::Voted}};
  auto days = fit_room_days(fixes, rooms, plus2);
  ASSERT_EQ(days.size(), 1u);
  EXPECT_EQ(days[0].date, day(2024, 1, 2));
  EXPECT_EQ(rooms.room(days[0].rooms[6]).room_id, "P2");  // 00:30 local
}

TEST(Encoding, OriginRelative) {
  auto map = building();
  RoomIndex rooms(map);
  RoomDay rd{day(2024, 1, 1), {}};
  rd.rooms.fill(kNoRoom);
  rd.rooms[0] = rooms.index_of("R1");
  rd.rooms[1] = rooms.index_of("R2");
  rd.rooms[2] = rooms.index_of("R3");
  rd.rooms[3] = rooms.index_of("P3");
  auto d = encode_day("res", rd, rooms, rooms.index_of("R2"));
  EXPECT_EQ(d[0], Location::PrivateL2);
  EXPECT_EQ(d[1], Location::OriginL2);
  EXPECT_EQ(d[2], Location::PrivateL3);
  EXPECT_EQ(d[3], Location::PublicL3);
  EXPECT_EQ(d[4], Location::Missing);
}

TEST(Smoothing, SpecExamples) {
  EXPECT_EQ(str(smooth_chars("AAABAAA", 2)), "AAAAAAA");
  EXPECT_EQ(str(smooth_chars("ABBBA", 2)), "BBBBB");
  EXPECT_EQ(str(smooth_chars("AABBCC", 2)), "AABBCC");
}

TEST(Smoothing, ShortRunJoinsLongerNeighbour) {
  EXPECT_EQ(str(smooth_chars("AAAABCC", 2)), "AAAAACC");
  EXPECT_EQ(str(smooth_chars("AABCCCC", 2)), "AACCCCC");
  EXPECT_EQ(str(smooth_chars("AABCC", 2)), "AAACC");  // equal: preceding
}

TEST(Smoothing, MissingIsNeverATarget) {
  EXPECT_EQ(str(smooth_chars("..A..", 2)), "..A..");
  EXPECT_EQ(str(smooth_chars("AA.B.CC", 2)), "AA.B.CC");
  EXPECT_EQ(str(smooth_chars("AAB..", 2)), "AAA..");
  EXPECT_EQ(str(smooth_chars(".", 3)), ".");
}

TEST(Smoothing, Properties) {
  std::mt19937_64 rng(21);
  std::vector<Location> alphabet{Location::OriginL2, Location::PublicB1, Location::PublicL2, Location::Missing};
  for (int trial = 0; trial < 300; ++trial) {
    int min = 1 + static_cast<int>(rng() % 4);
    auto s = testing_support::random_runs(rng, alphabet, 5);
    DayTrajectory d("r", day(2024, 1, 1), s);
    auto once = smooth(d, min);
    EXPECT_EQ(smooth(once, min), once) << "idempotence";
    for (int t = 0; t < kSlotsPerDay; ++t) {
      EXPECT_EQ(d[t] == Location::Missing, once[t] == Location::Missing) << "Missing slots are untouched";
    }
    // Run-length oracle: every surviving short run is fenced by Missing or the edge.
    int t = 0;
    while (t < kSlotsPerDay) {
      int u = t;
      while (u < kSlotsPerDay && once[u] == once[t]) ++u;
      if (once[t] != Location::Missing && u - t < min) {
        bool left_usable = t > 0 && once[t - 1] != Location::Missing;
        bool right_usable = u < kSlotsPerDay && once[u] != Location::Missing;
        EXPECT_FALSE(left_usable || right_usable) << "absorbable short run left at " << t;
      }
      t = u;
    }
    if (min == 1) {
      EXPECT_EQ(once, d);
    }
  }
}

TEST(Smoothing, RejectsNonPositiveMin) {
  DayTrajectory d("r", day(2024, 1, 1), filled_slots(Location::OriginL2));
  EXPECT_THROW(smooth(d, 0), Error);
}

TEST(OriginDetection, Unanimous) {
  auto map = building();
  RoomIndex rooms(map);
  std::vector<RoomDay> days;
  for (int i = 0; i < 5; ++i) {
    RoomDay rd{day(2024, 1, 1 + i), {}};
    rd.rooms.fill(rooms.index_of("P3"));
    for (int s = 0; s < 72; ++s) rd.rooms[s] = rooms.index_of("R3");
    days.push_back(rd);
  }
  auto o = detect_origin_room(days, rooms);
  EXPECT_EQ(o.room_id, "R3");
  EXPECT_EQ(o.category, Location::OriginL3);
}

TEST(OriginDetection, HospitalGapDoesNotMatter) {
  auto map = building();
  RoomIndex rooms(map);
  std::vector<RoomDay> days;
  for (int i = 0; i < 23; ++i) {
    RoomDay rd{day(2024, 1, 1 + i), {}};
    rd.rooms.fill(i < 20 ? rooms.index_of("R1") : kNoRoom);
    days.push_back(rd);
  }
  EXPECT_EQ(detect_origin_room(days, rooms).category, Location::OriginL2);
}

TEST(OriginDetection, EvenSplitGoesToLowerRoomId) {
  auto map = building();
  RoomIndex rooms(map);
  std::vector<RoomDay> days;
  for (int i = 0; i < 10; ++i) {
    RoomDay rd{day(2024, 1, 1 + i), {}};
    rd.rooms.fill(rooms.index_of(i % 2 ? "R3" : "R2"));
    days.push_back(rd);
  }
  EXPECT_EQ(detect_origin_room(days, rooms).room_id, "R2");
}

TEST(OriginDetection, NoResidentialNightFails) {
  auto map = building();
  RoomIndex rooms(map);
  RoomDay rd{day(2024, 1, 1), {}};
  rd.rooms.fill(rooms.index_of("P2"));
  std::vector<RoomDay> days{rd};
  try {
    detect_origin_room(days, rooms);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoOriginDetectable);
  }
}

TEST(OriginDetection, FromEncodedTrajectories) {
  std::vector<DayTrajectory> days{{"a", day(2024, 1, 1), filled_slots(Location::OriginL3)},
                                  {"a", day(2024, 1, 2), filled_slots(Location::PublicB1)}};
  EXPECT_EQ(detect_origin(SpatioTemporalMatrix("a", days)), Location::OriginL3);
  SpatioTemporalMatrix none("a", {{"a", day(2024, 1, 1), filled_slots(Location::PublicB1)}});
  EXPECT_THROW(detect_origin(none), Error);
}

TEST(RawRoundTrip, LocalizeThenPreprocessReproducesPlantedDays) {
  synth::CohortSpec spec;
  spec.n_residents = 4;
  spec.n_groups = 2;
  spec.days = 2;
  spec.utc_offset_minutes = 60;
  spec.planted.push_back({"r001", synth::DeviationKind::PrivateVisit, 0.5});
  auto cohort = synth::generate(spec, 3);
  IngestReport rep;
  auto fixes = localize_stream(synth::scan_log(cohort), cohort.receivers, cohort.registry, -70, &rep);
  EXPECT_EQ(rep.fallback_fixes, 0u);
  EXPECT_GT(rep.weak_records, 0u);
  auto result = preprocess_fixes(fixes, cohort.receivers, LocalClock{60});
  EXPECT_EQ(result.days, cohort.days);
  for (const auto& r : cohort.residents) EXPECT_EQ(result.origins.at(r.resident_id).room_id, r.origin_room);
}
