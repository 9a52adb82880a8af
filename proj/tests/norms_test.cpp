#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace eldertrack;
using testing_support::agg;
using testing_support::day;
using testing_support::paint;

namespace {

ClusterAssignment one_cluster(const std::vector<std::string>& ids) {
  return ClusterAssignment{ids, std::vector<int>(ids.size(), 0), 1};
}

std::vector<const DayTrajectory*> ptrs(const std::vector<DayTrajectory>& rows) {
  std::vector<const DayTrajectory*> out;
  for (const auto& r : rows) out.push_back(&r);
  return out;
}

/// Checks the I/G/I segment shape and slot equality with the splice oracle.
void expect_splice(const HybridNorm& n, const SlotArray& ind, const SlotArray& group) {
  int p5 = n.transitions.p5, p6 = n.transitions.p6;
  for (int t = 0; t < kSlotsPerDay; ++t) {
    auto expected = (t >= p5 && t < p6) ? Provenance::Group : Provenance::Individual;
    ASSERT_EQ(n.provenance[static_cast<std::size_t>(t)], expected) << "slot " << t;
  }
  EXPECT_EQ(n.slots, oracle::splice(ind, group, p5, p6));
}

}  // namespace

TEST(GroupNorm, TwoMembersIsAbsent) {
  std::vector<DayTrajectory> rows{{"a", day(2024, 1, 1), filled_slots(Location::OriginL2)},
                                  {"b", day(2024, 1, 1), filled_slots(Location::OriginL2)}};
  EXPECT_FALSE(group_norm(0, ptrs(rows), one_cluster({"a", "b"})).has_value());
}

TEST(GroupNorm, IdenticalMembersReproduced) {
  auto s = paint(filled_slots(Location::OriginL3), 100, 200, Location::PublicB1);
  std::vector<DayTrajectory> rows;
  std::vector<std::string> ids;
  for (int i = 0; i < 5; ++i) {
    ids.push_back("r" + std::to_string(i));
    rows.emplace_back(ids.back(), day(2024, 1, 1), s);
  }
  auto g = group_norm(0, ptrs(rows), one_cluster(ids));
  ASSERT_TRUE(g);
  EXPECT_EQ(g->slots, s);
  EXPECT_EQ(g->contributors, 5);
}

TEST(GroupNorm, MajorityAndMembership) {
  std::vector<DayTrajectory> rows{{"a", day(2024, 1, 1), filled_slots(Location::PublicL2)},
                                  {"b", day(2024, 1, 1), filled_slots(Location::PublicL2)},
                                  {"c", day(2024, 1, 1), filled_slots(Location::OriginL2)},
                                  {"x", day(2024, 1, 1), filled_slots(Location::OriginL2)},
                                  {"y", day(2024, 1, 1), filled_slots(Location::OriginL2)}};
  ClusterAssignment two{{"a", "b", "c", "x", "y"}, {0, 0, 0, 1, 1}, 2};
  auto g = group_norm(0, ptrs(rows), two);
  ASSERT_TRUE(g);
  EXPECT_EQ(g->slots, filled_slots(Location::PublicL2));
  EXPECT_FALSE(group_norm(1, ptrs(rows), two).has_value());
}

TEST(GroupNorm, IndependentOfRowOrder) {
  std::mt19937_64 rng(31);
  std::vector<DayTrajectory> rows;
  std::vector<std::string> ids;
  for (int i = 0; i < 7; ++i) {
    ids.push_back("r" + std::to_string(i));
    rows.emplace_back(ids.back(), day(2024, 1, 1), testing_support::random_slots(rng));
  }
  auto forward = group_norm(0, ptrs(rows), one_cluster(ids));
  std::reverse(rows.begin(), rows.end());
  auto backward = group_norm(0, ptrs(rows), one_cluster(ids));
  ASSERT_TRUE(forward && backward);
  EXPECT_EQ(forward->slots, backward->slots);
}

TEST(DayStartEnd, Examples) {
  auto origin = filled_slots(Location::OriginL2);
  EXPECT_EQ(day_start_end(paint(origin, 90, 200, Location::PublicB1), Location::OriginL2, 3),
            std::make_pair(90, 200));
  EXPECT_EQ(day_start_end(origin, Location::OriginL2), std::make_pair(144, 144));
  // A two-slot excursion is shorter than the gap and does not count.
  auto blip = paint(paint(origin, 40, 42, Location::PublicL2), 100, 230, Location::PublicL2);
  EXPECT_EQ(day_start_end(blip, Location::OriginL2, 3).first, 100);
  // Away until midnight closes at 288.
  EXPECT_EQ(day_start_end(paint(origin, 200, 288, Location::PublicL2), Location::OriginL2).second, 288);
  EXPECT_THROW(day_start_end(origin, Location::OriginL2, 0), Error);
}

TEST(Transitions, Examples) {
  EXPECT_EQ(transition_points(80, 84, 200, 200, 6).first, 80);
  EXPECT_EQ(transition_points(90, 80, 200, 200, 6).first, 90);
  EXPECT_EQ(transition_points(100, 100, 240, 260, 2).second, 260);
  EXPECT_EQ(transition_points(70, 90, 200, 200, 6).first, 90);
  EXPECT_EQ(transition_points(100, 100, 260, 240, 6).second, 260);
  EXPECT_EQ(transition_points(100, 100, 250, 240, 6).second, 250);
  EXPECT_EQ(transition_points(100, 100, 245, 240, 6).second, 240);
  EXPECT_THROW(transition_points(-1, 0, 0, 0), Error);
}

TEST(Transitions, LiteralTruthTable) {
  for (int h : {0, 2, 6, 20}) {
    for (int p1 = 0; p1 <= kSlotsPerDay; p1 += 7) {
      for (int p2 = 0; p2 <= kSlotsPerDay; p2 += 11) {
        bool c1 = std::abs(p1 - p2) <= h, c2 = p1 - p2 >= 0;
        ASSERT_EQ(transition_points(p1, p2, 144, 144, h).first, (c1 || c2) ? p1 : p2);
        bool d1 = std::abs(p1 - p2) <= h, d2 = p1 - p2 < 0;  // p3 = p1, p4 = p2
        ASSERT_EQ(transition_points(0, 0, p1, p2, h).second, (d1 || d2) ? p2 : p1);
      }
    }
  }
}

TEST(Transitions, EarliestMode) {
  EXPECT_EQ(transition_points(90, 80, 200, 200, 6, TransitionMode::Earliest).first, 80);
  EXPECT_EQ(transition_points(84, 80, 200, 200, 6, TransitionMode::Earliest).first, 84);
  EXPECT_EQ(transition_points(90, 90, 260, 240, 6, TransitionMode::Earliest).second, 240);
  EXPECT_EQ(transition_mode_from_string("earliest"), TransitionMode::Earliest);
  EXPECT_THROW(transition_mode_from_string("latest"), Error);
}

TEST(HybridNorm, AllOriginIndividualTakesGroupWindow) {
  auto ind = filled_slots(Location::OriginL2);
  auto group_slots = paint(ind, 120, 192, Location::PublicB1);
  GroupNorm g{0, day(2024, 1, 1), group_slots, 5};
  auto n = hybrid_norm(agg("a", ind), g, day(2024, 1, 1), Location::OriginL2);
  EXPECT_EQ(n.transitions.p5, 120);
  EXPECT_EQ(n.transitions.p6, 192);
  expect_splice(n, ind, group_slots);
  EXPECT_FALSE(n.degenerate);
}

TEST(HybridNorm, GroupAbsentIsIndividual) {
  auto ind = paint(filled_slots(Location::OriginL3), 90, 210, Location::PublicL3);
  auto n = hybrid_norm(agg("a", ind), std::nullopt, day(2024, 1, 1), Location::OriginL3);
  EXPECT_EQ(n.slots, ind);
  EXPECT_FALSE(n.group_present);
  EXPECT_FALSE(n.fused());
  for (auto p : n.provenance) EXPECT_EQ(p, Provenance::Individual);
}

TEST(HybridNorm, LiteralRuleKeepsLaterStart) {
  auto ind = paint(filled_slots(Location::OriginL2), 130, 150, Location::PublicL2);
  auto grp = paint(filled_slots(Location::OriginL2), 100, 250, Location::PublicB1);
  auto n = hybrid_norm(agg("a", ind), GroupNorm{0, day(2024, 1, 1), grp, 3}, day(2024, 1, 1), Location::OriginL2);
  EXPECT_EQ(n.transitions.p5, 130);
  EXPECT_EQ(n.transitions.p6, 250);
  expect_splice(n, ind, grp);
}

TEST(HybridNorm, DegenerateWindowFallsBack) {
  // Neither norm ever leaves the origin: both sides sit on the 144 sentinel.
  auto ind = filled_slots(Location::OriginL2);
  auto grp = paint(ind, 143, 145, Location::PublicB1);
  auto n = hybrid_norm(agg("a", ind), GroupNorm{0, day(2024, 1, 1), grp, 3}, day(2024, 1, 1), Location::OriginL2);
  EXPECT_TRUE(n.degenerate);
  EXPECT_FALSE(n.fused());
  EXPECT_EQ(n.slots, ind);
  for (auto p : n.provenance) EXPECT_EQ(p, Provenance::Individual);
}

TEST(HybridNorm, IdenticalInputsGiveIndividual) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = testing_support::random_runs(rng, {Location::OriginL2, Location::PublicB1, Location::PrivateL2}, 30);
    auto n = hybrid_norm(agg("a", s), GroupNorm{0, day(2024, 1, 1), s, 4}, day(2024, 1, 1), Location::OriginL2);
    EXPECT_EQ(n.slots, s);
  }
}

TEST(HybridNorm, SpliceProperty) {
  std::mt19937_64 rng(19);
  std::vector<Location> alphabet{Location::OriginL3, Location::PublicB1, Location::PublicL3, Location::Restricted};
  for (int trial = 0; trial < 200; ++trial) {
    auto ind = testing_support::random_runs(rng, alphabet, 40);
    auto grp = testing_support::random_runs(rng, alphabet, 40);
    int h = 1 + static_cast<int>(rng() % 10);
    auto mode = trial % 2 ? TransitionMode::Earliest : TransitionMode::Literal;
    auto n = hybrid_norm(agg("a", ind), GroupNorm{0, day(2024, 1, 1), grp, 3}, day(2024, 1, 1), Location::OriginL3,
                         NormOptions{h, mode});
    ASSERT_LE(n.transitions.p5, n.transitions.p6);
    expect_splice(n, ind, grp);
    if (n.degenerate) {
      EXPECT_EQ(n.slots, ind);
    }
  }
}

TEST(CohortNorms, LeaveOneOutAndProvenance) {
  std::vector<SpatioTemporalMatrix> residents;
  std::map<std::string, Location> origins;
  std::vector<std::string> ids;
  for (int r = 0; r < 4; ++r) {
    std::string id = "r" + std::to_string(r);
    ids.push_back(id);
    origins[id] = Location::OriginL2;
    std::vector<DayTrajectory> days;
    for (int d = 0; d < 3; ++d) {
      auto s = paint(filled_slots(Location::OriginL2), 100, 200, Location::PublicB1);
      if (r == 0 && d == 0) s = paint(s, 20, 60, Location::PublicL2);
      days.emplace_back(id, day(2024, 3, 1 + d), s);
    }
    residents.emplace_back(id, days);
  }
  auto all = build_cohort_norms(residents, origins, one_cluster(ids));
  ASSERT_EQ(all.norms.size(), 12u);
  EXPECT_TRUE(all.warnings.empty());
  const auto& first = all.norms.front();
  EXPECT_EQ(first.resident_id, "r0");
  EXPECT_EQ(first.transitions.p5, 100);
  EXPECT_EQ(first.transitions.p6, 200);
  EXPECT_EQ(first[30], Location::OriginL2);  // one day of three does not move the mode

  CohortNormOptions loo;
  loo.leave_one_out = true;
  loo.jobs = 3;
  auto held = build_cohort_norms(residents, origins, one_cluster(ids), loo);
  ASSERT_EQ(held.norms.size(), 12u);
  EXPECT_EQ(held.norms[1].slots, all.norms[1].slots);
}

TEST(NormsFile, RoundTrip) {
  auto ind = filled_slots(Location::OriginL2);
  auto grp = paint(ind, 120, 192, Location::PublicB1);
  std::vector<HybridNorm> norms{
      hybrid_norm(agg("a", ind), GroupNorm{0, day(2024, 1, 1), grp, 5}, day(2024, 1, 1), Location::OriginL2),
      hybrid_norm(agg("b", grp), std::nullopt, day(2024, 1, 2), Location::OriginL2)};
  std::stringstream ss;
  write_norms(ss, norms);
  auto back = read_norms(ss);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].resident_id, norms[i].resident_id);
    EXPECT_EQ(back[i].date, norms[i].date);
    EXPECT_EQ(back[i].slots, norms[i].slots);
    EXPECT_EQ(back[i].provenance, norms[i].provenance);
    EXPECT_EQ(back[i].transitions.p5, norms[i].transitions.p5);
    EXPECT_EQ(back[i].transitions.p6, norms[i].transitions.p6);
  }
  std::stringstream bad("resident_id,date,x\n");
  EXPECT_THROW(read_norms(bad), Error);
}
