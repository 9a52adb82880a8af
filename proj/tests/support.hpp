#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eldertrack/eldertrack.hpp"

namespace testing_support {

using namespace eldertrack;

inline Date day(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

inline SlotArray random_slots(std::mt19937_64& rng, bool allow_missing = false) {
  std::uniform_int_distribution<int> pick(0, allow_missing ? kLocationCount - 1 : kObservableLocationCount - 1);
  SlotArray s;
  for (auto& x : s) x = static_cast<Location>(pick(rng));
  return s;
}

/// Blocky random day: runs of 1..max_run slots drawn from `alphabet`.
inline SlotArray random_runs(std::mt19937_64& rng, const std::vector<Location>& alphabet, int max_run) {
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(1, max_run);
  SlotArray s;
  int t = 0;
  while (t < kSlotsPerDay) {
    Location loc = alphabet[pick(rng)];
    int n = len(rng);
    for (int i = 0; i < n && t < kSlotsPerDay; ++i, ++t) s[static_cast<std::size_t>(t)] = loc;
  }
  return s;
}

inline AggregatedTrajectory agg(const std::string& id, const SlotArray& s) { return AggregatedTrajectory{id, s}; }

inline SlotArray paint(SlotArray s, int from, int to, Location loc) {
  for (int t = from; t < to; ++t) s[static_cast<std::size_t>(t)] = loc;
  return s;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("eldertrack_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
