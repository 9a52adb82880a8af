#include <gtest/gtest.h>

#include <cstdlib>

#include "support.hpp"

using namespace eldertrack;
namespace fs = std::filesystem;
using testing_support::scratch_dir;
using testing_support::slurp;

namespace {

synth::CohortSpec cohort_spec() {
  synth::CohortSpec spec;
  spec.n_residents = 20;
  spec.n_groups = 4;
  spec.days = 20;
  spec.planted.push_back({"r001", synth::DeviationKind::PrivateVisit, 0.3});
  spec.planted.push_back({"r006", synth::DeviationKind::Sleep, 0.3});
  return spec;
}

fs::path write_spec(const fs::path& dir, const synth::CohortSpec& spec) {
  auto p = dir / "spec.json";
  stages::write_json(p, synth::to_json(spec));
  return p;
}

int run_cli(const std::string& args, const fs::path& dir) {
  std::string cmd = std::string(ELDERTRACK_CLI) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                    (dir / "stderr.txt").string();
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> files_under(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void expect_same_tree(const fs::path& a, const fs::path& b) {
  auto fa = files_under(a);
  ASSERT_EQ(fa, files_under(b));
  for (const auto& f : fa) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

}  // namespace

TEST(Config, JsonRoundTripAndUnknownKeys) {
  Config c;
  c.k = 4;
  c.weight_kind = WeightKind::Uniform;
  c.transition_mode = TransitionMode::Earliest;
  c.awake_rule = AwakeRule::LowerFence;
  auto back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.k, 4);
  EXPECT_THROW(config_from_json(nlohmann::json{{"version", 1}, {"h_slot", 3}}), Error);
  EXPECT_THROW(config_from_json(nlohmann::json{{"version", 2}}), Error);
  EXPECT_THROW(config_from_json(nlohmann::json{{"version", 1}, {"min_valid_fraction", 2.0}}), Error);
  EXPECT_NO_THROW(config_from_json(nlohmann::json{{"version", 1}}));
}

TEST(Stages, InMemoryRecoversPlantedPrivateVisit) {
  auto cohort = synth::generate(cohort_spec(), 3);
  std::map<std::string, std::vector<DayTrajectory>> by;
  for (const auto& d : cohort.days) by[d.resident_id()].push_back(d);
  std::vector<SpatioTemporalMatrix> residents;
  for (auto& [id, days] : by) residents.emplace_back(id, days);
  Config cfg;
  auto cl = cluster_stage(residents, cfg, 0);
  EXPECT_DOUBLE_EQ(adjusted_rand_index(cl.assignment.labels, cohort.true_labels()), 1.0);
  auto norms = norms_stage(residents, cl.assignment, cfg);
  auto devs = detect_stage(residents, norms.norms, cfg);
  std::map<std::pair<std::string, Date>, std::set<int>> found;
  for (const auto& d : devs) {
    for (int t = 0; t < kSlotsPerDay; ++t) {
      if (d[t]) found[{d.resident_id, d.date}].insert(t);
    }
  }
  EXPECT_EQ(found, cohort.expected_deviations);

  auto out = classify_stage(residents, norms.norms, devs, cfg);
  const auto& r1 = *std::find_if(out.profiles.begin(), out.profiles.end(),
                                 [](const auto& p) { return p.resident_id == "r001"; });
  // Counting oracle: planted private slots inside the Group period over that
  // period's valid slots.
  const auto range = r1.layout[Period::Group];
  int planted = 0;
  for (const auto& rec : cohort.plan) {
    if (rec.injection.resident_id != "r001") continue;
    for (int t : rec.deviated_slots) planted += (t >= range.begin && t < range.end) ? 1 : 0;
  }
  EXPECT_GT(planted, 0);
  EXPECT_DOUBLE_EQ(*r1.probability(Period::Group, Category::C4Private),
                   static_cast<double>(planted) / (cohort.spec.days * range.size()));
  EXPECT_TRUE(r1.labels.count(Label::PrivateVisiting));
}

TEST(Stages, JobsDoNotChangeResults) {
  auto dir = scratch_dir("jobs");
  auto spec = write_spec(dir, cohort_spec());
  stages::run_pipeline({spec, std::nullopt, std::nullopt}, Config{}, 9, 1, dir / "one");
  stages::run_pipeline({spec, std::nullopt, std::nullopt}, Config{}, 9, 4, dir / "four");
  expect_same_tree(dir / "one", dir / "four");
}

TEST(Stages, StagedRunMatchesPipeline) {
  auto dir = scratch_dir("staged");
  auto spec = write_spec(dir, cohort_spec());
  Config cfg;
  stages::run_pipeline({spec, std::nullopt, std::nullopt}, cfg, 5, 2, dir / "all");
  auto s = dir / "staged";
  stages::synth(spec, 5, s / "synth");
  auto traj = s / "synth" / "trajectories.csv";
  stages::cluster(traj, cfg, 5, 1, s / "cluster");
  stages::norms(traj, s / "cluster" / "cluster.json", cfg, 1, s / "norms");
  stages::detect(traj, s / "norms" / "norms.csv", cfg, s / "detect");
  stages::classify(traj, s / "norms" / "norms.csv", s / "detect" / "deviations.csv", std::nullopt, cfg,
                   s / "classify");
  stages::report(s / "classify" / "report.json", s / "cluster" / "cluster.json", s / "report");
  expect_same_tree(dir / "all", s);
}

TEST(Stages, ArtifactsAreWellFormed) {
  auto dir = scratch_dir("artifacts");
  auto spec = write_spec(dir, cohort_spec());
  stages::run_pipeline({spec, std::nullopt, reference_thresholds()}, Config{}, 1, 2, dir / "run");
  auto cl = stages::read_json(dir / "run" / "cluster" / "cluster.json");
  EXPECT_EQ(cl["version"], 1);
  EXPECT_EQ(cl["labels"].size(), 20u);
  EXPECT_EQ(cl["ssd_curve"].size(), 6u);
  auto rep = stages::read_json(dir / "run" / "classify" / "report.json");
  EXPECT_EQ(rep["thresholds_source"], "fixed");
  EXPECT_EQ(rep["profiles"].size(), 20u);
  std::ifstream labels(dir / "run" / "report" / "labels.csv");
  std::string header;
  std::getline(labels, header);
  EXPECT_EQ(header.rfind("resident_id", 0), 0u);
  // trajectories.csv reads back into the cohort's days.
  auto residents = stages::load_residents(dir / "run" / "synth" / "trajectories.csv");
  EXPECT_EQ(residents.size(), 20u);
}

TEST(Cli, ExitCodes) {
  auto dir = scratch_dir("cli");
  EXPECT_EQ(run_cli("--help", dir), 0);
  EXPECT_EQ(run_cli("", dir), 2);
  EXPECT_EQ(run_cli("cluster --trajectories " + (dir / "nope.csv").string(), dir), 2);
  std::ofstream(dir / "bad.json") << "{\"version\": 1, \"n_groups\": 0}";
  EXPECT_EQ(run_cli("synth --spec " + (dir / "bad.json").string() + " --out " + (dir / "o").string(), dir), 2);
  auto err = nlohmann::json::parse(slurp(dir / "stderr.txt"));
  EXPECT_EQ(err["error"]["kind"], "validation");
  std::ofstream(dir / "garbage.csv") << "resident_id,date\nx,notadate\n";
  EXPECT_EQ(run_cli("cluster --trajectories " + (dir / "garbage.csv").string(), dir), 2);
}

TEST(Cli, ClusterSweepAndPipeline) {
  auto dir = scratch_dir("cli_run");
  auto spec = write_spec(dir, cohort_spec());
  ASSERT_EQ(run_cli("--seed 4 synth --spec " + spec.string() + " --out " + (dir / "s").string(), dir), 0);
  auto traj = (dir / "s" / "trajectories.csv").string();
  ASSERT_EQ(run_cli("--seed 4 --jobs 2 cluster --trajectories " + traj + " --k-range 2:7 --out " +
                        (dir / "c").string(),
                    dir),
            0);
  auto cl = stages::read_json(dir / "c" / "cluster.json");
  EXPECT_EQ(cl["ssd_curve"].size(), 6u);
  EXPECT_EQ(cl["k"], 4);
  ASSERT_EQ(run_cli("--seed 4 cluster --trajectories " + traj + " --k 3 --out " + (dir / "c3").string(), dir), 0);
  EXPECT_EQ(stages::read_json(dir / "c3" / "cluster.json")["k"], 3);
  EXPECT_EQ(run_cli("cluster --trajectories " + traj + " --k-range 7:2", dir), 2);

  ASSERT_EQ(run_cli("--seed 4 pipeline --spec " + spec.string() + " --out " + (dir / "p").string(), dir), 0);
  stages::run_pipeline({spec, std::nullopt, std::nullopt}, Config{}, 4, 1, dir / "lib");
  expect_same_tree(dir / "p", dir / "lib");
}
