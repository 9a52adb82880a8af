#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eldertrack/pipeline.hpp"
#include "eldertrack/synth.hpp"

// File-to-file stages. Stage outputs are the only channel between stages,
// so `run_pipeline` and a manual stage-by-stage run write identical bytes.
namespace eldertrack::stages {

namespace fs = std::filesystem;

inline nlohmann::json read_json(const fs::path& path) {
  auto in = csv::open_input(path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Validation, "invalid JSON in '" + path.string() + "': " + e.what());
  }
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = csv::open_output(path.string());
  out << j.dump(2) << '\n';
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  auto out = csv::open_output(path.string());
  fn(out);
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

template <class T, class Fn>
T read_file(const fs::path& path, Fn&& fn) {
  auto in = csv::open_input(path.string());
  return fn(in);
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory '" + dir.string() + "': " + ec.message());
}

inline Config load_config(const std::optional<fs::path>& path) {
  if (!path) return Config{};
  return config_from_json(read_json(*path));
}

inline std::vector<SpatioTemporalMatrix> load_residents(const fs::path& trajectories) {
  return group_by_resident(read_file<std::vector<DayTrajectory>>(trajectories, [](std::istream& in) {
    return read_trajectories(in);
  }));
}

inline void report_warnings(const std::vector<std::string>& warnings, std::string_view stage) {
  for (const auto& w : warnings) {
    std::cerr << nlohmann::json{{"warning", w}, {"stage", stage}}.dump() << '\n';
  }
}

// ---------------------------------------------------------------- stages

/// synth: trajectories.csv, plan.jsonl, cohort.json; raw mode adds the scan
/// log, receiver map and tag registry.
inline void synth(const fs::path& spec_path, std::uint64_t seed, const fs::path& out) {
  auto spec = synth::spec_from_json(read_json(spec_path));
  auto cohort = synth::generate(spec, seed);
  ensure_dir(out);
  write_json(out / "cohort.json", synth::to_json(spec));
  write_file(out / "trajectories.csv", [&](std::ostream& o) { write_trajectories(o, cohort.days); });
  write_file(out / "plan.jsonl", [&](std::ostream& o) { synth::write_plan(o, cohort); });
  if (spec.raw) {
    write_file(out / "receivers.csv", [&](std::ostream& o) { write_receiver_map(o, cohort.receivers); });
    write_file(out / "registry.csv", [&](std::ostream& o) { write_registry(o, cohort.registry); });
    write_file(out / "scans.jsonl", [&](std::ostream& o) {
      for (const auto& s : synth::scan_log(cohort)) write_scan_line(o, s);
    });
  }
}

/// ingest: fixes.csv and ingest_report.json from a scan log.
inline void ingest(const fs::path& scans, const fs::path& receivers, const fs::path& registry, const Config& cfg,
                   const fs::path& out) {
  auto map = read_file<ReceiverMap>(receivers, [](std::istream& in) { return read_receiver_map(in); });
  auto reg = read_file<Registry>(registry, [](std::istream& in) { return read_registry(in); });
  auto log = read_file<std::vector<ScanRecord>>(scans, [](std::istream& in) { return read_scan_log(in); });
  IngestReport report;
  auto fixes = localize_stream(std::move(log), map, reg, cfg.rssi_threshold_dbm, &report);
  ensure_dir(out);
  write_file(out / "fixes.csv", [&](std::ostream& o) { write_fixes(o, fixes); });
  write_json(out / "ingest_report.json", report.to_json());
}

/// preprocess: trajectories.csv and origins.csv from location fixes.
inline void preprocess(const fs::path& fixes_path, const fs::path& receivers, const Config& cfg, const fs::path& out) {
  auto map = read_file<ReceiverMap>(receivers, [](std::istream& in) { return read_receiver_map(in); });
  auto fixes = read_file<std::vector<LocationFix>>(fixes_path, [](std::istream& in) { return read_fixes(in); });
  auto result = preprocess_fixes(fixes, map, cfg.clock(), cfg.min_stay_slots);
  ensure_dir(out);
  write_file(out / "trajectories.csv", [&](std::ostream& o) { write_trajectories(o, result.days); });
  write_file(out / "origins.csv", [&](std::ostream& o) { write_origins(o, result.origins); });
}

/// cluster: cluster.json with labels and the SSD curve.
inline void cluster(const fs::path& trajectories, const Config& cfg, std::uint64_t seed, unsigned jobs,
                    const fs::path& out) {
  auto result = cluster_stage(load_residents(trajectories), cfg, seed, jobs);
  report_warnings(result.warnings, "cluster");
  ensure_dir(out);
  write_json(out / "cluster.json", to_json(result));
}

/// norms: norms.csv with hybrid norms per resident-day.
inline void norms(const fs::path& trajectories, const fs::path& cluster_path, const Config& cfg, unsigned jobs,
                  const fs::path& out) {
  auto assignment = assignment_from_json(read_json(cluster_path));
  auto result = norms_stage(load_residents(trajectories), assignment, cfg, jobs);
  report_warnings(result.warnings, "norms");
  ensure_dir(out);
  write_file(out / "norms.csv", [&](std::ostream& o) { write_norms(o, result.norms); });
}

/// detect: deviations.jsonl (episodes) and deviations.csv (dense slots).
inline void detect(const fs::path& trajectories, const fs::path& norms_path, const Config& cfg, const fs::path& out) {
  auto norm_rows = read_file<std::vector<HybridNorm>>(norms_path, [](std::istream& in) { return read_norms(in); });
  auto days = detect_stage(load_residents(trajectories), norm_rows, cfg);
  ensure_dir(out);
  write_file(out / "deviations.jsonl", [&](std::ostream& o) { write_deviation_jsonl(o, days); });
  write_file(out / "deviations.csv", [&](std::ostream& o) { write_deviation_csv(o, days); });
}

/// classify: report.json with fences, per-resident probabilities and labels.
inline void classify(const fs::path& trajectories, const fs::path& norms_path, const fs::path& deviations,
                     const std::optional<ThresholdTable>& thresholds, const Config& cfg, const fs::path& out) {
  auto norm_rows = read_file<std::vector<HybridNorm>>(norms_path, [](std::istream& in) { return read_norms(in); });
  auto days =
      read_file<std::vector<DeviationDay>>(deviations, [](std::istream& in) { return read_deviation_csv(in); });
  auto result = classify_stage(load_residents(trajectories), norm_rows, days, cfg, thresholds);
  report_warnings(result.warnings, "classify");
  ensure_dir(out);
  write_json(out / "report.json", to_json(result));
}

/// report: plot-data CSVs from report.json and, when given, cluster.json.
inline void report(const fs::path& report_path, const std::optional<fs::path>& cluster_path, const fs::path& out) {
  auto rep = read_json(report_path);
  ensure_dir(out);
  try {
    const auto& cohort = rep.at("cohort");
    write_file(out / "label_counts.csv", [&](std::ostream& o) {
      o << "bucket,share\n";
      o << "zero_labels," << cohort.at("zero").get<double>() << '\n';
      o << "one_label," << cohort.at("one").get<double>() << '\n';
      o << "two_plus_labels," << cohort.at("two_plus").get<double>() << '\n';
    });
    write_file(out / "label_shares.csv", [&](std::ostream& o) {
      o << "label,share_of_residents,share_of_one_label_residents\n";
      for (Label l : kAllLabels) {
        std::string name(to_string(l));
        o << name << ',' << cohort.at("per_label").at(name).get<double>() << ','
          << cohort.at("per_label_among_one").at(name).get<double>() << '\n';
      }
    });
    write_file(out / "probabilities.csv", [&](std::ostream& o) {
      o << "resident_id,period,category,probability\n";
      for (const auto& prof : rep.at("profiles")) {
        const auto id = prof.at("resident_id").get<std::string>();
        for (Period p : kAllPeriods) {
          const auto& row = prof.at("P").at(std::string(to_string(p)));
          if (row.is_null()) continue;
          for (Category c : kAllCategories) {
            o << id << ',' << to_string(p) << ',' << to_string(c) << ',' << row.at(std::string(to_string(c))).get<double>()
              << '\n';
          }
        }
      }
    });
    write_file(out / "labels.csv", [&](std::ostream& o) {
      o << "resident_id,labels\n";
      for (const auto& prof : rep.at("profiles")) {
        std::string joined;
        for (const auto& l : prof.at("labels")) joined += (joined.empty() ? "" : ";") + l.get<std::string>();
        o << prof.at("resident_id").get<std::string>() << ',' << joined << '\n';
      }
    });
    if (cluster_path) {
      auto cl = read_json(*cluster_path);
      write_file(out / "ssd_curve.csv", [&](std::ostream& o) {
        o << "k,ssd\n";
        for (const auto& p : cl.at("ssd_curve")) o << p.at(0).get<int>() << ',' << p.at(1).get<double>() << '\n';
      });
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed report input: ") + e.what());
  }
}

struct PipelineInput {
  std::optional<fs::path> spec;          // synthesize a cohort first
  std::optional<fs::path> trajectories;  // or start from encoded trajectories
  std::optional<ThresholdTable> thresholds;
};

/// All stages in sequence inside `out`. A raw-mode spec goes through
/// ingest and preprocess; otherwise the synthesized trajectories are used.
inline void run_pipeline(const PipelineInput& input, const Config& cfg, std::uint64_t seed, unsigned jobs,
                         const fs::path& out) {
  require(input.spec.has_value() != input.trajectories.has_value(),
          "pipeline needs exactly one of a cohort spec or a trajectory file");
  ensure_dir(out);
  fs::path trajectories;
  if (input.spec) {
    synth(*input.spec, seed, out / "synth");
    auto spec = synth::spec_from_json(read_json(out / "synth" / "cohort.json"));
    if (spec.raw) {
      ingest(out / "synth" / "scans.jsonl", out / "synth" / "receivers.csv", out / "synth" / "registry.csv", cfg,
             out / "ingest");
      preprocess(out / "ingest" / "fixes.csv", out / "synth" / "receivers.csv", cfg, out / "preprocess");
      trajectories = out / "preprocess" / "trajectories.csv";
    } else {
      trajectories = out / "synth" / "trajectories.csv";
    }
  } else {
    trajectories = *input.trajectories;
  }
  cluster(trajectories, cfg, seed, jobs, out / "cluster");
  norms(trajectories, out / "cluster" / "cluster.json", cfg, jobs, out / "norms");
  detect(trajectories, out / "norms" / "norms.csv", cfg, out / "detect");
  classify(trajectories, out / "norms" / "norms.csv", out / "detect" / "deviations.csv", input.thresholds, cfg,
           out / "classify");
  report(out / "classify" / "report.json", out / "cluster" / "cluster.json", out / "report");
}

}  // namespace eldertrack::stages
