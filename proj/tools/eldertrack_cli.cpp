#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "eldertrack/stages.hpp"

namespace et = eldertrack;
namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

int exit_code_for(et::ErrorKind kind) {
  switch (kind) {
    case et::ErrorKind::Validation:
    case et::ErrorKind::Io:
    case et::ErrorKind::UnknownReceiver:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

void print_error(std::string_view kind, const std::string& message, std::string_view command) {
  nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}, {"command", command}}}};
  std::cerr << j.dump() << '\n';
}

// Flags that override config-file values; unset flags leave the file alone.
struct Overrides {
  std::optional<std::string> config;
  std::optional<int> h_slots;
  std::optional<int> min_stay_slots;
  std::optional<double> min_valid_fraction;
  std::optional<std::string> weight_kind;
  std::optional<std::string> awake_rule;
  std::optional<std::string> transition_mode;
  std::optional<int> h_gap;
  std::optional<int> rssi_threshold;
  std::optional<int> utc_offset;
  std::optional<int> k;
  std::optional<std::string> k_range;
  bool leave_one_out = false;

  et::Config resolve() const {
    auto cfg = et::stages::load_config(config ? std::optional<fs::path>(*config) : std::nullopt);
    if (h_slots) cfg.h_slots = *h_slots;
    if (min_stay_slots) cfg.min_stay_slots = *min_stay_slots;
    if (min_valid_fraction) cfg.min_valid_fraction = *min_valid_fraction;
    if (weight_kind) cfg.weight_kind = et::weight_kind_from_string(*weight_kind);
    if (awake_rule) cfg.awake_rule = et::awake_rule_from_string(*awake_rule);
    if (transition_mode) cfg.transition_mode = et::transition_mode_from_string(*transition_mode);
    if (h_gap) cfg.h_gap = *h_gap;
    if (rssi_threshold) cfg.rssi_threshold_dbm = *rssi_threshold;
    if (utc_offset) cfg.utc_offset_minutes = *utc_offset;
    if (leave_one_out) cfg.leave_one_out = true;
    if (k) cfg.k = *k;
    if (k_range) {
      auto colon = k_range->find(':');
      et::require(colon != std::string::npos, "--k-range must look like MIN:MAX");
      cfg.k_min = et::csv::to_int(std::string_view(*k_range).substr(0, colon), "k range minimum");
      cfg.k_max = et::csv::to_int(std::string_view(*k_range).substr(colon + 1), "k range maximum");
      cfg.k.reset();
    }
    cfg.validate();
    return cfg;
  }
};

void add_config_flags(CLI::App* cmd, Overrides& o, bool ingest, bool clustering, bool norms, bool classify) {
  cmd->add_option("--config", o.config, "Versioned JSON config; flags override its values")->check(CLI::ExistingFile);
  cmd->add_option("--min-valid-fraction", o.min_valid_fraction, "Minimum non-missing share of a valid day (0.5)");
  if (ingest) {
    cmd->add_option("--rssi-threshold", o.rssi_threshold, "Drop readings weaker than this dBm value (-70)");
    cmd->add_option("--utc-offset", o.utc_offset, "Facility clock offset from UTC in minutes (0)");
    cmd->add_option("--min-stay-slots", o.min_stay_slots, "Shortest kept run of one room, in slots (2)");
  }
  if (clustering) {
    cmd->add_option("--h-slots", o.h_slots, "Half width of the similarity window in slots (6)");
    cmd->add_option("--weight-kind", o.weight_kind, "Uniform | ActiveDayFocus | OnlyActiveDay");
    cmd->add_option("--k", o.k, "Fixed number of clusters; skips the SSD sweep");
    cmd->add_option("--k-range", o.k_range, "Cluster counts swept by SSD, as MIN:MAX (2:7)");
  }
  if (norms) {
    cmd->add_option("--h-gap", o.h_gap, "Minimum excursion length for day start/end, in slots (6)");
    cmd->add_option("--transition-mode", o.transition_mode, "literal | earliest");
    cmd->add_flag("--leave-one-out", o.leave_one_out, "Exclude the day under test from its individual norm");
  }
  if (classify) {
    cmd->add_option("--awake-rule", o.awake_rule, "uav | lav: fence used on the pre-group origin share");
  }
}

std::optional<et::ThresholdTable> pick_thresholds(const std::optional<std::string>& file, bool reference) {
  et::require(!(file && reference), "--thresholds and --reference-thresholds are mutually exclusive");
  if (reference) return et::reference_thresholds();
  if (file) return et::thresholds_from_json(et::stages::read_json(*file));
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory reconstruction, activity grouping and deviated-behaviour labelling for nursing-home BLE data"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  unsigned jobs = et::default_jobs();
  app.add_option("--seed", seed, "Seed for every random choice (0)");
  app.add_option("--jobs", jobs, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);

  Overrides ov;
  std::string out = ".";
  std::string spec, scans, receivers, registry, fixes, trajectories, cluster_file, norms_file, deviations, report_file;
  std::optional<std::string> thresholds_file, cluster_opt, trajectories_opt, spec_opt;
  bool reference = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort and its ground-truth plan");
  synth->add_option("--spec", spec, "Cohort spec (versioned JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", out, "Output directory");

  auto* ingest = app.add_subcommand("ingest", "Localize a BLE scan log into 15 s room fixes");
  ingest->add_option("--scans", scans, "Scan log (JSON lines)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--receivers", receivers, "Receiver map CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--registry", registry, "Tag registry CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", out, "Output directory");
  add_config_flags(ingest, ov, true, false, false, false);

  auto* pre = app.add_subcommand("preprocess", "Fit fixes to 5-minute slots, encode and smooth");
  pre->add_option("--fixes", fixes, "Fix CSV from ingest")->required()->check(CLI::ExistingFile);
  pre->add_option("--receivers", receivers, "Receiver map CSV")->required()->check(CLI::ExistingFile);
  pre->add_option("--out", out, "Output directory");
  add_config_flags(pre, ov, true, false, false, false);

  auto* cluster = app.add_subcommand("cluster", "Spectral clustering of aggregated trajectories");
  cluster->add_option("--trajectories", trajectories, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  cluster->add_option("--out", out, "Output directory");
  add_config_flags(cluster, ov, false, true, false, false);

  auto* norms = app.add_subcommand("norms", "Hybrid individual/group norms per resident-day");
  norms->add_option("--trajectories", trajectories, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  norms->add_option("--cluster", cluster_file, "cluster.json")->required()->check(CLI::ExistingFile);
  norms->add_option("--out", out, "Output directory");
  add_config_flags(norms, ov, false, false, true, false);

  auto* detect = app.add_subcommand("detect", "Slots that deviate from the hybrid norm");
  detect->add_option("--trajectories", trajectories, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  detect->add_option("--norms", norms_file, "norms.csv")->required()->check(CLI::ExistingFile);
  detect->add_option("--out", out, "Output directory");
  add_config_flags(detect, ov, false, false, false, false);

  auto* classify = app.add_subcommand("classify", "Period probabilities, fences and labels");
  classify->add_option("--trajectories", trajectories, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  classify->add_option("--norms", norms_file, "norms.csv")->required()->check(CLI::ExistingFile);
  classify->add_option("--deviations", deviations, "deviations.csv")->required()->check(CLI::ExistingFile);
  classify->add_option("--thresholds", thresholds_file, "Fixed fence table (JSON) instead of fitting")
      ->check(CLI::ExistingFile);
  classify->add_flag("--reference-thresholds", reference, "Use the built-in reference fence table");
  classify->add_option("--out", out, "Output directory");
  add_config_flags(classify, ov, false, false, true, true);

  auto* report = app.add_subcommand("report", "Plot-data CSVs: label distribution, probabilities, SSD curve");
  report->add_option("--report", report_file, "report.json from classify")->required()->check(CLI::ExistingFile);
  report->add_option("--cluster", cluster_opt, "cluster.json for the SSD curve")->check(CLI::ExistingFile);
  report->add_option("--out", out, "Output directory");

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage in sequence into one directory");
  pipeline->add_option("--spec", spec_opt, "Cohort spec to synthesize")->check(CLI::ExistingFile);
  pipeline->add_option("--trajectories", trajectories_opt, "Existing trajectory CSV")->check(CLI::ExistingFile);
  pipeline->add_option("--thresholds", thresholds_file, "Fixed fence table (JSON) instead of fitting")
      ->check(CLI::ExistingFile);
  pipeline->add_flag("--reference-thresholds", reference, "Use the built-in reference fence table");
  pipeline->add_option("--out", out, "Output directory");
  add_config_flags(pipeline, ov, true, true, true, true);

  std::string command = "eldertrack";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("validation", e.what(), command);
    return kExitValidation;
  }

  try {
    for (auto* sub : app.get_subcommands()) command = sub->get_name();
    const fs::path dir(out);
    if (*synth) {
      et::stages::synth(spec, seed, dir);
    } else if (*ingest) {
      et::stages::ingest(scans, receivers, registry, ov.resolve(), dir);
    } else if (*pre) {
      et::stages::preprocess(fixes, receivers, ov.resolve(), dir);
    } else if (*cluster) {
      et::stages::cluster(trajectories, ov.resolve(), seed, jobs, dir);
    } else if (*norms) {
      et::stages::norms(trajectories, cluster_file, ov.resolve(), jobs, dir);
    } else if (*detect) {
      et::stages::detect(trajectories, norms_file, ov.resolve(), dir);
    } else if (*classify) {
      et::stages::classify(trajectories, norms_file, deviations, pick_thresholds(thresholds_file, reference),
                           ov.resolve(), dir);
    } else if (*report) {
      et::stages::report(report_file, cluster_opt ? std::optional<fs::path>(*cluster_opt) : std::nullopt, dir);
    } else if (*pipeline) {
      et::stages::PipelineInput input;
      if (spec_opt) input.spec = *spec_opt;
      if (trajectories_opt) input.trajectories = *trajectories_opt;
      input.thresholds = pick_thresholds(thresholds_file, reference);
      et::stages::run_pipeline(input, ov.resolve(), seed, jobs, dir);
    }
  } catch (const et::Error& e) {
    print_error(et::to_string(e.kind()), e.what(), command);
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    print_error("internal", e.what(), command);
    return kExitRuntime;
  }
  return 0;
}
