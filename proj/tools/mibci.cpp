// mibci: synthetic data, container checks, evaluation runs, report comparison
// and rule dumps for the ANFIS-FBCSP-PSO pipeline.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mibci/mibci.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw mibci::Error("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw mibci::FormatError(p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  out << text;
  if (!out) throw mibci::Error("failed writing " + p.string());
}

void print_summary(const mibci::TrialSet& set, std::ostream& os) {
  os << set.size() << " trials, " << set.channels << " channels x " << set.samples << " samples at "
     << set.sample_rate << " Hz\n";
  for (const auto& [key, counts] : set.class_counts()) {
    os << "  subject " << key.first << " session " << key.second << ":";
    for (int c = 0; c < mibci::kNumClasses; ++c) os << " class" << c + 1 << "=" << counts.counts[static_cast<std::size_t>(c)];
    os << "\n";
  }
}

struct SynthArgs {
  mibci::SynthOptions opt;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  const auto set = mibci::synth_trialset(a.opt);
  const auto bytes = mibci::save_dataset(set, a.out);
  const auto [bin, side] = mibci::dataset_paths(a.out);
  std::cout << "wrote " << set.size() << " trials (" << bytes << " bytes) to " << bin.string() << "\n";
  return 0;
}

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int cmd_ingest(const IngestArgs& a) {
  mibci::TrialSet merged;
  for (std::size_t k = 0; k < a.inputs.size(); ++k) {
    auto set = mibci::load_dataset(a.inputs[k]);
    set.validate();
    std::cout << a.inputs[k] << ": ";
    print_summary(set, std::cout);
    if (k == 0) {
      merged = std::move(set);
      continue;
    }
    if (set.channels != merged.channels || set.samples != merged.samples || set.sample_rate != merged.sample_rate)
      throw mibci::FormatError(a.inputs[k] + " does not match the geometry of " + a.inputs[0]);
    for (auto& t : set.trials) merged.trials.push_back(std::move(t));
  }
  if (!a.out.empty()) {
    const auto bytes = mibci::save_dataset(merged, a.out);
    std::cout << "merged " << merged.size() << " trials (" << bytes << " bytes) into " << a.out << "\n";
  }
  return 0;
}

struct RunArgs {
  std::string config, data, protocol, model, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool override_ranges = false;
  bool quiet = false;
};

int cmd_run(const RunArgs& a) {
  json j = a.config.empty() ? json::object() : read_json_file(a.config);
  if (!a.data.empty()) j["data"] = a.data;
  if (!a.protocol.empty()) j["protocol"] = a.protocol;
  if (!a.model.empty()) j["model"] = a.model;
  if (!a.out.empty()) j["output"] = a.out;
  if (a.jobs) j["jobs"] = *a.jobs;
  if (a.override_ranges) j["override_ranges"] = true;
  mibci::RunConfig cfg = mibci::config_from_json(j);
  mibci::apply_seed_override(cfg, a.seed);
  std::vector<std::string> missing;
  if (cfg.data.empty()) missing.push_back("data path is required (config 'data' or --data)");
  if (cfg.output.empty()) missing.push_back("output directory is required (config 'output' or --out)");
  if (!missing.empty()) throw mibci::ConfigError(missing);

  const auto set = mibci::load_dataset(cfg.data);
  mibci::ProgressFn progress;
  if (!a.quiet) progress = [](const std::string& s) { std::cerr << "[mibci] " << s << "\n"; };
  auto result = mibci::run_protocol(set, cfg.protocol, cfg.pipeline, cfg.seed, progress);
  result.report.model = cfg.model == "anfis" ? "anfis-fbcsp-pso" : cfg.model;
  result.report.config = mibci::config_to_json(cfg);

  const fs::path out = cfg.output;
  fs::create_directories(out / "models");
  fs::create_directories(out / "pso");
  write_text(out / "report.json", mibci::report_to_json(result.report).dump(2) + "\n");
  const std::string table = mibci::format_table(result.report);
  write_text(out / "report.txt", table);
  write_text(out / "config.json", result.report.config.dump(2) + "\n");
  for (const auto& f : result.folds) {
    const std::string stem = "S" + std::to_string(f.subject);
    write_text(out / "models" / (stem + ".json"), mibci::pipeline_bundle_json(f, cfg.protocol).dump() + "\n");
    std::ofstream h(out / "pso" / (stem + ".jsonl"));
    mibci::write_history_jsonl(f.pso.history, h);
  }
  std::cout << table;
  return 0;
}

int cmd_compare(const std::vector<std::string>& files) {
  std::vector<mibci::EvalReport> reports;
  for (const auto& f : files) reports.push_back(mibci::report_from_json(read_json_file(f)));
  try {
    std::cout << mibci::compare_table(reports);
  } catch (const mibci::InvalidArgument& e) {
    throw mibci::ConfigError({e.what()});
  }
  return 0;
}

int cmd_rules(const std::string& bundle_path) {
  const auto bundle = mibci::pipeline_bundle_from_json(read_json_file(bundle_path));
  std::cout << mibci::rules_report(bundle.model, bundle.reference);
  return 0;
}

struct SplitsArgs {
  std::string data, protocol = "within";
  std::uint64_t seed = 42;
  double fraction = 0.8;
  int session = 0;
};

int cmd_splits(const SplitsArgs& a) {
  const auto set = mibci::load_dataset(a.data);
  json j;
  j["protocol"] = a.protocol;
  j["seed"] = a.seed;
  j["folds"] = json::array();
  if (mibci::protocol_from_string(a.protocol) == mibci::Protocol::Within) {
    j["train_fraction"] = a.fraction;
    for (int s : set.subjects()) {
      const auto sp = mibci::within_subject_split(set, s, a.fraction, a.seed, a.session);
      j["folds"].push_back({{"subject", s}, {"train", sp.train}, {"test", sp.test}});
    }
  } else {
    for (const auto& f : mibci::loso_folds(set)) {
      const auto sp = mibci::loso_split(set, f);
      j["folds"].push_back({{"subject", f.test_subject}, {"train", sp.train}, {"test", sp.test}});
    }
  }
  std::cout << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motor-imagery EEG classification with ANFIS, filter-bank CSP and particle swarm optimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mibci 1.0.0");

  SynthArgs synth;
  auto* sc = app.add_subcommand("synth", "Generate a synthetic four-class data set");
  sc->add_option("--subjects", synth.opt.subjects, "Number of subjects")->capture_default_str();
  sc->add_option("--trials-per-class", synth.opt.trials_per_class, "Trials per class and session")->capture_default_str();
  sc->add_option("--sessions", synth.opt.sessions, "Sessions per subject")->capture_default_str();
  sc->add_option("--seed", synth.opt.seed, "Random seed")->capture_default_str();
  sc->add_option("--ratio", synth.opt.variance_ratio, "Class band variance ratio")->capture_default_str();
  sc->add_option("--jobs", synth.opt.jobs, "Worker threads")->capture_default_str();
  sc->add_option("--out", synth.out, "Output directory or .miec file")->required();

  IngestArgs ingest;
  auto* ic = app.add_subcommand("ingest", "Validate MIEC containers and optionally merge them");
  ic->add_option("inputs", ingest.inputs, "Containers (directories or .miec files)")->required();
  ic->add_option("--out", ingest.out, "Write the merged set here");

  RunArgs run;
  auto* rc = app.add_subcommand("run", "Train and evaluate under a protocol");
  rc->add_option("--config", run.config, "Run configuration (JSON)");
  rc->add_option("--data", run.data, "Data set path");
  rc->add_option("--protocol", run.protocol, "within or loso");
  rc->add_option("--model", run.model, "Pipeline id (anfis-fbcsp-pso)");
  rc->add_option("--out", run.out, "Output directory");
  rc->add_option("--seed", run.seed, "Seed (overrides MIBCI_SEED and the config)");
  rc->add_option("--jobs", run.jobs, "Concurrent fitness evaluations");
  rc->add_flag("--override-ranges", run.override_ranges, "Accept hyperparameters outside the supported ranges");
  rc->add_flag("--quiet", run.quiet, "No progress output");

  std::vector<std::string> compare_files;
  auto* cc = app.add_subcommand("compare", "Side-by-side summary of evaluation reports");
  cc->add_option("reports", compare_files, "Report JSON files")->required();

  std::string bundle;
  auto* uc = app.add_subcommand("rules", "Print the fuzzy rules of a trained fold");
  uc->add_option("model", bundle, "Pipeline bundle written by run (models/S<n>.json)")->required();

  SplitsArgs splits;
  auto* pc = app.add_subcommand("splits", "Print train/test index sets as JSON");
  pc->add_option("--data", splits.data, "Data set path")->required();
  pc->add_option("--protocol", splits.protocol, "within or loso")->capture_default_str();
  pc->add_option("--seed", splits.seed, "Seed")->capture_default_str();
  pc->add_option("--train-fraction", splits.fraction, "Within-subject train fraction")->capture_default_str();
  pc->add_option("--session", splits.session, "Restrict to one session (0 pools all)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sc) return cmd_synth(synth);
    if (*ic) return cmd_ingest(ingest);
    if (*rc) return cmd_run(run);
    if (*cc) return cmd_compare(compare_files);
    if (*uc) return cmd_rules(bundle);
    if (*pc) return cmd_splits(splits);
  } catch (const mibci::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
