#pragma once

// Run configuration: JSON document, defaults, and validation that reports every
// violation at once.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mibci/error.hpp"
#include "mibci/harness.hpp"

namespace mibci {

inline constexpr int kConfigSchemaVersion = 1;

struct RunConfig {
  std::string data;
  std::string model = "anfis-fbcsp-pso";
  Protocol protocol = Protocol::Within;
  std::uint64_t seed = 42;
  std::string output;
  bool override_ranges = false;
  PipelineConfig pipeline;
};

namespace detail {

using json = nlohmann::json;

class ConfigReader {
 public:
  explicit ConfigReader(std::vector<std::string>& violations) : v_(violations) {}

  /// Reads obj[key] into out when present; records a type error otherwise.
  template <typename T>
  void get(const json& obj, const std::string& path, const char* key, T& out) {
    if (!obj.is_object() || !obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      v_.push_back(path + key + " has the wrong type (found " + obj.at(key).dump() + ")");
    }
  }

  const json* section(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) return nullptr;
    const json& s = obj.at(key);
    if (!s.is_object()) {
      v_.push_back(path + key + " must be an object");
      return nullptr;
    }
    return &s;
  }

  void known(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) return;
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, _] : obj.items())
      if (!ok.count(k)) v_.push_back("unknown key " + path + k);
  }

 private:
  std::vector<std::string>& v_;
};

inline std::string num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace detail

inline nlohmann::json config_to_json(const RunConfig& c) {
  const PipelineConfig& p = c.pipeline;
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : p.bands) bands.push_back({{"name", b.name}, {"low_hz", b.low_hz}, {"high_hz", b.high_hz}});
  return {
      {"schema_version", kConfigSchemaVersion},
      {"data", c.data},
      {"model", c.model},
      {"protocol", to_string(c.protocol)},
      {"seed", c.seed},
      {"output", c.output},
      {"jobs", p.jobs},
      {"override_ranges", c.override_ranges},
      {"session", p.session},
      {"preprocess",
       {{"session_standardize", p.preprocess.session_standardize},
        {"ica",
         {{"enabled", p.preprocess.ica_enabled},
          {"kurtosis_threshold", p.preprocess.ica_kurtosis_threshold},
          {"reject", p.preprocess.ica_reject},
          {"max_fit_samples", p.preprocess.ica_max_fit_samples},
          {"max_iter", p.preprocess.ica_max_iter},
          {"tol", p.preprocess.ica_tol}}},
        {"zscore", {{"enabled", p.preprocess.zscore_enabled}, {"mode", to_string(p.preprocess.zscore_mode)}}}}},
      {"filter_bank", {{"order", p.filter_order}, {"bands", bands}}},
      {"fbcsp",
       {{"components_per_band", p.fbcsp.components_per_band},
        {"select_k", p.fbcsp.select_k},
        {"selection", p.fbcsp.selection == SelectionMode::Global ? "global" : "per_pairing"},
        {"shrinkage", p.fbcsp.shrinkage},
        {"mi_bins", p.fbcsp.mi_bins}}},
      {"anfis",
       {{"mfs_per_input", p.anfis.mfs_per_input},
        {"mf_kind", to_string(p.anfis.mf_kind)},
        {"ridge", p.anfis.ridge},
        {"finetune",
         {{"enabled", p.finetune},
          {"epochs", p.finetune_options.epochs},
          {"learning_rate", p.finetune_options.learning_rate}}}}},
      {"pso",
       {{"particles", p.anfis.pso.particles},
        {"iterations", p.anfis.pso.iterations},
        {"c1", p.anfis.pso.c1},
        {"c2", p.anfis.pso.c2},
        {"inertia_start", p.anfis.pso.inertia_start},
        {"inertia_end", p.anfis.pso.inertia_end},
        {"velocity_clamp", p.anfis.pso.velocity_clamp}}},
      {"augment",
       {{"enabled", p.augment}, {"segments", p.augment_options.segments}, {"multiplier", p.augment_options.multiplier}}},
      {"evaluation",
       {{"train_fraction", p.train_fraction},
        {"inner_train_fraction", p.inner_train_fraction},
        {"std_kind", to_string(p.std_kind)}}},
  };
}

/// Checks every field; range checks on the tuned hyperparameters are skipped
/// when override_ranges is set. Returns the violations (empty when valid).
inline std::vector<std::string> config_violations(const RunConfig& c, bool check_paths = true) {
  std::vector<std::string> v;
  const PipelineConfig& p = c.pipeline;
  auto range = [&](const char* name, double x, double lo, double hi) {
    if (!(x >= lo && x <= hi) && !c.override_ranges)
      v.push_back(std::string(name) + " = " + detail::num(x) + " outside supported range [" + detail::num(lo) + ", " +
                  detail::num(hi) + "] (set override_ranges to allow)");
  };
  auto fixed = [&](const char* name, double x, double want) {
    if (x != want && !c.override_ranges)
      v.push_back(std::string(name) + " = " + detail::num(x) + " differs from the supported value " + detail::num(want) +
                  " (set override_ranges to allow)");
  };
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };

  range("pso.particles", p.anfis.pso.particles, 30, 50);
  range("pso.iterations", p.anfis.pso.iterations, 50, 100);
  range("pso.c1", p.anfis.pso.c1, 1.5, 2.0);
  range("pso.c2", p.anfis.pso.c2, 1.5, 2.0);
  range("pso.inertia_start", p.anfis.pso.inertia_start, 0.7, 1.0);
  range("pso.inertia_end", p.anfis.pso.inertia_end, 0.7, 1.0);
  range("anfis.mfs_per_input", p.anfis.mfs_per_input, 2, 3);
  range("anfis.finetune.epochs", p.finetune_options.epochs, 100, 300);
  range("anfis.finetune.learning_rate", p.finetune_options.learning_rate, 0.01, 0.05);
  fixed("fbcsp.components_per_band", p.fbcsp.components_per_band, 4);
  fixed("fbcsp.select_k", p.fbcsp.select_k, 4);
  fixed("filter_bank.order", p.filter_order, 5);

  require(c.model == "anfis-fbcsp-pso" || c.model == "anfis",
          "model '" + c.model + "' is not a registered pipeline (expected anfis-fbcsp-pso)");
  require(p.jobs >= 1, "jobs must be >= 1");
  require(p.session >= 0 && p.session <= 255, "session must be 0 (pooled) or a session id");
  require(p.anfis.pso.particles >= 1, "pso.particles must be >= 1");
  require(p.anfis.pso.iterations >= 0, "pso.iterations must be >= 0");
  require(p.anfis.pso.velocity_clamp > 0.0, "pso.velocity_clamp must be > 0");
  require(p.anfis.mfs_per_input >= 1, "anfis.mfs_per_input must be >= 1");
  require(p.anfis.ridge >= 0.0, "anfis.ridge must be >= 0");
  require(p.finetune_options.epochs >= 0, "anfis.finetune.epochs must be >= 0");
  require(p.finetune_options.learning_rate >= 0.0, "anfis.finetune.learning_rate must be >= 0");
  require(p.fbcsp.components_per_band >= 2 && p.fbcsp.components_per_band % 2 == 0,
          "fbcsp.components_per_band must be even and >= 2");
  require(p.fbcsp.select_k >= 1, "fbcsp.select_k must be >= 1");
  require(p.fbcsp.shrinkage >= 0.0 && p.fbcsp.shrinkage <= 1.0, "fbcsp.shrinkage must lie in [0, 1]");
  require(p.fbcsp.mi_bins >= 2, "fbcsp.mi_bins must be >= 2");
  const int inputs = p.fbcsp.select_k * (p.fbcsp.selection == SelectionMode::Global ? 1 : kNumClasses);
  double rules = 1.0;
  for (int i = 0; i < inputs; ++i) rules *= std::max(p.anfis.mfs_per_input, 1);
  require(rules <= static_cast<double>(kMaxRules),
          "rule base of " + detail::num(rules) + " rules exceeds the cap of " + std::to_string(kMaxRules));
  require(p.filter_order >= 1, "filter_bank.order must be >= 1");
  require(!p.bands.empty(), "filter_bank.bands must not be empty");
  for (const auto& b : p.bands)
    require(b.low_hz > 0.0 && b.low_hz < b.high_hz, "band " + b.name + " has invalid edges");
  require(p.preprocess.ica_max_fit_samples >= 1, "preprocess.ica.max_fit_samples must be >= 1");
  require(p.preprocess.ica_max_iter >= 1, "preprocess.ica.max_iter must be >= 1");
  require(p.preprocess.ica_tol > 0.0, "preprocess.ica.tol must be > 0");
  require(p.augment_options.segments >= 1, "augment.segments must be >= 1");
  require(p.augment_options.multiplier >= 0.0, "augment.multiplier must be >= 0");
  require(p.train_fraction > 0.0 && p.train_fraction < 1.0, "evaluation.train_fraction must lie in (0, 1)");
  require(p.inner_train_fraction > 0.0 && p.inner_train_fraction < 1.0,
          "evaluation.inner_train_fraction must lie in (0, 1)");
  if (check_paths && !c.data.empty()) {
    const auto [bin, side] = dataset_paths(c.data);
    require(std::filesystem::exists(bin), "data file " + bin.string() + " does not exist");
    require(std::filesystem::exists(side), "sidecar " + side.string() + " does not exist");
  }
  return v;
}

/// Defaults overlaid with `j`. Throws ConfigError listing every problem found.
inline RunConfig config_from_json(const nlohmann::json& j, bool check_paths = true) {
  std::vector<std::string> v;
  detail::ConfigReader r(v);
  RunConfig c;
  PipelineConfig& p = c.pipeline;
  if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});
  r.known(j, "", {"schema_version", "data", "model", "protocol", "seed", "output", "jobs", "override_ranges", "session",
                  "preprocess", "filter_bank", "fbcsp", "anfis", "pso", "augment", "evaluation"});
  int version = kConfigSchemaVersion;
  r.get(j, "", "schema_version", version);
  if (version != kConfigSchemaVersion) v.push_back("unsupported schema_version " + std::to_string(version));
  r.get(j, "", "data", c.data);
  r.get(j, "", "model", c.model);
  std::string protocol = to_string(c.protocol);
  r.get(j, "", "protocol", protocol);
  try {
    c.protocol = protocol_from_string(protocol);
  } catch (const InvalidArgument& e) {
    v.push_back(e.what());
  }
  r.get(j, "", "seed", c.seed);
  r.get(j, "", "output", c.output);
  r.get(j, "", "jobs", p.jobs);
  r.get(j, "", "override_ranges", c.override_ranges);
  r.get(j, "", "session", p.session);

  if (const auto* s = r.section(j, "", "preprocess")) {
    r.known(*s, "preprocess.", {"session_standardize", "ica", "zscore"});
    r.get(*s, "preprocess.", "session_standardize", p.preprocess.session_standardize);
    if (const auto* ica = r.section(*s, "preprocess.", "ica")) {
      const std::string at = "preprocess.ica.";
      r.known(*ica, at, {"enabled", "kurtosis_threshold", "reject", "max_fit_samples", "max_iter", "tol"});
      r.get(*ica, at, "enabled", p.preprocess.ica_enabled);
      r.get(*ica, at, "kurtosis_threshold", p.preprocess.ica_kurtosis_threshold);
      r.get(*ica, at, "reject", p.preprocess.ica_reject);
      r.get(*ica, at, "max_fit_samples", p.preprocess.ica_max_fit_samples);
      r.get(*ica, at, "max_iter", p.preprocess.ica_max_iter);
      r.get(*ica, at, "tol", p.preprocess.ica_tol);
    }
    if (const auto* z = r.section(*s, "preprocess.", "zscore")) {
      r.known(*z, "preprocess.zscore.", {"enabled", "mode"});
      r.get(*z, "preprocess.zscore.", "enabled", p.preprocess.zscore_enabled);
      std::string mode = to_string(p.preprocess.zscore_mode);
      r.get(*z, "preprocess.zscore.", "mode", mode);
      try {
        p.preprocess.zscore_mode = zscore_mode_from_string(mode);
      } catch (const InvalidArgument& e) {
        v.push_back(e.what());
      }
    }
  }
  if (const auto* s = r.section(j, "", "filter_bank")) {
    r.known(*s, "filter_bank.", {"order", "bands"});
    r.get(*s, "filter_bank.", "order", p.filter_order);
    if (s->contains("bands")) {
      p.bands.clear();
      try {
        for (const auto& b : s->at("bands"))
          p.bands.push_back({b.at("name").get<std::string>(), b.at("low_hz").get<double>(), b.at("high_hz").get<double>()});
      } catch (const nlohmann::json::exception&) {
        v.push_back("filter_bank.bands must be a list of {name, low_hz, high_hz}");
      }
    }
  }
  if (const auto* s = r.section(j, "", "fbcsp")) {
    r.known(*s, "fbcsp.", {"components_per_band", "select_k", "selection", "shrinkage", "mi_bins"});
    r.get(*s, "fbcsp.", "components_per_band", p.fbcsp.components_per_band);
    r.get(*s, "fbcsp.", "select_k", p.fbcsp.select_k);
    std::string sel = "global";
    r.get(*s, "fbcsp.", "selection", sel);
    if (sel == "global") p.fbcsp.selection = SelectionMode::Global;
    else if (sel == "per_pairing") p.fbcsp.selection = SelectionMode::PerPairing;
    else v.push_back("fbcsp.selection must be global or per_pairing");
    r.get(*s, "fbcsp.", "shrinkage", p.fbcsp.shrinkage);
    r.get(*s, "fbcsp.", "mi_bins", p.fbcsp.mi_bins);
  }
  if (const auto* s = r.section(j, "", "anfis")) {
    r.known(*s, "anfis.", {"mfs_per_input", "mf_kind", "ridge", "finetune"});
    r.get(*s, "anfis.", "mfs_per_input", p.anfis.mfs_per_input);
    std::string kind = to_string(p.anfis.mf_kind);
    r.get(*s, "anfis.", "mf_kind", kind);
    try {
      p.anfis.mf_kind = mf_kind_from_string(kind);
    } catch (const InvalidArgument& e) {
      v.push_back(e.what());
    }
    r.get(*s, "anfis.", "ridge", p.anfis.ridge);
    if (const auto* f = r.section(*s, "anfis.", "finetune")) {
      r.known(*f, "anfis.finetune.", {"enabled", "epochs", "learning_rate"});
      r.get(*f, "anfis.finetune.", "enabled", p.finetune);
      r.get(*f, "anfis.finetune.", "epochs", p.finetune_options.epochs);
      r.get(*f, "anfis.finetune.", "learning_rate", p.finetune_options.learning_rate);
    }
  }
  if (const auto* s = r.section(j, "", "pso")) {
    r.known(*s, "pso.", {"particles", "iterations", "c1", "c2", "inertia_start", "inertia_end", "velocity_clamp"});
    r.get(*s, "pso.", "particles", p.anfis.pso.particles);
    r.get(*s, "pso.", "iterations", p.anfis.pso.iterations);
    r.get(*s, "pso.", "c1", p.anfis.pso.c1);
    r.get(*s, "pso.", "c2", p.anfis.pso.c2);
    r.get(*s, "pso.", "inertia_start", p.anfis.pso.inertia_start);
    r.get(*s, "pso.", "inertia_end", p.anfis.pso.inertia_end);
    r.get(*s, "pso.", "velocity_clamp", p.anfis.pso.velocity_clamp);
  }
  if (const auto* s = r.section(j, "", "augment")) {
    r.known(*s, "augment.", {"enabled", "segments", "multiplier"});
    r.get(*s, "augment.", "enabled", p.augment);
    r.get(*s, "augment.", "segments", p.augment_options.segments);
    r.get(*s, "augment.", "multiplier", p.augment_options.multiplier);
  }
  if (const auto* s = r.section(j, "", "evaluation")) {
    r.known(*s, "evaluation.", {"train_fraction", "inner_train_fraction", "std_kind"});
    r.get(*s, "evaluation.", "train_fraction", p.train_fraction);
    r.get(*s, "evaluation.", "inner_train_fraction", p.inner_train_fraction);
    std::string kind = to_string(p.std_kind);
    r.get(*s, "evaluation.", "std_kind", kind);
    try {
      p.std_kind = std_kind_from_string(kind);
    } catch (const InvalidArgument& e) {
      v.push_back(e.what());
    }
  }

  const auto more = config_violations(c, check_paths);
  v.insert(v.end(), more.begin(), more.end());
  if (!v.empty()) throw ConfigError(std::move(v));
  return c;
}

/// Precedence: explicit flag, then the MIBCI_SEED environment variable, then the file.
inline void apply_seed_override(RunConfig& c, std::optional<std::uint64_t> flag, const char* env = std::getenv("MIBCI_SEED")) {
  if (flag) {
    c.seed = *flag;
    return;
  }
  if (env && *env) {
    char* end = nullptr;
    const unsigned long long s = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ConfigError({std::string("MIBCI_SEED is not an unsigned integer: '") + env + "'"});
    c.seed = s;
  }
}

}  // namespace mibci
