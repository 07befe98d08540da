#pragma once

// Per-subject evaluation report, its JSON schema and text tables.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mibci/error.hpp"
#include "mibci/metrics.hpp"

namespace mibci {

inline constexpr const char* kReportSchema = "mibci.eval_report";
inline constexpr int kReportSchemaVersion = 1;

enum class Protocol { Within, Loso };

inline std::string to_string(Protocol p) { return p == Protocol::Within ? "within" : "loso"; }

inline Protocol protocol_from_string(const std::string& s) {
  if (s == "within") return Protocol::Within;
  if (s == "loso") return Protocol::Loso;
  throw InvalidArgument("unknown protocol '" + s + "' (expected within or loso)");
}

enum class StdKind { Population, Sample };

inline std::string to_string(StdKind k) { return k == StdKind::Population ? "population" : "sample"; }

inline StdKind std_kind_from_string(const std::string& s) {
  if (s == "population") return StdKind::Population;
  if (s == "sample") return StdKind::Sample;
  throw InvalidArgument("unknown std kind '" + s + "'");
}

/// Metric columns in table order. Timing fields are seconds.
struct MetricRow {
  int subject = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0, kappa = 0.0;
  double train_duration_s = 0.0, mean_predict_latency_s = 0.0;

  static constexpr const char* kFields[] = {"accuracy", "precision",        "recall",
                                            "f1",       "kappa",            "train_duration_s",
                                            "mean_predict_latency_s"};
  static constexpr std::size_t kFieldCount = 7;

  double field(std::size_t i) const {
    const double v[] = {accuracy, precision, recall, f1, kappa, train_duration_s, mean_predict_latency_s};
    return v[i];
  }
  void set_field(std::size_t i, double x) {
    double* v[] = {&accuracy, &precision, &recall, &f1, &kappa, &train_duration_s, &mean_predict_latency_s};
    *v[i] = x;
  }
  static bool is_timing(std::size_t i) { return i >= 5; }
};

inline MetricRow metric_row(int subject, const Metrics& m, double train_s, double latency_s) {
  return {subject, m.accuracy, m.precision, m.recall, m.f1, m.kappa, train_s, latency_s};
}

inline double round_ms(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

struct EvalReport {
  Protocol protocol = Protocol::Within;
  std::string model = "anfis-fbcsp-pso";
  std::uint64_t seed = 0;
  StdKind std_kind = StdKind::Population;
  std::vector<MetricRow> rows;
  MetricRow mean, std;  // subject field unused
  nlohmann::json config = nlohmann::json::object();

  /// Rounds timing to milliseconds and recomputes mean/std from the rows.
  void finalize() {
    for (auto& r : rows) {
      r.train_duration_s = round_ms(r.train_duration_s);
      r.mean_predict_latency_s = round_ms(r.mean_predict_latency_s);
    }
    mean = MetricRow{};
    std = MetricRow{};
    if (rows.empty()) return;
    const double n = static_cast<double>(rows.size());
    for (std::size_t f = 0; f < MetricRow::kFieldCount; ++f) {
      double s = 0.0;
      for (const auto& r : rows) s += r.field(f);
      const double mu = s / n;
      double ss = 0.0;
      for (const auto& r : rows) ss += (r.field(f) - mu) * (r.field(f) - mu);
      const double denom = std_kind == StdKind::Population ? n : n - 1.0;
      const double sd = denom > 0 ? std::sqrt(ss / denom) : 0.0;
      mean.set_field(f, MetricRow::is_timing(f) ? round_ms(mu) : mu);
      std.set_field(f, MetricRow::is_timing(f) ? round_ms(sd) : sd);
    }
  }

  std::vector<int> subjects() const {
    std::vector<int> out;
    for (const auto& r : rows) out.push_back(r.subject);
    return out;
  }
};

namespace detail {

inline nlohmann::json row_json(const MetricRow& r, bool with_subject) {
  nlohmann::json j = nlohmann::json::object();
  if (with_subject) j["subject"] = r.subject;
  for (std::size_t f = 0; f < MetricRow::kFieldCount; ++f) j[MetricRow::kFields[f]] = r.field(f);
  return j;
}

inline MetricRow row_from_json(const nlohmann::json& j, bool with_subject) {
  MetricRow r;
  if (with_subject) r.subject = j.at("subject").get<int>();
  for (std::size_t f = 0; f < MetricRow::kFieldCount; ++f) r.set_field(f, j.at(MetricRow::kFields[f]).get<double>());
  return r;
}

}  // namespace detail

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["schema_version"] = kReportSchemaVersion;
  j["protocol"] = to_string(r.protocol);
  j["model"] = r.model;
  j["seed"] = r.seed;
  j["std_kind"] = to_string(r.std_kind);
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) j["rows"].push_back(detail::row_json(row, true));
  j["mean"] = detail::row_json(r.mean, false);
  j["std"] = detail::row_json(r.std, false);
  j["config"] = r.config;
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kReportSchema) throw FormatError("not an evaluation report");
    if (j.at("schema_version").get<int>() != kReportSchemaVersion)
      throw FormatError("unsupported report schema version " + std::to_string(j.at("schema_version").get<int>()));
    EvalReport r;
    r.protocol = protocol_from_string(j.at("protocol").get<std::string>());
    r.model = j.at("model").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.std_kind = std_kind_from_string(j.at("std_kind").get<std::string>());
    for (const auto& row : j.at("rows")) r.rows.push_back(detail::row_from_json(row, true));
    r.mean = detail::row_from_json(j.at("mean"), false);
    r.std = detail::row_from_json(j.at("std"), false);
    r.config = j.value("config", nlohmann::json::object());
    for (const auto& row : r.rows) {
      if (!(row.accuracy >= 0.0 && row.accuracy <= 100.0)) throw FormatError("accuracy outside [0, 100]");
      if (!(row.kappa >= -100.0 && row.kappa <= 100.0)) throw FormatError("kappa outside [-100, 100]");
      if (row.train_duration_s < 0.0 || row.mean_predict_latency_s < 0.0) throw FormatError("negative timing");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

/// Subject rows followed by Mean and Std lines.
inline std::string format_table(const EvalReport& r) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s / %s (seed %llu)\n", r.model.c_str(), to_string(r.protocol).c_str(),
                static_cast<unsigned long long>(r.seed));
  out += buf;
  std::snprintf(buf, sizeof buf, "%-8s %7s %7s %7s %7s %7s %10s %10s\n", "Subject", "Acc.", "Prec.", "Rec.", "F1",
                "Kappa", "Train(s)", "Pred(s)");
  out += buf;
  auto line = [&](const std::string& name, const MetricRow& m) {
    std::snprintf(buf, sizeof buf, "%-8s %7.2f %7.2f %7.2f %7.2f %7.2f %10.3f %10.3f\n", name.c_str(), m.accuracy,
                  m.precision, m.recall, m.f1, m.kappa, m.train_duration_s, m.mean_predict_latency_s);
    out += buf;
  };
  for (const auto& row : r.rows) line("S" + std::to_string(row.subject), row);
  line("Mean", r.mean);
  line("Std", r.std);
  return out;
}

/// One row per report: accuracy and kappa as mean +/- std. Reports must share
/// protocol and subject set.
inline std::string compare_table(std::span<const EvalReport> reports) {
  if (reports.empty()) throw InvalidArgument("nothing to compare");
  for (const auto& r : reports) {
    if (r.protocol != reports.front().protocol)
      throw InvalidArgument("cannot compare a " + to_string(r.protocol) + " report with a " +
                            to_string(reports.front().protocol) + " report");
    if (r.subjects() != reports.front().subjects()) throw InvalidArgument("reports cover different subjects");
  }
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "protocol: %s\n%-20s %18s %18s\n", to_string(reports.front().protocol).c_str(), "Model",
                "Accuracy (%)", "Kappa (%)");
  out += buf;
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-20s %8.2f +/- %5.2f %8.2f +/- %5.2f\n", r.model.c_str(), r.mean.accuracy,
                  r.std.accuracy, r.mean.kappa, r.std.kappa);
    out += buf;
  }
  return out;
}

}  // namespace mibci
