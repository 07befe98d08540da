#pragma once

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mibci/anfis.hpp"
#include "mibci/error.hpp"
#include "mibci/signal.hpp"

namespace mibci {

inline nlohmann::json anfis_to_json(const AnfisModel& m) {
  nlohmann::json j;
  j["format"] = "mibci-anfis";
  j["version"] = 1;
  j["inputs"] = m.inputs;
  j["mfs_per_input"] = m.mfs_per_input;
  j["classes"] = m.classes;
  j["input_names"] = m.input_names;
  j["mfs"] = nlohmann::json::array();
  for (const auto& row : m.mfs) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& mf : row)
      r.push_back({{"kind", to_string(mf.kind)},
                   {"params", std::vector<double>(mf.params.begin(), mf.params.begin() + mf.param_count())}});
    j["mfs"].push_back(std::move(r));
  }
  j["rule_weights"] = m.rule_weights;
  j["consequents"] = m.consequents;
  return j;
}

inline AnfisModel anfis_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "mibci-anfis") throw FormatError("not an ANFIS model document");
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported ANFIS model version");
    AnfisModel m;
    m.inputs = j.at("inputs").get<int>();
    m.mfs_per_input = j.at("mfs_per_input").get<int>();
    m.classes = j.at("classes").get<int>();
    m.input_names = j.at("input_names").get<std::vector<std::string>>();
    for (const auto& row : j.at("mfs")) {
      std::vector<MembershipFunction> r;
      for (const auto& e : row) {
        MembershipFunction mf;
        mf.kind = mf_kind_from_string(e.at("kind").get<std::string>());
        const auto p = e.at("params").get<std::vector<double>>();
        if (p.size() != static_cast<std::size_t>(mf.param_count())) throw FormatError("wrong MF parameter count");
        std::copy(p.begin(), p.end(), mf.params.begin());
        r.push_back(mf);
      }
      m.mfs.push_back(std::move(r));
    }
    m.rule_weights = j.at("rule_weights").get<std::vector<double>>();
    m.consequents = j.at("consequents").get<std::vector<double>>();
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed ANFIS model: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid ANFIS model: ") + e.what());
  }
}

/// Mean normalized firing of each rule over the rows of `reference`.
inline std::vector<double> mean_firing(const AnfisModel& m, const Matrix& reference) {
  const std::size_t R = m.rule_count();
  std::vector<double> mean(R, 0.0), firing(R), x(static_cast<std::size_t>(m.inputs));
  for (Eigen::Index t = 0; t < reference.rows(); ++t) {
    for (int k = 0; k < m.inputs; ++k) x[static_cast<std::size_t>(k)] = reference(t, k);
    normalized_firing(m, x, firing);
    for (std::size_t r = 0; r < R; ++r) mean[r] += firing[r];
  }
  if (reference.rows() > 0)
    for (auto& v : mean) v /= static_cast<double>(reference.rows());
  return mean;
}

/// One line per rule, most active rules first (ties by rule index).
inline std::string rules_report(const AnfisModel& m, const Matrix& reference) {
  m.validate();
  if (reference.rows() > 0 && reference.cols() != m.inputs) throw InvalidArgument("reference set has wrong width");
  const auto fire = mean_firing(m, reference);
  std::vector<std::size_t> order(m.rule_count());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fire[a] > fire[b]; });

  std::string out;
  char buf[64];
  for (std::size_t r : order) {
    std::snprintf(buf, sizeof buf, "R%zu [firing %.4f, weight %.4f] IF ", r + 1, fire[r], m.rule_weights[r]);
    out += buf;
    for (int i = 0; i < m.inputs; ++i) {
      if (i) out += " AND ";
      out += m.input_names.empty() ? "x" + std::to_string(i + 1) : m.input_names[static_cast<std::size_t>(i)];
      out += " is " + m.mfs[static_cast<std::size_t>(i)][static_cast<std::size_t>(m.rule_mf(r, i))].describe();
    }
    out += " THEN";
    for (int c = 0; c < m.classes; ++c) {
      out += (c ? "; class " : " class ") + std::to_string(c + 1) + " =";
      for (int k = 0; k < m.inputs; ++k) {
        std::snprintf(buf, sizeof buf, " %+.4f*x%d", m.consequent(r, c, k), k + 1);
        out += buf;
      }
      std::snprintf(buf, sizeof buf, " %+.4f", m.consequent(r, c, m.inputs));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace mibci
