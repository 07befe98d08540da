#pragma once

// Segmentation and recombination: synthetic trials stitched together from
// same-class donors, one donor per temporal slot.

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mibci/error.hpp"
#include "mibci/rng.hpp"
#include "mibci/signal.hpp"

namespace mibci {

struct SrConfig {
  int segments = 4;
  double multiplier = 1.0;
  std::uint64_t seed = 0;
};

struct SegmentSource {
  std::size_t donor = 0;  // index into the donor list
  int segment = 0;
};

struct SyntheticTrial {
  Signal data;
  int label = 0;
  std::vector<SegmentSource> provenance;  // slot k came from provenance[k]
};

/// K contiguous half-open ranges covering [0, samples); the first samples % K
/// segments are one sample longer.
inline std::vector<std::pair<std::size_t, std::size_t>> segment_bounds(std::size_t samples, int segments) {
  if (segments < 1) throw InvalidArgument("segment count must be >= 1");
  const auto K = static_cast<std::size_t>(segments);
  if (K > samples) throw InvalidArgument("more segments than samples");
  const std::size_t base = samples / K, extra = samples % K;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t len = base + (k < extra ? 1 : 0);
    out.emplace_back(start, start + len);
    start += len;
  }
  return out;
}

/// floor(multiplier * M) synthetic trials from the M donors of one class.
/// Slot k of each synthetic trial is copied from a donor drawn uniformly with
/// replacement from Rng(derive_seed(seed, {label})), in trial-then-slot order.
inline std::vector<SyntheticTrial> sr_augment(std::span<const Signal* const> donors, int label, const SrConfig& cfg) {
  if (donors.empty()) throw InvalidArgument("augmentation needs at least one donor trial");
  if (!std::isfinite(cfg.multiplier) || cfg.multiplier < 0.0) throw InvalidArgument("multiplier must be finite and >= 0");
  const Eigen::Index ch = donors.front()->rows(), n = donors.front()->cols();
  for (const Signal* d : donors)
    if (d->rows() != ch || d->cols() != n) throw InvalidArgument("donor trials differ in shape");
  const auto bounds = segment_bounds(static_cast<std::size_t>(n), cfg.segments);
  const auto count = static_cast<std::size_t>(std::floor(cfg.multiplier * static_cast<double>(donors.size())));

  Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(label)}));
  std::vector<SyntheticTrial> out(count);
  for (auto& syn : out) {
    syn.label = label;
    syn.data.resize(ch, n);
    for (std::size_t k = 0; k < bounds.size(); ++k) {
      const std::size_t donor = rng.below(donors.size());
      const auto [a, b] = bounds[k];
      const auto len = static_cast<Eigen::Index>(b - a);
      syn.data.middleCols(static_cast<Eigen::Index>(a), len) =
          donors[donor]->middleCols(static_cast<Eigen::Index>(a), len);
      syn.provenance.push_back({donor, static_cast<int>(k)});
    }
  }
  return out;
}

/// [{"label": l, "slots": [[donor, segment], ...]}, ...] for audits.
inline nlohmann::json provenance_json(std::span<const SyntheticTrial> trials) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : trials) {
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : t.provenance) slots.push_back({s.donor, s.segment});
    out.push_back({{"label", t.label}, {"slots", std::move(slots)}});
  }
  return out;
}

}  // namespace mibci
