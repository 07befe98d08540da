#pragma once

// Global-best particle swarm with linearly decaying inertia, per-dimension
// velocity clamping and reflective bounds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mibci/error.hpp"
#include "mibci/parallel.hpp"
#include "mibci/rng.hpp"

namespace mibci {

struct PsoConfig {
  int particles = 40;
  int iterations = 75;
  double c1 = 1.7;
  double c2 = 1.7;
  double inertia_start = 0.9;
  double inertia_end = 0.7;  // equal to inertia_start for a constant weight
  double velocity_clamp = 0.2;  // fraction of the box width per dimension
  std::uint64_t seed = 0;
  bool maximize = true;
  int jobs = 1;

  void validate() const {
    if (particles < 1 || iterations < 0) throw InvalidArgument("PSO needs particles >= 1 and iterations >= 0");
    for (double v : {c1, c2, inertia_start, inertia_end})
      if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("PSO coefficients must be finite and non-negative");
    if (!(velocity_clamp > 0.0) || !std::isfinite(velocity_clamp)) throw InvalidArgument("velocity clamp must be > 0");
  }

  double inertia(int iteration) const {
    if (iterations <= 1) return inertia_start;
    const double f = static_cast<double>(iteration - 1) / static_cast<double>(iterations - 1);
    return inertia_start + (inertia_end - inertia_start) * f;
  }
};

struct Bounds {
  std::vector<double> lo, hi;

  std::size_t dims() const { return lo.size(); }

  void validate() const {
    if (lo.size() != hi.size()) throw InvalidArgument("bounds have mismatched lengths");
    if (lo.empty()) throw InvalidArgument("search space has no dimensions");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(lo[i] < hi[i]))
        throw InvalidArgument("invalid bounds in dimension " + std::to_string(i));
  }

  bool contains(std::span<const double> x) const {
    if (x.size() != dims()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
    return true;
  }
};

struct SwarmState {
  int iteration = 0;
  std::vector<std::vector<double>> positions, velocities, pbest;
  std::vector<double> fitness, pbest_fitness;
  std::vector<double> gbest;
  double gbest_fitness = -std::numeric_limits<double>::infinity();
  std::size_t gbest_index = 0;
};

struct PsoHistoryEntry {
  int iteration = 0;
  double gbest = 0.0;
  double mean = 0.0;  // over finite fitness values of the current positions
};

struct PsoResult {
  std::vector<double> best_position;
  double best_fitness = 0.0;
  std::vector<PsoHistoryEntry> history;
  std::size_t evaluations = 0;
};

using FitnessFn = std::function<double(std::span<const double>)>;
using SwarmObserver = std::function<void(const SwarmState&)>;

namespace detail {

inline double reflect(double x, double& v, double lo, double hi) {
  if (x > hi) {
    x = hi - (x - hi);
    v = -v;
  } else if (x < lo) {
    x = lo + (lo - x);
    v = -v;
  }
  return std::clamp(x, lo, hi);
}

inline std::string format_position(std::span<const double> x) {
  std::ostringstream s;
  s.precision(17);
  s << '[';
  for (std::size_t i = 0; i < x.size(); ++i) s << (i ? ", " : "") << x[i];
  s << ']';
  return s.str();
}

}  // namespace detail

/// Maximizes `fitness` (or minimizes it when config.maximize is false) over the box.
///
/// A fitness of -inf (+inf when minimizing) marks an infeasible position and is
/// kept as the worst possible value. NaN, or an infinity in the improving
/// direction, aborts with the offending position.
///
/// Random draws are sequential in particle then dimension order; only fitness
/// calls run concurrently, and personal/global bests are reduced in particle
/// order with the lowest index winning ties.
inline PsoResult pso_optimize(const PsoConfig& cfg, const Bounds& bounds, const FitnessFn& fitness,
                              std::span<const std::vector<double>> initial = {}, const SwarmObserver& observer = {}) {
  cfg.validate();
  bounds.validate();
  const std::size_t P = static_cast<std::size_t>(cfg.particles);
  const std::size_t D = bounds.dims();
  if (initial.size() > P) throw InvalidArgument("more initial positions than particles");
  const double sign = cfg.maximize ? 1.0 : -1.0;

  std::vector<double> vmax(D);
  for (std::size_t d = 0; d < D; ++d) vmax[d] = cfg.velocity_clamp * (bounds.hi[d] - bounds.lo[d]);

  Rng rng(cfg.seed);
  SwarmState s;
  s.positions.assign(P, std::vector<double>(D));
  s.velocities.assign(P, std::vector<double>(D));
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t d = 0; d < D; ++d) {
      s.positions[p][d] = rng.uniform(bounds.lo[d], bounds.hi[d]);
      s.velocities[p][d] = rng.uniform(-vmax[d], vmax[d]);
    }
  for (std::size_t p = 0; p < initial.size(); ++p) {
    if (initial[p].size() != D) throw InvalidArgument("initial position has wrong dimension");
    for (std::size_t d = 0; d < D; ++d) s.positions[p][d] = std::clamp(initial[p][d], bounds.lo[d], bounds.hi[d]);
  }

  PsoResult res;
  std::vector<double> score(P);
  s.fitness.assign(P, 0.0);
  auto evaluate = [&] {
    parallel_for(P, cfg.jobs, [&](std::size_t p) { s.fitness[p] = fitness(s.positions[p]); });
    res.evaluations += P;
    for (std::size_t p = 0; p < P; ++p) {
      score[p] = sign * s.fitness[p];
      if (std::isnan(score[p]) || score[p] == std::numeric_limits<double>::infinity()) {
        std::ostringstream msg;
        msg << "non-finite fitness " << s.fitness[p] << " at iteration " << s.iteration << ", particle " << p
            << ", position " << detail::format_position(s.positions[p]);
        throw NumericalError(msg.str());
      }
    }
  };
  auto record = [&] {
    double sum = 0.0;
    std::size_t finite = 0;
    for (double f : s.fitness)
      if (std::isfinite(f)) {
        sum += f;
        ++finite;
      }
    const double mean = finite ? sum / static_cast<double>(finite) : -sign * std::numeric_limits<double>::infinity();
    res.history.push_back({s.iteration, s.gbest_fitness, mean});
    if (observer) observer(s);
  };
  auto update_bests = [&](bool first) {
    for (std::size_t p = 0; p < P; ++p)
      if (first || score[p] > sign * s.pbest_fitness[p]) {
        s.pbest[p] = s.positions[p];
        s.pbest_fitness[p] = s.fitness[p];
      }
    std::size_t best = 0;
    for (std::size_t p = 1; p < P; ++p)
      if (sign * s.pbest_fitness[p] > sign * s.pbest_fitness[best]) best = p;
    s.gbest_index = best;
    s.gbest = s.pbest[best];
    s.gbest_fitness = s.pbest_fitness[best];
  };

  evaluate();
  s.pbest.assign(P, {});
  s.pbest_fitness.assign(P, 0.0);
  update_bests(true);
  record();

  for (int it = 1; it <= cfg.iterations; ++it) {
    s.iteration = it;
    const double w = cfg.inertia(it);
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t d = 0; d < D; ++d) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        double& v = s.velocities[p][d];
        double& x = s.positions[p][d];
        v = w * v + cfg.c1 * r1 * (s.pbest[p][d] - x) + cfg.c2 * r2 * (s.gbest[d] - x);
        v = std::clamp(v, -vmax[d], vmax[d]);
        x = detail::reflect(x + v, v, bounds.lo[d], bounds.hi[d]);
      }
    evaluate();
    update_bests(false);
    record();
  }

  res.best_position = s.gbest;
  res.best_fitness = s.gbest_fitness;
  return res;
}

/// One JSON object per line: {"iteration", "gbest", "mean"}; non-finite values become null.
inline void write_history_jsonl(const std::vector<PsoHistoryEntry>& history, std::ostream& out) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  for (const auto& h : history) out << nlohmann::json{{"iteration", h.iteration}, {"gbest", num(h.gbest)}, {"mean", num(h.mean)}}.dump() << '\n';
}

}  // namespace mibci
