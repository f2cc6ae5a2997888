#pragma once

// Dyadic crossing scheme for the inner Brownian motion Y: successive hitting
// times of the lattice {j 2^{-n/2}}, the embedded simple random walk, up/down
// crossing counts per cell, the crossing local-time estimator and j*.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fbmbt/gaussian_core.hpp"
#include "fbmbt/rng.hpp"

namespace fbmbt {

enum class WalkMode { kWalkOnly, kPathCoupled };

/// floor(2^n t), the number of walk steps up to horizon t.
inline std::int64_t walk_step_count(int level, double horizon) {
  return static_cast<std::int64_t>(std::floor(std::exp2(static_cast<double>(level)) * horizon + 1e-9));
}

/// Fine Brownian path attached to a path-coupled record.
struct CoupledPath {
  int fine_level = 0;                ///< sampling step 2^{-fine_level}
  std::vector<double> y;             ///< y[i] = Y at time i 2^{-fine_level}, y[0] = 0
  std::vector<double> hitting_times; ///< T_{k,n}, k = 0..N
  double y_at_horizon = 0.0;         ///< Y_t
  std::int64_t bridge_crossings = 0; ///< crossings found by bridge resampling only

  [[nodiscard]] double dt() const { return std::exp2(-static_cast<double>(fine_level)); }
};

/// One realisation of the level-n walk and its crossing statistics.
class CrossingRecord {
 public:
  CrossingRecord(int level, double horizon, std::vector<std::int8_t> steps, WalkMode mode = WalkMode::kWalkOnly,
                 std::optional<CoupledPath> path = std::nullopt)
      : level_(level), horizon_(horizon), mode_(mode), steps_(std::move(steps)), path_(std::move(path)) {
    if (level < 0) throw std::invalid_argument("CrossingRecord: level must be nonnegative");
    if (!(horizon > 0.0)) throw std::invalid_argument("CrossingRecord: horizon must be positive");
    if (static_cast<std::int64_t>(steps_.size()) != walk_step_count(level, horizon)) {
      throw std::invalid_argument("CrossingRecord: step count must equal floor(2^n t)");
    }
    if ((mode_ == WalkMode::kPathCoupled) != path_.has_value()) {
      throw std::invalid_argument("CrossingRecord: coupled path present iff mode is path-coupled");
    }
    positions_.reserve(steps_.size() + 1);
    positions_.push_back(0);
    std::int64_t pos = 0;
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    for (const auto s : steps_) {
      if (s != 1 && s != -1) throw std::invalid_argument("CrossingRecord: steps must be +1 or -1");
      pos += s;
      lo = std::min(lo, pos);
      hi = std::max(hi, pos);
      positions_.push_back(pos);
    }
    min_position_ = lo;
    max_position_ = hi;
    const auto cells = static_cast<std::size_t>(hi - lo);
    up_.assign(cells, 0);
    down_.assign(cells, 0);
    for (std::size_t k = 0; k < steps_.size(); ++k) {
      const std::int64_t from = positions_[k];
      if (steps_[k] > 0) {
        ++up_[static_cast<std::size_t>(from - lo)];
      } else {
        ++down_[static_cast<std::size_t>(from - 1 - lo)];
      }
    }
  }

  [[nodiscard]] int level() const noexcept { return level_; }
  [[nodiscard]] double horizon() const noexcept { return horizon_; }
  [[nodiscard]] WalkMode mode() const noexcept { return mode_; }
  [[nodiscard]] double spacing() const { return grid_spacing(level_); }
  [[nodiscard]] std::int64_t step_count() const noexcept { return static_cast<std::int64_t>(steps_.size()); }
  [[nodiscard]] std::span<const std::int8_t> steps() const noexcept { return steps_; }
  [[nodiscard]] std::span<const std::int64_t> positions() const noexcept { return positions_; }
  [[nodiscard]] std::int64_t j_star() const noexcept { return positions_.back(); }
  /// Y at the last stopping time, j* 2^{-n/2}.
  [[nodiscard]] double y_end() const { return static_cast<double>(j_star()) * spacing(); }
  [[nodiscard]] std::int64_t min_position() const noexcept { return min_position_; }
  [[nodiscard]] std::int64_t max_position() const noexcept { return max_position_; }
  /// Largest |position| visited; the fBm grid must cover it.
  [[nodiscard]] std::int64_t max_abs_position() const noexcept { return std::max(-min_position_, max_position_); }

  /// Cells are [j h, (j+1) h] for j in [first_cell, end_cell).
  [[nodiscard]] std::int64_t first_cell() const noexcept { return min_position_; }
  [[nodiscard]] std::int64_t end_cell() const noexcept { return max_position_; }

  [[nodiscard]] std::int64_t up(std::int64_t j) const noexcept { return cell(up_, j); }
  [[nodiscard]] std::int64_t down(std::int64_t j) const noexcept { return cell(down_, j); }

  [[nodiscard]] const std::optional<CoupledPath>& coupled() const noexcept { return path_; }

 private:
  [[nodiscard]] std::int64_t cell(const std::vector<std::int64_t>& v, std::int64_t j) const noexcept {
    if (j < min_position_ || j >= max_position_) return 0;
    return v[static_cast<std::size_t>(j - min_position_)];
  }

  int level_;
  double horizon_;
  WalkMode mode_;
  std::vector<std::int8_t> steps_;
  std::vector<std::int64_t> positions_;
  std::int64_t min_position_ = 0;
  std::int64_t max_position_ = 0;
  std::vector<std::int64_t> up_;
  std::vector<std::int64_t> down_;
  std::optional<CoupledPath> path_;
};

/// Simple symmetric walk with floor(2^n t) iid +-1 steps, drawn 64 at a time.
inline CrossingRecord simulate_walk(int level, double horizon, Engine& rng) {
  const std::int64_t n = walk_step_count(level, horizon);
  if (n < 1) throw std::invalid_argument("simulate_walk: floor(2^n t) must be at least 1");
  std::vector<std::int8_t> steps(static_cast<std::size_t>(n));
  std::uint64_t bits = 0;
  int left = 0;
  for (auto& s : steps) {
    if (left == 0) {
      bits = rng();
      left = 64;
    }
    s = (bits & 1U) ? std::int8_t{1} : std::int8_t{-1};
    bits >>= 1U;
    --left;
  }
  return CrossingRecord(level, horizon, std::move(steps));
}

struct CoupledOptions {
  /// Extra dyadic levels of the fine Brownian grid over the walk level.
  int oversample = 6;
  /// Resample unseen level crossings between fine points from the Brownian bridge.
  bool bridge_resampling = true;
};

/// Brownian path on the grid 2^{-m}, m = n + oversample, with hitting times of
/// the level-n lattice detected on the fine path. Runs until floor(2^n t)
/// crossings are seen and the horizon t is passed.
inline CrossingRecord simulate_coupled(int level, double horizon, Engine& rng, const CoupledOptions& opts = {}) {
  if (opts.oversample < 6) throw std::invalid_argument("simulate_coupled: oversample must be at least 6");
  const std::int64_t n = walk_step_count(level, horizon);
  if (n < 1) throw std::invalid_argument("simulate_coupled: floor(2^n t) must be at least 1");
  CoupledPath path;
  path.fine_level = level + opts.oversample;
  const double dt = path.dt();
  const double sd = std::sqrt(dt);
  const double h = grid_spacing(level);
  const auto horizon_index = static_cast<std::int64_t>(std::llround(horizon / dt));
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<std::int8_t> steps;
  steps.reserve(static_cast<std::size_t>(n));
  path.hitting_times.push_back(0.0);
  path.y.reserve(static_cast<std::size_t>(horizon_index + 2));
  path.y.push_back(0.0);
  std::int64_t pos = 0;
  double y = 0.0;
  std::int64_t i = 0;
  auto record_step = [&](int dir, double time) {
    if (static_cast<std::int64_t>(steps.size()) < n) {
      const double prev = path.hitting_times.back();
      steps.push_back(static_cast<std::int8_t>(dir));
      path.hitting_times.push_back(time > prev ? time : std::nextafter(prev, INFINITY));
    }
    pos += dir;
  };
  while (static_cast<std::int64_t>(steps.size()) < n || i < horizon_index) {
    const double y_next = y + sd * gauss(rng);
    const double t_end = static_cast<double>(i + 1) * dt;
    double t_ref = static_cast<double>(i) * dt;
    double ref = y;
    bool bridge_used = false;
    // Several crossings inside one fine step are placed in increasing order
    // on [t_ref, t_end], t_ref advancing to each crossing time.
    auto at = [&](double frac) { return t_ref + std::clamp(frac, 0.0, 1.0) * (t_end - t_ref); };
    while (true) {
      const double upper = static_cast<double>(pos + 1) * h;
      const double lower = static_cast<double>(pos - 1) * h;
      if (y_next >= upper) {
        t_ref = at((upper - ref) / (y_next - ref));
        record_step(+1, t_ref);
        ref = upper;
        continue;
      }
      if (y_next <= lower) {
        t_ref = at((ref - lower) / (ref - y_next));
        record_step(-1, t_ref);
        ref = lower;
        continue;
      }
      if (opts.bridge_resampling && !bridge_used) {
        bridge_used = true;
        const double p_up = std::exp(-2.0 * (upper - ref) * (upper - y_next) / dt);
        const double p_down = std::exp(-2.0 * (ref - lower) * (y_next - lower) / dt);
        const double u = unif(rng);
        if (u < p_up) {
          t_ref = at(0.5);
          record_step(+1, t_ref);
          ++path.bridge_crossings;
          ref = upper;
          continue;
        }
        if (u < p_up + p_down) {
          t_ref = at(0.5);
          record_step(-1, t_ref);
          ++path.bridge_crossings;
          ref = lower;
          continue;
        }
      }
      break;
    }
    y = y_next;
    path.y.push_back(y);
    ++i;
  }
  path.y_at_horizon = path.y[static_cast<std::size_t>(horizon_index)];
  return CrossingRecord(level, horizon, std::move(steps), WalkMode::kPathCoupled, std::move(path));
}

/// U_{j,n}(t) - D_{j,n}(t) predicted from j* alone.
inline std::int64_t predicted_net_crossings(std::int64_t j_star, std::int64_t j) {
  if (j_star > 0) return (j >= 0 && j < j_star) ? 1 : 0;
  if (j_star < 0) return (j >= j_star && j < 0) ? -1 : 0;
  return 0;
}

/// Checks the U-D identity, sum(U+D) = floor(2^n t), and the step/position
/// consistency in exact integer arithmetic.
inline bool crossing_identities_hold(const CrossingRecord& rec) {
  std::int64_t total = 0;
  for (std::int64_t j = rec.first_cell(); j < rec.end_cell(); ++j) {
    const std::int64_t u = rec.up(j);
    const std::int64_t d = rec.down(j);
    if (u - d != predicted_net_crossings(rec.j_star(), j)) return false;
    total += u + d;
  }
  if (total != rec.step_count()) return false;
  const auto pos = rec.positions();
  const auto steps = rec.steps();
  if (pos.front() != 0) return false;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (pos[k + 1] - pos[k] != steps[k]) return false;
  }
  if (const auto& cp = rec.coupled()) {
    const auto& ts = cp->hitting_times;
    if (ts.empty() || ts.front() != 0.0) return false;
    for (std::size_t k = 1; k < ts.size(); ++k) {
      if (!(ts[k] > ts[k - 1])) return false;
    }
  }
  return true;
}

/// L_{j,n}(t) = 2^{-n/2} (U_{j,n}(t) + D_{j,n}(t)) per cell j.
class LocalTimeEstimate {
 public:
  LocalTimeEstimate(int level, double horizon, std::int64_t first_cell, std::vector<double> values)
      : level_(level), horizon_(horizon), first_cell_(first_cell), values_(std::move(values)) {
    for (double v : values_) {
      if (!(v >= 0.0)) throw std::invalid_argument("LocalTimeEstimate: values must be nonnegative");
    }
  }
  [[nodiscard]] int level() const noexcept { return level_; }
  [[nodiscard]] double horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::int64_t first_cell() const noexcept { return first_cell_; }
  [[nodiscard]] std::int64_t end_cell() const noexcept {
    return first_cell_ + static_cast<std::int64_t>(values_.size());
  }
  [[nodiscard]] double value(std::int64_t j) const noexcept {
    if (j < first_cell_ || j >= end_cell()) return 0.0;
    return values_[static_cast<std::size_t>(j - first_cell_)];
  }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] double total_mass() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
  }

 private:
  int level_;
  double horizon_;
  std::int64_t first_cell_;
  std::vector<double> values_;
};

inline LocalTimeEstimate local_time_estimate(const CrossingRecord& rec) {
  const double h = rec.spacing();
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(rec.end_cell() - rec.first_cell()));
  for (std::int64_t j = rec.first_cell(); j < rec.end_cell(); ++j) {
    v.push_back(h * static_cast<double>(rec.up(j) + rec.down(j)));
  }
  return LocalTimeEstimate(rec.level(), rec.horizon(), rec.first_cell(), std::move(v));
}

/// Default occupation-kernel bandwidth for the fine path, 4 * 2^{-m/2}.
inline double default_occupation_bandwidth(const CoupledPath& path) {
  return 4.0 * std::exp2(-0.5 * static_cast<double>(path.fine_level));
}

/// Box-kernel occupation density of the fine path at levels x0 + k dx,
/// k = 0..count-1, over the time window [0, t]. Test oracle for local time.
inline std::vector<double> occupation_local_time(const CoupledPath& path, double t, double x0, double dx,
                                                 std::size_t count, double bandwidth) {
  if (!(bandwidth > 0.0) || !(dx > 0.0)) throw std::invalid_argument("occupation_local_time: bad bandwidth/dx");
  std::vector<double> out(count, 0.0);
  const double dt = path.dt();
  const auto last = std::min<std::size_t>(path.y.size() - 1, static_cast<std::size_t>(std::llround(t / dt)));
  const double weight = dt / (2.0 * bandwidth);
  for (std::size_t i = 0; i < last; ++i) {
    const double y = path.y[i];
    const auto k_lo = static_cast<std::int64_t>(std::ceil((y - bandwidth - x0) / dx));
    const auto k_hi = static_cast<std::int64_t>(std::floor((y + bandwidth - x0) / dx));
    for (std::int64_t k = std::max<std::int64_t>(k_lo, 0); k <= k_hi && k < static_cast<std::int64_t>(count); ++k) {
      const double x = x0 + static_cast<double>(k) * dx;
      if (std::abs(y - x) < bandwidth) out[static_cast<std::size_t>(k)] += weight;
    }
  }
  return out;
}

/// Single-level convenience form of occupation_local_time.
inline double occupation_local_time_at(const CoupledPath& path, double t, double x, double bandwidth) {
  return occupation_local_time(path, t, x, 1.0, 1, bandwidth).front();
}

struct MomentEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t replications = 0;
};

/// j* of a fresh walk from popcounts of random words; same law as simulate_walk.
inline std::int64_t sample_walk_endpoint(int level, double horizon, Engine& rng) {
  std::int64_t remaining = walk_step_count(level, horizon);
  std::int64_t ups = 0;
  const std::int64_t total = remaining;
  while (remaining >= 64) {
    ups += std::popcount(rng());
    remaining -= 64;
  }
  if (remaining > 0) {
    const std::uint64_t mask = (std::uint64_t{1} << remaining) - 1;
    ups += std::popcount(rng() & mask);
  }
  return 2 * ups - total;
}

/// Monte Carlo estimate of E[(Y_{T_{floor(2^n t),n}})^{order}] with its standard error.
inline MomentEstimate walk_moment(int level, double horizon, int order, std::int64_t reps, Engine& rng) {
  if (reps < 100) throw std::invalid_argument("walk_moment: need at least 100 replications");
  if (order < 1) throw std::invalid_argument("walk_moment: order must be positive");
  if (walk_step_count(level, horizon) < 1) throw std::invalid_argument("walk_moment: floor(2^n t) must be >= 1");
  const double h = grid_spacing(level);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::int64_t r = 0; r < reps; ++r) {
    const double y = static_cast<double>(sample_walk_endpoint(level, horizon, rng)) * h;
    const double v = std::pow(y, order);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(reps);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return MomentEstimate{mean, std::sqrt(var / n), reps};
}

}  // namespace fbmbt
