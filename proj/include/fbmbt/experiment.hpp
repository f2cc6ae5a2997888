#pragma once

// Monte Carlo harness: configuration, per-replication pipelines for each
// theorem part, and aggregation into per-level summaries.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fbmbt/crossing_scheme.hpp"
#include "fbmbt/errors.hpp"
#include "fbmbt/gaussian_core.hpp"
#include "fbmbt/hermite_constants.hpp"
#include "fbmbt/limit_oracles.hpp"
#include "fbmbt/log.hpp"
#include "fbmbt/oracle_values.hpp"
#include "fbmbt/parallel.hpp"
#include "fbmbt/rng.hpp"
#include "fbmbt/statistics.hpp"
#include "fbmbt/variation_stats.hpp"

namespace fbmbt {

enum class TheoremPart { kP1, kP1Critical, kP2, kP3, kP4, kIdentities, kConstants };
enum class OutputFormat { kCsv, kJson };

inline std::string_view part_name(TheoremPart p) {
  switch (p) {
    case TheoremPart::kP1: return "p1";
    case TheoremPart::kP1Critical: return "p1c";
    case TheoremPart::kP2: return "p2";
    case TheoremPart::kP3: return "p3";
    case TheoremPart::kP4: return "p4";
    case TheoremPart::kIdentities: return "identities";
    case TheoremPart::kConstants: return "constants";
  }
  return "?";
}

inline TheoremPart parse_part(std::string_view s) {
  for (auto p : {TheoremPart::kP1, TheoremPart::kP1Critical, TheoremPart::kP2, TheoremPart::kP3, TheoremPart::kP4,
                 TheoremPart::kIdentities, TheoremPart::kConstants}) {
    if (part_name(p) == s) return p;
  }
  throw ConfigError("unknown theorem part '" + std::string(s) + "' (p1|p1c|p2|p3|p4|identities|constants)");
}

inline std::string_view mode_name(WalkMode m) { return m == WalkMode::kWalkOnly ? "walk" : "coupled"; }

inline WalkMode parse_mode(std::string_view s) {
  if (s == "walk") return WalkMode::kWalkOnly;
  if (s == "coupled") return WalkMode::kPathCoupled;
  throw ConfigError("unknown mode '" + std::string(s) + "' (walk|coupled)");
}

inline std::string_view format_name(OutputFormat f) { return f == OutputFormat::kCsv ? "csv" : "json"; }

inline OutputFormat parse_format(std::string_view s) {
  if (s == "csv") return OutputFormat::kCsv;
  if (s == "json") return OutputFormat::kJson;
  throw ConfigError("unknown format '" + std::string(s) + "' (csv|json)");
}

/// Relative tolerance for the exact identities.
inline constexpr double kIdentityTolerance = 1e-9;
/// Relative band around Monte Carlo variance targets.
inline constexpr double kVarianceTolerance = 0.15;
/// Reported KS threshold; never a hard failure.
inline constexpr double kKsReportThreshold = 0.01;
/// Span doublings allowed per replication before giving up.
inline constexpr int kMaxSpanRetries = 5;

struct ExperimentConfig {
  TheoremPart part = TheoremPart::kP1;
  double hurst = 0.35;
  int r = 1;
  std::string weight = "one";
  double horizon = 1.0;
  std::vector<int> levels{8, 10, 12, 14, 16};
  std::size_t replications = 500;
  std::uint64_t master_seed = 20240601;
  WalkMode mode = WalkMode::kWalkOnly;
  double span_multiplier = 6.0;
  std::filesystem::path output_dir;
  OutputFormat format = OutputFormat::kCsv;
  unsigned threads = 0;  ///< 0: FBMBT_THREADS or hardware

  [[nodiscard]] double span() const { return span_multiplier * std::sqrt(horizon); }

  /// Throws ConfigError naming the violated hypothesis.
  void validate() const {
    auto fail = [&](const std::string& what) {
      std::ostringstream os;
      os << what << " (got H = " << hurst << ", r = " << r << ")";
      throw ConfigError(os.str());
    };
    if (!(hurst > 0.0 && hurst < 1.0)) fail("Hurst index must lie in (0, 1)");
    if (r < 1) fail("r must be a positive integer");
    if (!(horizon > 0.0)) throw ConfigError("horizon t must be positive");
    if (!(span_multiplier >= 4.0)) throw ConfigError("span multiplier must be at least 4");
    if (part != TheoremPart::kConstants) {
      if (levels.empty()) throw ConfigError("at least one level n is required");
      for (int n : levels) {
        if (n < 1 || n > 26) throw ConfigError("level n must lie in [1, 26]");
        if (walk_step_count(n, horizon) < 1) throw ConfigError("floor(2^n t) must be at least 1 at every level");
      }
      if (replications < kMinReplications) throw ConfigError("at least 30 replications per level are required");
      (void)weight_by_name(weight);
    }
    constexpr double sixth = 1.0 / 6.0;
    switch (part) {
      case TheoremPart::kP1:
        if (!(hurst > sixth)) fail("theorem part (1) requires H > 1/6");
        break;
      case TheoremPart::kP1Critical:
        if (std::abs(hurst - sixth) > 1e-9) fail("theorem part (1), critical case, requires H = 1/6");
        break;
      case TheoremPart::kP2:
        if (!(hurst > sixth && hurst < 0.5) || r < 2) fail("theorem part (2) requires 1/6 < H < 1/2 and r >= 2");
        break;
      case TheoremPart::kP3:
        if (!(hurst > 0.5)) fail("theorem part (3) requires H > 1/2");
        break;
      case TheoremPart::kP4:
        if (!(hurst > 0.25 && hurst <= 0.5)) fail("theorem part (4) requires 1/4 < H <= 1/2");
        break;
      case TheoremPart::kIdentities:
      case TheoremPart::kConstants:
        break;
    }
  }
};

struct ReplicationValue {
  int level = 0;
  std::size_t rep = 0;
  double value = 0.0;
  std::optional<double> oracle;               ///< limit realisation on the same (X, Y), P1/P3
  std::optional<double> conditional_variance; ///< of the limit given (X, Y), P2/P4
  int span_retries = 0;
};

struct LevelSummary {
  int level = 0;
  ColumnSummary stats;
  std::optional<double> target;
  std::string target_provenance;
  std::optional<double> mse;
  std::optional<double> correlation;
  std::optional<double> max_value;
  double gap = 0.0;  ///< distance to the limit prediction, compared across levels
  std::optional<bool> within_tolerance;
  int span_retries = 0;
};

struct ConstantRow {
  std::string name;
  int index = 0;
  std::optional<double> value;
  std::string status;  ///< empty when value is present, else "diverges" or "unconverged"
  bool operator==(const ConstantRow&) const = default;
};

struct EnsembleResult {
  ExperimentConfig config;
  std::vector<ReplicationValue> values;
  std::vector<LevelSummary> summary;
  std::vector<ConstantRow> constants;
  bool passed = false;
  std::string verdict;
  double runtime_seconds = 0.0;
  unsigned threads = 1;
};

inline std::vector<ConstantRow> constant_table(Hurst hurst, int r) {
  const auto c = make_limit_constants(hurst, r);
  std::vector<ConstantRow> rows;
  for (std::size_t p = 0; p < c.mu.size(); ++p) rows.push_back({"mu", static_cast<int>(p), c.mu[p]});
  for (std::size_t i = 0; i < c.kappa.size(); ++i) rows.push_back({"kappa", static_cast<int>(i + 1), c.kappa[i]});
  for (std::size_t a = 0; a < c.b.size(); ++a) rows.push_back({"b", static_cast<int>(a + 1), c.b[a]});
  for (std::size_t m = 0; m < c.alpha.size(); ++m) {
    rows.push_back({"alpha", static_cast<int>(m + 1), c.alpha[m], status_name(c.alpha_status[m])});
  }
  if (r >= 2) rows.push_back({"beta", 2 * r - 1, c.beta_odd, status_name(c.beta_status)});
  rows.push_back({"gamma", 2 * r, c.gamma_even, status_name(c.gamma_status)});
  return rows;
}

namespace detail {

/// Statistic order and normalising exponent a so that the reported value is
/// 2^{-a n} V_n^{(order)}.
struct Pipeline {
  int order = 1;
  double exponent = 0.0;
};

inline Pipeline pipeline_for(const ExperimentConfig& c) {
  switch (c.part) {
    case TheoremPart::kP1:
    case TheoremPart::kP1Critical: return {1, c.hurst / 2.0};
    case TheoremPart::kP2: return {2 * c.r - 1, 0.25};
    case TheoremPart::kP3: return {2 * c.r - 1, c.hurst / 2.0};
    case TheoremPart::kP4: return {2 * c.r, 0.75};
    default: return {c.r, 0.0};
  }
}

/// fBm generators per level, with larger-span variants built on demand.
class GeneratorCache {
 public:
  GeneratorCache(Hurst hurst, int level, double span) : hurst_(hurst), level_(level), base_span_(span) {
    gens_.push_back(std::make_unique<FbmGenerator>(hurst, level, span));
  }

  const FbmGenerator& get(int doublings) {
    std::lock_guard lock(mutex_);
    while (static_cast<int>(gens_.size()) <= doublings) {
      const double span = base_span_ * std::exp2(static_cast<double>(gens_.size()));
      gens_.push_back(std::make_unique<FbmGenerator>(hurst_, level_, span));
    }
    return *gens_[static_cast<std::size_t>(doublings)];
  }

 private:
  Hurst hurst_;
  int level_;
  double base_span_;
  std::mutex mutex_;
  std::vector<std::unique_ptr<FbmGenerator>> gens_;
};

inline CrossingRecord simulate_record(const ExperimentConfig& c, int level, std::size_t rep) {
  Engine rng = make_engine({c.master_seed, StreamDomain::kInnerWalk, static_cast<std::uint64_t>(level), rep, 0});
  return c.mode == WalkMode::kWalkOnly ? simulate_walk(level, c.horizon, rng) : simulate_coupled(level, c.horizon, rng);
}

inline ReplicationValue run_replication(const ExperimentConfig& c, GeneratorCache& cache, int level, std::size_t rep,
                                        const WeightFunction& f, const Pipeline& pipe) {
  const Hurst hurst(c.hurst);
  const CrossingRecord rec = simulate_record(c, level, rep);
  if (!crossing_identities_hold(rec)) {
    std::ostringstream os;
    os << "crossing-count identities violated at n = " << level << ", rep = " << rep;
    throw std::logic_error(os.str());
  }
  // Walk first, then an fBm span that covers it; X is independent of Y.
  const double need = static_cast<double>(rec.max_abs_position()) * rec.spacing();
  int doublings = 0;
  while (need > c.span() * std::exp2(doublings) - 1e-12) {
    if (++doublings > kMaxSpanRetries) {
      std::ostringstream os;
      os << "span regeneration cap exceeded at n = " << level << ", rep = " << rep << " (walk reaches " << need << ")";
      throw SpanExceeded(os.str());
    }
  }
  if (doublings > 0) {
    std::ostringstream os;
    os << "n = " << level << ", rep = " << rep << ": fBm span doubled " << doublings << " time(s)";
    log_warning(os.str());
  }
  Engine xrng = make_engine({c.master_seed, StreamDomain::kOuterFbm, static_cast<std::uint64_t>(level), rep, 0});
  const FbmGrid x = cache.get(doublings).sample(xrng);
  Engine wrng = make_engine({c.master_seed, StreamDomain::kAuxBrownian, static_cast<std::uint64_t>(level), rep, 0});

  ReplicationValue out;
  out.level = level;
  out.rep = rep;
  out.span_retries = doublings;
  const double norm = std::exp2(-pipe.exponent * level);
  switch (c.part) {
    case TheoremPart::kP1:
    case TheoremPart::kP1Critical:
      out.value = norm * v_statistic(x, rec, f, 1);
      out.oracle = stratonovich_endpoint(f, x, rec.y_end());
      break;
    case TheoremPart::kP3:
      out.value = norm * v_statistic(x, rec, f, pipe.order);
      out.oracle = gaussian_moment(2 * c.r) * stratonovich_endpoint(f, x, rec.y_end());
      break;
    case TheoremPart::kP2:
      out.value = norm * v_statistic(x, rec, f, pipe.order);
      out.conditional_variance = wiener_ito_integral(f, x, rec.y_end(), wrng).conditional_variance;
      break;
    case TheoremPart::kP4:
      out.value = norm * v_statistic(x, rec, f, pipe.order);
      out.conditional_variance = local_time_weighted_integral(f, x, local_time_estimate(rec), wrng).conditional_variance;
      break;
    case TheoremPart::kIdentities: {
      double worst = 0.0;
      for (int q = 1; q <= c.r; ++q) {
        worst = std::max(worst, separation_identity_check(x, rec, f, q).relative());
        worst = std::max(worst, transform_identity_check(x, rec, f, q).relative());
      }
      out.value = worst;
      break;
    }
    case TheoremPart::kConstants:
      break;
  }
  return out;
}

inline LevelSummary summarise_level(const ExperimentConfig& c, int level, std::span<const ReplicationValue> reps,
                                    const std::optional<LimitConstants>& consts) {
  LevelSummary s;
  s.level = level;
  std::vector<double> v;
  v.reserve(reps.size());
  for (const auto& r : reps) {
    v.push_back(r.value);
    s.span_retries += r.span_retries;
  }
  const bool gaussian_limit = c.part == TheoremPart::kP2 || c.part == TheoremPart::kP4;
  s.stats = aggregate(v, gaussian_limit);
  switch (c.part) {
    case TheoremPart::kP1:
    case TheoremPart::kP1Critical:
    case TheoremPart::kP3: {
      std::vector<double> o;
      for (const auto& r : reps) o.push_back(*r.oracle);
      s.mse = mse_of(v, o);
      s.correlation = correlation_of(v, o);
      s.target = 0.0;
      s.target_provenance = c.part == TheoremPart::kP3 ? "mean square distance to mu_{2r} (F(Z_end) - F(0))"
                                                       : "mean square distance to F(Z_end) - F(0)";
      s.gap = c.part == TheoremPart::kP1Critical ? s.stats.variance : *s.mse;
      break;
    }
    case TheoremPart::kP2:
    case TheoremPart::kP4: {
      std::vector<double> cv;
      for (const auto& r : reps) cv.push_back(*r.conditional_variance);
      const double scale = c.part == TheoremPart::kP2 ? *consts->beta_odd : *consts->gamma_even;
      if (c.part == TheoremPart::kP4 && c.weight == "one") {
        s.target = scale * scale * oracle::kLocalTimeSquareIntegral *
                   std::pow(c.horizon, oracle::kLocalTimeSquareExponent);
        s.target_provenance = "gamma^2 x frozen path-coupled oracle for E int (L_t^s)^2 ds";
      } else {
        s.target = scale * scale * mean_of(cv);
        s.target_provenance = c.part == TheoremPart::kP2
                                  ? "beta^2 x ensemble mean of int_0^{Y_end} f(X_s)^2 ds"
                                  : "gamma^2 x ensemble mean of sum f(X_j)^2 L_j^2 h";
      }
      s.gap = std::abs(s.stats.variance / *s.target - 1.0);
      s.within_tolerance = s.gap <= kVarianceTolerance;
      break;
    }
    case TheoremPart::kIdentities: {
      s.max_value = *std::max_element(v.begin(), v.end());
      s.target = 0.0;
      s.target_provenance = "exact identity";
      s.gap = *s.max_value;
      s.within_tolerance = s.gap <= kIdentityTolerance;
      break;
    }
    case TheoremPart::kConstants:
      break;
  }
  return s;
}

inline void judge(EnsembleResult& res) {
  const auto& c = res.config;
  std::ostringstream os;
  if (c.part == TheoremPart::kConstants) {
    res.passed = true;
    res.verdict = "constants table emitted";
    return;
  }
  const auto& first = res.summary.front();
  const auto& last = res.summary.back();
  if (c.part == TheoremPart::kIdentities) {
    double worst = 0.0;
    for (const auto& s : res.summary) worst = std::max(worst, s.gap);
    res.passed = worst <= kIdentityTolerance;
    os << "max relative identity discrepancy " << worst << (res.passed ? " <= " : " > ") << kIdentityTolerance;
  } else if (c.part == TheoremPart::kP1Critical) {
    // Convergence in law only: the fluctuation must persist.
    res.passed = last.stats.variance > 0.25 * first.stats.variance && last.stats.variance > 0.0;
    os << "variance at n = " << last.level << " is " << last.stats.variance << " vs " << first.stats.variance
       << " at n = " << first.level << (res.passed ? " (non-vanishing)" : " (vanishing)");
  } else {
    res.passed = res.summary.size() == 1 || last.gap <= first.gap;
    os << "gap " << last.gap << " at n = " << last.level << " vs " << first.gap << " at n = " << first.level
       << (res.passed ? " (no divergence trend)" : " (gap grows with n)");
  }
  res.verdict = os.str();
}

}  // namespace detail

/// Runs every level of the configured pipeline. Values are a pure function of
/// (config, master_seed); the thread count only affects wall time.
inline EnsembleResult run(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  EnsembleResult res;
  res.config = config;
  res.threads = resolve_thread_count(config.threads);
  const Hurst hurst(config.hurst);
  if (config.part == TheoremPart::kConstants) {
    res.constants = constant_table(hurst, config.r);
    detail::judge(res);
    return res;
  }
  std::optional<LimitConstants> consts;
  if (config.part == TheoremPart::kP2 || config.part == TheoremPart::kP4) {
    consts = make_limit_constants(hurst, config.r);
    const bool ok = config.part == TheoremPart::kP2 ? consts->beta_odd.has_value() : consts->gamma_even.has_value();
    if (!ok) throw ConfigError("limit variance constant diverges for this (H, r)");
  }
  const WeightFunction f = weight_by_name(config.weight);
  const detail::Pipeline pipe = detail::pipeline_for(config);
  for (int level : config.levels) {
    detail::GeneratorCache cache(hurst, level, config.span());
    auto reps = parallel_map(
        config.replications,
        [&](std::size_t rep) { return detail::run_replication(config, cache, level, rep, f, pipe); }, res.threads);
    res.summary.push_back(detail::summarise_level(config, level, reps, consts));
    res.values.insert(res.values.end(), reps.begin(), reps.end());
  }
  detail::judge(res);
  res.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace fbmbt
