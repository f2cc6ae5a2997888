// fbmbt command-line driver.
//   fbmbt constants --hurst H --r R
//   fbmbt verify --part p2 --hurst 0.35 --r 2 ...
//   fbmbt crossings --n 8 --t 1 --seed 7
//   fbmbt variation --hurst 0.35 --r 3 --f cos --n 10 --reps 50
//   fbmbt path --hurst 0.75 --n 8 --span 2
// Exit status: 0 pass, 1 tolerance failure, 2 configuration error, 3 runtime error.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fbmbt/fbmbt.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitTolerance = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::vector<int> parse_levels(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw fbmbt::ConfigError("bad level list '" + s + "'");
    }
  }
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    fbmbt::detail::write_atomically(out_path, text);
  }
}

void print_summary(const fbmbt::EnsembleResult& res) {
  std::printf("%-4s %7s %13s %13s %13s %13s %10s\n", "n", "count", "mean", "var", "target", "mse/gap", "ks_p");
  for (const auto& s : res.summary) {
    const double g = s.mse ? *s.mse : s.gap;
    std::printf("%-4d %7zu %13.6g %13.6g %13.6g %13.6g %10s\n", s.level, s.stats.count, s.stats.mean,
                s.stats.variance, s.target.value_or(0.0), g,
                s.stats.ks ? fbmbt::format_double(s.stats.ks->p_value).substr(0, 8).c_str() : "-");
    if (s.stats.ks && s.stats.ks->p_value < fbmbt::kKsReportThreshold) {
      std::printf("     note: KS p-value below %.2g at n = %d (reported only)\n", fbmbt::kKsReportThreshold, s.level);
    }
  }
  std::printf("%s: %s (%.2fs, %u threads)\n", res.passed ? "PASS" : "FAIL", res.verdict.c_str(), res.runtime_seconds,
              res.threads);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo checks for weighted power variations of fBm in Brownian time"};
  app.require_subcommand(1);

  // constants
  double c_hurst = 0.35;
  int c_r = 2;
  std::string c_format = "text";
  auto* constants = app.add_subcommand("constants", "Hermite coefficients and limit-variance constants");
  constants->add_option("--hurst", c_hurst, "Hurst index")->required();
  constants->add_option("--r", c_r, "order r")->required();
  constants->add_option("--format", c_format, "text|csv")->check(CLI::IsMember({"text", "csv"}));

  // verify
  fbmbt::ExperimentConfig cfg;
  std::string v_part = "p1";
  std::string v_levels = "8,10,12,14,16";
  std::string v_mode = "walk";
  std::string v_format = "csv";
  std::string v_out;
  bool reps_given = false;
  auto* verify = app.add_subcommand("verify", "Run a theorem-part experiment");
  verify->add_option("--part", v_part, "p1|p1c|p2|p3|p4|identities|constants")->required();
  verify->add_option("--hurst", cfg.hurst, "Hurst index")->required();
  verify->add_option("--r", cfg.r, "order r");
  verify->add_option("--f", cfg.weight, "weight function (one|cos|rational)");
  verify->add_option("--t", cfg.horizon, "time horizon");
  verify->add_option("--levels", v_levels, "comma-separated levels n");
  auto* reps_opt = verify->add_option("--reps", cfg.replications, "replications per level");
  verify->add_option("--seed", cfg.master_seed, "master seed");
  verify->add_option("--mode", v_mode, "walk|coupled");
  verify->add_option("--span", cfg.span_multiplier, "fBm span multiplier (>= 4)");
  verify->add_option("--threads", cfg.threads, "worker threads (default FBMBT_THREADS or hardware)");
  verify->add_option("--out", v_out, "output directory");
  verify->add_option("--format", v_format, "csv|json");

  // crossings
  int x_level = 8;
  double x_t = 1.0;
  std::uint64_t x_seed = 1;
  std::string x_mode = "walk";
  std::string x_out;
  auto* crossings = app.add_subcommand("crossings", "Crossing counts and local-time estimate of one walk (JSON)");
  crossings->add_option("--n", x_level, "level n");
  crossings->add_option("--t", x_t, "time horizon");
  crossings->add_option("--seed", x_seed, "master seed");
  crossings->add_option("--mode", x_mode, "walk|coupled");
  crossings->add_option("--out", x_out, "output file (default stdout)");

  // variation
  double w_hurst = 0.35;
  int w_r = 1;
  std::string w_f = "one";
  int w_level = 8;
  double w_t = 1.0;
  std::size_t w_reps = 10;
  std::uint64_t w_seed = 1;
  double w_span = 6.0;
  std::string w_out;
  auto* variation = app.add_subcommand("variation", "V_n^{(r)}(f, t) per replication (CSV)");
  variation->add_option("--hurst", w_hurst, "Hurst index")->required();
  variation->add_option("--r", w_r, "power r");
  variation->add_option("--f", w_f, "weight function");
  variation->add_option("--n", w_level, "level n");
  variation->add_option("--t", w_t, "time horizon");
  variation->add_option("--reps", w_reps, "replications");
  variation->add_option("--seed", w_seed, "master seed");
  variation->add_option("--span", w_span, "fBm span multiplier");
  variation->add_option("--out", w_out, "output file (default stdout)");

  // path
  double p_hurst = 0.5;
  int p_level = 8;
  double p_span = 1.0;
  std::uint64_t p_seed = 1;
  std::string p_out;
  auto* path = app.add_subcommand("path", "One two-sided fBm sample on the level-n grid (CSV)");
  path->add_option("--hurst", p_hurst, "Hurst index")->required();
  path->add_option("--n", p_level, "level n");
  path->add_option("--span", p_span, "half-width L of [-L, L]");
  path->add_option("--seed", p_seed, "master seed");
  path->add_option("--out", p_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*constants) {
      const auto rows = fbmbt::constant_table(fbmbt::Hurst(c_hurst), c_r);
      if (c_format == "csv") {
        std::cout << fbmbt::constants_csv(rows);
      } else {
        std::printf("H = %g, r = %d\n", c_hurst, c_r);
        for (const auto& row : rows) {
          if (row.value) {
            std::printf("  %-6s %3d  %.15g\n", row.name.c_str(), row.index, *row.value);
          } else {
            std::printf("  %-6s %3d  %s\n", row.name.c_str(), row.index, row.status.c_str());
          }
        }
      }
      return kExitPass;
    }

    if (*verify) {
      cfg.part = fbmbt::parse_part(v_part);
      cfg.levels = parse_levels(v_levels);
      cfg.mode = fbmbt::parse_mode(v_mode);
      cfg.format = fbmbt::parse_format(v_format);
      reps_given = reps_opt->count() > 0;
      if (!reps_given) {
        const bool variance_part = cfg.part == fbmbt::TheoremPart::kP2 || cfg.part == fbmbt::TheoremPart::kP4;
        cfg.replications = variance_part ? 2000 : 500;
      }
      cfg.output_dir = v_out;
      const auto res = fbmbt::run(cfg);
      if (cfg.part == fbmbt::TheoremPart::kConstants) {
        std::cout << fbmbt::constants_csv(res.constants);
      } else {
        print_summary(res);
      }
      if (!v_out.empty()) std::printf("wrote %s\n", fbmbt::report(res, v_out, cfg.format).string().c_str());
      return res.passed ? kExitPass : kExitTolerance;
    }

    if (*crossings) {
      auto rng = fbmbt::make_engine({x_seed, fbmbt::StreamDomain::kInnerWalk, static_cast<std::uint64_t>(x_level), 0, 0});
      const auto mode = fbmbt::parse_mode(x_mode);
      const auto rec = mode == fbmbt::WalkMode::kWalkOnly ? fbmbt::simulate_walk(x_level, x_t, rng)
                                                          : fbmbt::simulate_coupled(x_level, x_t, rng);
      const auto lt = fbmbt::local_time_estimate(rec);
      nlohmann::json j;
      j["n"] = x_level;
      j["t"] = x_t;
      j["j_star"] = rec.j_star();
      nlohmann::json counts = nlohmann::json::array();
      nlohmann::json local = nlohmann::json::array();
      for (std::int64_t c = rec.first_cell(); c < rec.end_cell(); ++c) {
        counts.push_back({{"j", c}, {"U", rec.up(c)}, {"D", rec.down(c)}});
        local.push_back({{"j", c}, {"value", lt.value(c)}});
      }
      j["counts"] = std::move(counts);
      j["local_time"] = std::move(local);
      emit(j.dump(2) + "\n", x_out);
      return kExitPass;
    }

    if (*variation) {
      const fbmbt::Hurst hurst(w_hurst);
      if (w_r < 1) throw fbmbt::ConfigError("r must be a positive integer");
      const auto f = fbmbt::weight_by_name(w_f);
      const fbmbt::FbmGenerator gen(hurst, w_level, w_span * std::sqrt(w_t));
      std::ostringstream os;
      os << "statistic,H,r,f,n,replication,value\n";
      for (std::size_t rep = 0; rep < w_reps; ++rep) {
        const auto lvl = static_cast<std::uint64_t>(w_level);
        auto yr = fbmbt::make_engine({w_seed, fbmbt::StreamDomain::kInnerWalk, lvl, rep, 0});
        auto xr = fbmbt::make_engine({w_seed, fbmbt::StreamDomain::kOuterFbm, lvl, rep, 0});
        const auto rec = fbmbt::simulate_walk(w_level, w_t, yr);
        const auto x = gen.sample(xr);
        os << "V," << fbmbt::format_double(w_hurst) << ',' << w_r << ',' << w_f << ',' << w_level << ',' << rep << ','
           << fbmbt::format_double(fbmbt::v_statistic(x, rec, f, w_r)) << '\n';
      }
      emit(os.str(), w_out);
      return kExitPass;
    }

    if (*path) {
      auto rng = fbmbt::make_engine({p_seed, fbmbt::StreamDomain::kOuterFbm, static_cast<std::uint64_t>(p_level), 0, 0});
      const auto x = fbmbt::generate_fbm(fbmbt::Hurst(p_hurst), p_level, p_span, rng);
      std::ostringstream os;
      os << "j,t,X\n";
      for (std::int64_t j = -x.half_count(); j <= x.half_count(); ++j) {
        os << j << ',' << fbmbt::format_double(static_cast<double>(j) * x.spacing()) << ','
           << fbmbt::format_double(x[j]) << '\n';
      }
      emit(os.str(), p_out);
      return kExitPass;
    }
  } catch (const fbmbt::ConfigError& e) {
    std::fprintf(stderr, "fbmbt: configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "fbmbt: configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fbmbt: error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitPass;
}
