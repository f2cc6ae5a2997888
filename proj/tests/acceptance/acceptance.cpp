// Acceptance run: one PASS/FAIL line per criterion 1-9, followed by detail
// lines. The exit status is 0 when every criterion ran to a verdict (pass or
// fail) and 3 if a criterion could not be evaluated at all.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "../common/tech_lemma.hpp"
#include "fbmbt/fbmbt.hpp"

using namespace fbmbt;

namespace {

struct Verdict {
  bool pass = false;
  std::vector<std::string> details;
  void note(const char* fmt, ...) __attribute__((format(printf, 2, 3))) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    details.emplace_back(buf);
  }
};

std::size_t g_records_checked = 0;

ExperimentConfig make_config(TheoremPart part, double h, int r, const char* f, std::vector<int> levels, std::size_t reps) {
  ExperimentConfig c;
  c.part = part;
  c.hurst = h;
  c.r = r;
  c.weight = f;
  c.levels = std::move(levels);
  c.replications = reps;
  c.master_seed = 20240601;
  return c;
}

EnsembleResult run_counted(const ExperimentConfig& c) {
  auto res = run(c);
  g_records_checked += res.values.size();
  return res;
}

Verdict criterion_identities() {
  Verdict v;
  const auto names = weight_names();
  const double hs[] = {0.2, 0.5, 0.8};
  double worst_sep = 0.0, worst_tr = 0.0;
  int instances = 0;
  for (int i = 0; i < 200; ++i) {
    const double h = hs[i % 3];
    const int r = 1 + (i / 3) % 4;
    const int n = 4 + 2 * (i % 6);
    const auto f = weight_by_name(names[static_cast<std::size_t>((i / 12) % 3)]);
    const double t = 1.0 + 0.3 * (i % 5);
    auto ye = make_engine({7, StreamDomain::kInnerWalk, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(i), 0});
    auto xe = make_engine({7, StreamDomain::kOuterFbm, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(i), 0});
    const auto rec = simulate_walk(n, t, ye);
    const auto x = generate_fbm(Hurst(h), n, static_cast<double>(rec.max_abs_position() + 1) * rec.spacing(), xe);
    worst_sep = std::max(worst_sep, separation_identity_check(x, rec, f, r).relative());
    worst_tr = std::max(worst_tr, transform_identity_check(x, rec, f, r).relative());
    ++instances;
  }
  v.pass = instances == 200 && worst_sep <= 1e-9 && worst_tr <= 1e-9;
  v.note("%d instances, H in {0.2, 0.5, 0.8}, r <= 4, n <= 14, all weights", instances);
  v.note("worst relative discrepancy: separation %.3g, transform %.3g (tolerance 1e-9)", worst_sep, worst_tr);
  return v;
}

Verdict criterion_constants() {
  Verdict v;
  const Hurst half(0.5);
  double worst = 0.0;
  for (int r = 2; r <= 5; ++r) {
    const double expect = std::sqrt(gaussian_moment(4 * r - 2) - std::pow(gaussian_moment(2 * r), 2));
    worst = std::max(worst, std::abs(beta_odd(half, r) - expect) / std::max(1.0, expect));
  }
  for (int r = 1; r <= 5; ++r) {
    const double expect = std::sqrt(gaussian_moment(4 * r) - std::pow(gaussian_moment(2 * r), 2));
    worst = std::max(worst, std::abs(gamma_even(half, r) - expect) / std::max(1.0, expect));
  }
  double worst_rec = 0.0;
  for (int r = 1; r <= 6; ++r) {
    for (double x : {-2.0, -0.5, 0.0, 0.7, 3.0}) {
      double odd = 0.0, even = gaussian_moment(2 * r);
      for (int i = 1; i <= r; ++i) odd += kappa(r, i) * hermite_eval(2 * i - 1, x);
      for (int a = 1; a <= r; ++a) even += b_even(r, a) * hermite_eval(2 * a, x);
      const double xo = std::pow(x, 2 * r - 1), xe = std::pow(x, 2 * r);
      worst_rec = std::max(worst_rec, std::abs(odd - xo) / std::max(1.0, std::abs(xo)));
      worst_rec = std::max(worst_rec, std::abs(even - xe) / std::max(1.0, std::abs(xe)));
    }
  }
  v.pass = worst <= 1e-10 && worst_rec <= 1e-10;
  v.note("H = 1/2 closed forms for beta_{2r-1} (r = 2..5) and gamma_{2r} (r = 1..5): worst relative error %.3g", worst);
  v.note("Hermite reconstruction of x^{2r-1}, x^{2r}, r <= 6: worst relative error %.3g", worst_rec);
  return v;
}

Verdict criterion_p1() {
  Verdict v;
  const auto res = run_counted(make_config(TheoremPart::kP1, 0.35, 1, "cos", {8, 12, 16}, 500));
  bool decreasing = true;
  for (std::size_t i = 0; i < res.summary.size(); ++i) {
    const auto& s = res.summary[i];
    v.note("n = %2d  MSE = %.6g  corr = %.5f", s.level, *s.mse, *s.correlation);
    if (i > 0) decreasing = decreasing && *s.mse < *res.summary[i - 1].mse;
  }
  const double last = *res.summary.back().mse;
  v.pass = decreasing && last < 0.05;
  v.note("strictly decreasing: %s, final MSE %.3g (< 0.05)", decreasing ? "yes" : "no", last);
  return v;
}

Verdict criterion_p3() {
  Verdict v;
  const auto res = run_counted(make_config(TheoremPart::kP3, 0.75, 2, "one", {8, 12, 16}, 500));
  bool decreasing = true;
  for (std::size_t i = 0; i < res.summary.size(); ++i) {
    const auto& s = res.summary[i];
    v.note("n = %2d  corr(2^{-nH/2} V3, 3 Z_end) = %.5f  MSE = %.6g", s.level, *s.correlation, *s.mse);
    if (i > 0) decreasing = decreasing && *s.mse < *res.summary[i - 1].mse;
  }
  const double corr = *res.summary.back().correlation;
  v.pass = decreasing && corr > 0.95;
  v.note("coefficient (2r)!/(r! 2^r) = %g; corr at n = 16 %.4f (> 0.95); MSE decreasing: %s", gaussian_moment(4), corr,
         decreasing ? "yes" : "no");
  return v;
}

struct EndpointMoments {
  double abs_mean = 0.0;
  double abs_pow_mean = 0.0;
  double se = 0.0;
};

/// E|Y_end| and E|Y_end|^{2H} from walk endpoints drawn independently of the experiment streams.
EndpointMoments walk_endpoint_oracle(int n, double hurst, std::size_t draws) {
  auto e = make_engine({0x4F52414345ULL, StreamDomain::kSynthetic, static_cast<std::uint64_t>(n), 0, 0});
  const double h = grid_spacing(n);
  double s = 0.0, s2 = 0.0, sp = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double y = std::abs(static_cast<double>(sample_walk_endpoint(n, 1.0, e)) * h);
    s += y;
    s2 += y * y;
    sp += std::pow(y, 2 * hurst);
  }
  const double d = static_cast<double>(draws);
  return {s / d, sp / d, std::sqrt((s2 / d - (s / d) * (s / d)) / d)};
}

Verdict criterion_p2() {
  Verdict v;
  const double h = 0.35;
  const int n = 16;
  const auto oracle = walk_endpoint_oracle(n, h, 400000);
  const double beta = beta_odd(Hurst(h), 2);
  const double target = beta * beta * oracle.abs_mean;
  const auto res = run_counted(make_config(TheoremPart::kP2, h, 2, "one", {n}, 2000));
  const auto& s = res.summary.back();
  const double ratio = s.stats.variance / target;
  v.pass = std::abs(ratio - 1.0) <= 0.15;
  v.note("beta_3(0.35) = %.10g, E|Y_end| = %.6f +- %.1e (walk-endpoint oracle, sqrt(2/pi) = %.6f)", beta,
         oracle.abs_mean, oracle.se, std::sqrt(2 / M_PI));
  v.note("n = 16: var(2^{-n/4} V3) = %.5g, target beta^2 E|Y_end| = %.5g, ratio %.4f (band 0.85..1.15), CI [%.4g, %.4g]",
         s.stats.variance, target, ratio, s.stats.var_ci_low, s.stats.var_ci_high);
  if (s.stats.ks) v.note("KS vs N(0, var): D = %.4f, p = %.3g (reported only)", s.stats.ks->statistic, s.stats.ks->p_value);
  // First-chaos part kappa_{2,1} 2^{-n/4} W^{(1)}(1, Y_end) = 3 2^{n(2H-1)/4} X_{Y_end}; vanishes only as n -> infinity.
  const double first_chaos = 9.0 * std::exp2(n * (2 * h - 1) / 2.0) * oracle.abs_pow_mean;
  v.note("first-chaos term at n = 16: 9 2^{n(2H-1)/2} E|Y_end|^{2H} = %.5g; var / (target + that) = %.4f", first_chaos,
         s.stats.variance / (target + first_chaos));
  return v;
}

Verdict criterion_p4() {
  Verdict v;
  const double h = 0.4;
  const double gamma = gamma_even(Hurst(h), 1);
  const double target = gamma * gamma * oracle::kLocalTimeSquareIntegral;
  const auto res = run_counted(make_config(TheoremPart::kP4, h, 1, "one", {16}, 2000));
  const auto& s = res.summary.back();
  const double ratio = s.stats.variance / target;
  v.pass = std::abs(ratio - 1.0) <= 0.20;
  v.note("gamma_2(0.4) = %.10g, frozen E int (L_1^s)^2 ds = %.6f +- %.6f", gamma, oracle::kLocalTimeSquareIntegral,
         oracle::kLocalTimeSquareIntegralStdError);
  v.note("n = 16: var(2^{-3n/4} V2) = %.5g, target %.5g, ratio %.4f (band 0.80..1.20), CI [%.4g, %.4g]", s.stats.variance,
         target, ratio, s.stats.var_ci_low, s.stats.var_ci_high);
  if (s.stats.ks) v.note("KS vs N(0, var): D = %.4f, p = %.3g (reported only)", s.stats.ks->statistic, s.stats.ks->p_value);
  return v;
}

Verdict criterion_crossings() {
  Verdict v;
  // Every replication of criteria 3-6 passed the per-record integer check inside run().
  bool ok = true;
  std::size_t extra = 0;
  for (int n = 0; n <= 16; ++n) {
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
      auto e = make_engine({31, StreamDomain::kInnerWalk, static_cast<std::uint64_t>(n), rep, 0});
      ok = ok && crossing_identities_hold(simulate_walk(n, 1.0, e));
      ++extra;
    }
  }
  for (int n : {4, 6, 8}) {
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
      auto e = make_engine({32, StreamDomain::kInnerWalk, static_cast<std::uint64_t>(n), rep, 0});
      ok = ok && crossing_identities_hold(simulate_coupled(n, 1.0, e));
      ++extra;
    }
  }
  v.note("integer U-D and sum(U+D) identities: %zu experiment records + %zu sweep records, all hold: %s",
         g_records_checked, extra, ok ? "yes" : "no");

  bool second_ok = true;
  for (int n : {8, 12, 16}) {
    double s = 0.0, s2 = 0.0;
    const std::size_t reps = 5000;
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
      auto e = make_engine({33, StreamDomain::kInnerWalk, static_cast<std::uint64_t>(n), rep, 0});
      const double y2 = std::pow(simulate_walk(n, 1.0, e).y_end(), 2);
      s += y2;
      s2 += y2 * y2;
    }
    const double m = s / reps, se = std::sqrt((s2 / reps - m * m) / reps);
    const double expect = static_cast<double>(walk_step_count(n, 1.0)) * std::exp2(-n);
    second_ok = second_ok && std::abs(m - expect) <= 4 * se;
    v.note("n = %2d: E[Y_end^2] = %.5f +- %.5f vs %.5f", n, m, se, expect);
  }

  bool fourth_ok = true;
  double worst_exact = 0.0;
  const int n = 4;
  for (int steps = 1; steps <= 12; ++steps) {
    const double t = steps / 16.0;
    long double m4 = 0;
    const std::uint32_t total = 1u << steps;
    for (std::uint32_t mask = 0; mask < total; ++mask) {
      std::vector<std::int8_t> st(static_cast<std::size_t>(steps));
      for (int k = 0; k < steps; ++k) st[static_cast<std::size_t>(k)] = (mask >> k) & 1u ? 1 : -1;
      const long double y = CrossingRecord(n, t, std::move(st)).y_end();
      m4 += y * y * y * y;
    }
    m4 /= total;
    const double nn = steps, h2 = std::exp2(-n);
    const double formula = 3 * nn * nn * h2 * h2 - 2 * nn * h2 * h2;
    worst_exact = std::max(worst_exact, std::abs(static_cast<double>(m4) - formula));
    auto e = make_engine({34, StreamDomain::kSynthetic, 4, static_cast<std::uint64_t>(steps), 0});
    const auto mc = walk_moment(n, t, 4, 200000, e);
    fourth_ok = fourth_ok && std::abs(mc.mean - static_cast<double>(m4)) <= 4 * mc.std_error;
  }
  fourth_ok = fourth_ok && worst_exact <= 1e-14;
  v.note("fourth moment, floor(2^n t) = 1..12: exhaustive enumeration vs 3(N 2^-n)^2 - 2N 2^-2n max diff %.2g;"
         " MC within 4 SE: %s", worst_exact, fourth_ok ? "yes" : "no");
  v.pass = ok && second_ok && fourth_ok;
  return v;
}

Verdict criterion_tech_lemma() {
  Verdict v;
  const auto checks = fbmbt::testing::tech_lemma_suite();
  int bad = 0;
  double worst_dev = 0.0;
  for (const auto& b : checks) {
    if (!b.ok()) {
      ++bad;
      v.note("violated: %s holds=%d slope %.4f expected %.4f", b.name.c_str(), b.holds, b.slope, b.expected);
    }
    worst_dev = std::max(worst_dev, std::abs(b.slope - b.expected));
  }
  for (const auto& b : checks) {
    if (b.name.rfind("(2)", 0) == 0 || b.name.rfind("(3)", 0) == 0 || b.name.rfind("(4)", 0) == 0) {
      v.note("%-18s calibrated C = %.4g, slope %.4f (expected %.4f)", b.name.c_str(), b.constant, b.slope, b.expected);
    }
  }
  v.note("%zu bound checks, %d failing, worst slope deviation %.4f (tolerance %.1f)", checks.size(), bad, worst_dev,
         fbmbt::testing::kSlopeTolerance);
  v.pass = bad == 0;
  return v;
}

Verdict criterion_determinism() {
  Verdict v;
  ExperimentConfig c = make_config(TheoremPart::kP1, 0.35, 1, "cos", {6, 8}, 50);
  c.master_seed = 424242;
  c.threads = 1;
  const auto one = values_csv(run(c));
  c.threads = 8;
  const auto eight = values_csv(run(c));
  const auto golden_path = std::filesystem::path(FBMBT_TEST_DATA_DIR) / "golden_p1_H0.35_cos.csv";
  std::ifstream in(golden_path, std::ios::binary);
  std::ostringstream golden;
  golden << in.rdbuf();
  v.pass = in.good() || in.eof();
  v.pass = v.pass && one == eight && one == golden.str();
  v.note("threads 1 vs 8 identical: %s; matches %s: %s", one == eight ? "yes" : "no", golden_path.filename().c_str(),
         one == golden.str() ? "yes" : "no");
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double budget_seconds;
    std::function<Verdict()> fn;
  };
  const std::vector<Criterion> criteria{
      {1, "exact identities (separation, transform)", 60, criterion_identities},
      {2, "constants cross-checks at H = 1/2 and Hermite reconstruction", 60, criterion_constants},
      {3, "part (1): H = 0.35, f = cos, MSE to sin(Z_end)", 300, criterion_p1},
      {4, "part (3): H = 0.75, r = 2, correlation with 3 Z_end", 300, criterion_p3},
      {5, "part (2): H = 0.35, r = 2, variance vs beta_3^2 E|Y_end|", 600, criterion_p2},
      {6, "part (4): H = 0.4, r = 1, variance vs gamma_2^2 E int L^2", 900, criterion_p4},
      {7, "crossing-scheme integrity", 600, criterion_crossings},
      {8, "covariance inequality suite", 600, criterion_tech_lemma},
      {9, "determinism across thread counts", 600, criterion_determinism},
  };
  std::printf("fbmbt acceptance (%u worker threads)\n", resolve_thread_count());
  int passed = 0;
  int errored = 0;
  std::vector<std::string> report;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    bool error = false;
    try {
      v = c.fn();
    } catch (const std::exception& e) {
      error = true;
      v.pass = false;
      v.note("error: %s", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs <= c.budget_seconds;
    if (!in_budget) v.note("runtime %.1fs exceeds budget %.0fs", secs, c.budget_seconds);
    const bool pass = v.pass && in_budget;
    passed += pass;
    errored += error;
    std::printf("%s criterion %d: %s (%.1fs)\n", pass ? "PASS" : "FAIL", c.id, c.title, secs);
    for (const auto& d : v.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", passed, criteria.size());
  return errored == 0 ? 0 : 3;
}
