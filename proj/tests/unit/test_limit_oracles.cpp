#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "fbmbt/limit_oracles.hpp"
#include "fbmbt/oracle_values.hpp"
#include "fbmbt/statistics.hpp"

using namespace fbmbt;

namespace {

FbmGrid fbm(double h, int n, double span, std::uint64_t rep, std::uint64_t seed = 61) {
  auto e = make_engine({seed, StreamDomain::kOuterFbm, static_cast<std::uint64_t>(n), rep, 0});
  return generate_fbm(Hurst(h), n, span, e);
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(Stratonovich, Examples) {
  const auto x = fbm(0.35, 8, 2.0, 0);
  const double y = 17 * x.spacing();
  EXPECT_EQ(stratonovich_endpoint(weight_by_name("one"), x, y), x[17]);
  EXPECT_EQ(stratonovich_endpoint(weight_by_name("one"), x, -y), x[-17]);

  std::vector<double> v{0.3, 0.0, M_PI / 2};
  const FbmGrid g(Hurst(0.4), 4, 1, v);
  EXPECT_NEAR(stratonovich_endpoint(weight_by_name("cos"), g, g.spacing()), 1.0, 1e-15);
  EXPECT_EQ(stratonovich_endpoint(weight_by_name("rational"), x, y), stratonovich_endpoint(weight_by_name("rational"), x, y));
  EXPECT_THROW(stratonovich_endpoint(weight_by_name("one"), x, 5.0), SpanExceeded);
  RealFn c = [](double v) { return std::cos(v); };
  const WeightFunction bare("bare", {c, c, c, c, c}, nullptr, 1.0);
  EXPECT_THROW(stratonovich_endpoint(bare, x, y), std::invalid_argument);
}

TEST(WienerIto, Examples) {
  const auto x = fbm(0.35, 8, 2.0, 1);
  auto w = make_engine({1, StreamDomain::kAuxBrownian, 8, 0, 0});
  const auto zero = wiener_ito_integral(weight_by_name("cos"), x, 0.0, w);
  EXPECT_EQ(zero.value, 0.0);
  EXPECT_EQ(*zero.conditional_variance, 0.0);
  for (double u : {1.0, -0.7, 1.33}) {
    const auto v = wiener_ito_integral(weight_by_name("one"), x, u, w);
    EXPECT_NEAR(*v.conditional_variance, std::abs(u), x.spacing());
  }
  EXPECT_THROW(wiener_ito_integral(weight_by_name("one"), x, 2.5, w), SpanExceeded);
}

TEST(WienerIto, ConditionallyGaussian) {
  const auto x = fbm(0.35, 8, 2.0, 2);
  const auto f = weight_by_name("cos");
  std::vector<double> draws;
  double cv = 0.0;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    auto w = make_engine({2, StreamDomain::kAuxBrownian, 8, s, 0});
    const auto v = wiener_ito_integral(f, x, -1.2, w);
    cv = *v.conditional_variance;
    draws.push_back(v.value);
  }
  const double n = draws.size();
  EXPECT_NEAR(mean_of(draws), 0.0, 4 * std::sqrt(cv / n));
  EXPECT_NEAR(variance_of(draws), cv, 4 * cv * std::sqrt(2 / (n - 1)));
  EXPECT_GT(ks_test_normal(draws, std::sqrt(cv)).p_value, 0.01);
}

TEST(LocalTimeWeighted, SingleCellSupport) {
  const auto x = fbm(0.35, 6, 1.0, 3);
  const LocalTimeEstimate lt(6, 1.0, 0, {0.8});
  std::vector<double> draws;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    auto w = make_engine({3, StreamDomain::kAuxBrownian, 6, s, 0});
    const auto v = local_time_weighted_integral(weight_by_name("one"), x, lt, w);
    ASSERT_DOUBLE_EQ(*v.conditional_variance, 0.64 * x.spacing());
    draws.push_back(v.value);
  }
  EXPECT_GT(ks_test_normal(draws, std::sqrt(0.64 * x.spacing())).p_value, 0.01);
}

TEST(LocalTimeWeighted, ConditionallyGaussianOnWalkProfile) {
  auto ye = make_engine({4, StreamDomain::kInnerWalk, 8, 0, 0});
  const auto rec = simulate_walk(8, 1.0, ye);
  const auto lt = local_time_estimate(rec);
  const auto x = fbm(0.35, 8, 6.0, 4);
  const auto f = weight_by_name("rational");
  std::vector<double> draws;
  double cv = 0.0;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    auto w = make_engine({4, StreamDomain::kAuxBrownian, 8, s, 0});
    const auto v = local_time_weighted_integral(f, x, lt, w);
    cv = *v.conditional_variance;
    draws.push_back(v.value);
  }
  double expect = 0.0;
  for (std::int64_t j = lt.first_cell(); j < lt.end_cell(); ++j) expect += std::pow(f(x[j]) * lt.value(j), 2) * x.spacing();
  EXPECT_NEAR(cv, expect, 1e-12);
  const double n = draws.size();
  EXPECT_NEAR(mean_of(draws), 0.0, 4 * std::sqrt(cv / n));
  EXPECT_NEAR(variance_of(draws), cv, 4 * cv * std::sqrt(2 / (n - 1)));
  EXPECT_GT(ks_test_normal(draws, std::sqrt(cv)).p_value, 0.01);
}

TEST(LocalTimeWeighted, GridMismatch) {
  const auto x = fbm(0.35, 6, 1.0, 3);
  const LocalTimeEstimate lt(8, 1.0, 0, {0.8});
  auto w = make_engine(1);
  EXPECT_THROW(local_time_weighted_integral(weight_by_name("one"), x, lt, w), std::invalid_argument);
  const LocalTimeEstimate wide(6, 1.0, -50, std::vector<double>(100, 0.1));
  EXPECT_THROW(local_time_weighted_integral(weight_by_name("one"), x, wide, w), SpanExceeded);
}

TEST(LocalTimeSquare, FrozenOracleAgainstBrownianValue) {
  // E int (L_1^x)^2 dx = E int_0^1 int_0^1 delta(B_s - B_u) = 8 / (3 sqrt(2 pi)).
  const double analytic = 8.0 / (3.0 * std::sqrt(2.0 * M_PI));
  EXPECT_NEAR(oracle::kLocalTimeSquareIntegral, analytic, 0.03 * analytic);
  EXPECT_LT(oracle::kLocalTimeSquareIntegralStdError, 0.01 * analytic);
  EXPECT_DOUBLE_EQ(oracle::kLocalTimeSquareExponent, 1.5);
}

TEST(LocalTimeSquare, SinglePathMatchesCrossingEstimate) {
  auto e = make_engine({5, StreamDomain::kInnerWalk, 10, 0, 0});
  const auto rec = simulate_coupled(10, 1.0, e);
  const auto lt = local_time_estimate(rec);
  double from_walk = 0.0;
  for (double v : lt.values()) from_walk += v * v * rec.spacing();
  const auto& p = *rec.coupled();
  const double bw = default_occupation_bandwidth(p);
  EXPECT_NEAR(local_time_square_integral(p, 1.0, bw / 4, bw), from_walk, 0.2 * from_walk);
}

TEST(Taylor, ConstantWeightIsExact) {
  auto ye = make_engine({6, StreamDomain::kInnerWalk, 10, 0, 0});
  const auto rec = simulate_walk(10, 1.0, ye);
  const auto x = fbm(0.75, 10, 6.0, 6);
  const auto res = taylor_consistency(weight_by_name("one"), x, rec);
  EXPECT_LT(res.residual, 1e-12);
  EXPECT_EQ(res.constant, 0.0);
}

TEST(Taylor, EnvelopeAndDecay) {
  const auto f = weight_by_name("cos");
  std::vector<double> medians;
  for (int n : {6, 8, 10, 12}) {
    std::vector<double> res;
    int inside = 0;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
      auto ye = make_engine({7, StreamDomain::kInnerWalk, static_cast<std::uint64_t>(n), rep, 0});
      const auto rec = simulate_walk(n, 1.0, ye);
      const double span = static_cast<double>(rec.max_abs_position() + 1) * grid_spacing(n);
      const auto x = fbm(0.75, n, span, rep, 71 + n);
      const auto t = taylor_consistency(f, x, rec);
      res.push_back(t.residual);
      inside += t.residual <= t.envelope();
    }
    if (n == 12) EXPECT_GE(inside, 198);
    medians.push_back(median(res));
  }
  for (std::size_t i = 1; i < medians.size(); ++i) EXPECT_LT(medians[i], medians[i - 1]);
}

TEST(Independence, AuxiliaryStreamNeverMeetsXOrY) {
  std::set<std::uint64_t> xy;
  for (std::uint64_t lvl = 0; lvl < 20; ++lvl) {
    for (std::uint64_t rep = 0; rep < 500; ++rep) {
      xy.insert(derive_seed({9, StreamDomain::kOuterFbm, lvl, rep, 0}));
      xy.insert(derive_seed({9, StreamDomain::kInnerWalk, lvl, rep, 0}));
    }
  }
  for (std::uint64_t lvl = 0; lvl < 20; ++lvl) {
    for (std::uint64_t rep = 0; rep < 500; ++rep) EXPECT_EQ(xy.count(derive_seed({9, StreamDomain::kAuxBrownian, lvl, rep, 0})), 0u);
  }
}
