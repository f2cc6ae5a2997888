#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "fbmbt/rng.hpp"
#include "fbmbt/statistics.hpp"

using namespace fbmbt;

TEST(Rng, DerivedSeedIsPureFunctionOfKey) {
  const StreamKey k{7, StreamDomain::kOuterFbm, 10, 3, 0};
  EXPECT_EQ(derive_seed(k), derive_seed(k));
  Engine a = make_engine(k);
  Engine b = make_engine(k);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, NoSeedCollisionsAcrossDomainsLevelsReplications) {
  std::set<std::uint64_t> seen;
  std::size_t count = 0;
  for (auto d : {StreamDomain::kOuterFbm, StreamDomain::kInnerWalk, StreamDomain::kAuxBrownian, StreamDomain::kSynthetic}) {
    for (std::uint64_t level = 0; level <= 20; ++level) {
      for (std::uint64_t rep = 0; rep < 1000; ++rep) {
        for (std::uint64_t sub = 0; sub < 2; ++sub) {
          seen.insert(derive_seed({12345, d, level, rep, sub}));
          ++count;
        }
      }
    }
  }
  EXPECT_EQ(seen.size(), count);
}

TEST(Rng, MasterSeedsGiveDistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t m = 0; m < 5000; ++m) seen.insert(derive_seed({m, StreamDomain::kOuterFbm, 8, 0, 0}));
  EXPECT_EQ(seen.size(), 5000u);
}

TEST(Rng, CrossStreamCorrelationSmoke) {
  // Same (master, level, rep), different domains: first normals are uncorrelated.
  constexpr std::size_t reps = 20000;
  std::vector<double> x(reps);
  std::vector<double> y(reps);
  std::vector<double> w(reps);
  std::normal_distribution<double> g;
  for (std::size_t r = 0; r < reps; ++r) {
    Engine ex = make_engine({99, StreamDomain::kOuterFbm, 12, r, 0});
    Engine ey = make_engine({99, StreamDomain::kInnerWalk, 12, r, 0});
    Engine ew = make_engine({99, StreamDomain::kAuxBrownian, 12, r, 0});
    x[r] = g(ex);
    g.reset();
    y[r] = g(ey);
    g.reset();
    w[r] = g(ew);
    g.reset();
  }
  const double se = 1.0 / std::sqrt(static_cast<double>(reps));
  EXPECT_LT(std::abs(correlation_of(x, y)), 4 * se);
  EXPECT_LT(std::abs(correlation_of(x, w)), 4 * se);
  EXPECT_LT(std::abs(correlation_of(y, w)), 4 * se);
}
