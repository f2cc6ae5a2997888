// Pre-registered Monte Carlo estimate of E[int (L_t^s)^2 ds] for Brownian Y.
// Its output is frozen in include/fbmbt/oracle_values.hpp.

#include <cstdint>
#include <cstdio>
#include <vector>

#include "fbmbt/crossing_scheme.hpp"
#include "fbmbt/limit_oracles.hpp"
#include "fbmbt/parallel.hpp"
#include "fbmbt/statistics.hpp"

int main() {
  constexpr std::uint64_t kSeed = 0x4C54'4F52'4143'4C45ULL;
  constexpr int kLevel = 10;
  constexpr int kOversample = 8;  // fine level 18
  constexpr std::size_t kReps = 4000;
  constexpr double kHorizon = 1.0;

  const auto values = fbmbt::parallel_map(kReps, [&](std::size_t rep) {
    auto rng = fbmbt::make_engine({kSeed, fbmbt::StreamDomain::kSynthetic, kLevel, rep, 0});
    const auto rec = fbmbt::simulate_coupled(kLevel, kHorizon, rng, {kOversample, true});
    const auto& path = *rec.coupled();
    const double bw = fbmbt::default_occupation_bandwidth(path);
    return fbmbt::local_time_square_integral(path, kHorizon, bw / 4.0, bw);
  });
  const double m = fbmbt::mean_of(values);
  const double se = std::sqrt(fbmbt::variance_of(values) / static_cast<double>(values.size()));
  std::printf("E[int L^2] = %.6f  (se %.6f, reps %zu, level %d, fine level %d)\n", m, se, values.size(), kLevel,
              kLevel + kOversample);
}
