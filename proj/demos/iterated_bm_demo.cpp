// Small tour: one fBm in Brownian time, its crossing counts, and the
// normalised power variations at a few levels.

#include <cstdio>

#include "fbmbt/fbmbt.hpp"

int main() {
  const fbmbt::Hurst hurst(0.75);
  const auto cos_w = fbmbt::weight_by_name("cos");
  const auto one = fbmbt::weight_by_name("one");

  for (int n : {6, 10, 14}) {
    auto yr = fbmbt::make_engine({42, fbmbt::StreamDomain::kInnerWalk, static_cast<std::uint64_t>(n), 0, 0});
    auto xr = fbmbt::make_engine({42, fbmbt::StreamDomain::kOuterFbm, static_cast<std::uint64_t>(n), 0, 0});
    const auto rec = fbmbt::simulate_walk(n, 1.0, yr);
    const auto x = fbmbt::generate_fbm(hurst, n, 6.0, xr);
    const double z_end = x[rec.j_star()];
    const double scale = std::exp2(-0.5 * n * hurst.value());
    std::printf("n=%2d  steps=%6lld  Y_end=%+.4f  Z_end=%+.4f\n", n, static_cast<long long>(rec.step_count()),
                rec.y_end(), z_end);
    std::printf("       2^{-nH/2} V1(cos) = %+.5f   sin(Z_end) = %+.5f\n", scale * fbmbt::v_statistic(x, rec, cos_w, 1),
                std::sin(z_end));
    std::printf("       2^{-nH/2} V3(one) = %+.5f   3 Z_end    = %+.5f\n", scale * fbmbt::v_statistic(x, rec, one, 3),
                3.0 * z_end);
  }

  const auto c = fbmbt::make_limit_constants(fbmbt::Hurst(0.35), 2);
  std::printf("H=0.35, r=2: beta_3 = %.6f, gamma_4 = %.6f\n", c.beta_odd.value_or(0.0), c.gamma_even.value_or(0.0));
}
