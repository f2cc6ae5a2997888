#pragma once

// Frozen Monte Carlo oracle values. Regenerate with the local_time_oracle tool;
// the run parameters are fixed in tools/local_time_oracle.cpp.

namespace fbmbt::oracle {

/// E[int (L_1^s(Y))^2 ds] for standard Brownian Y: 4000 path-coupled records,
/// walk level 10, fine level 18, box-kernel occupation density.
inline constexpr double kLocalTimeSquareIntegral = 1.050367;
inline constexpr double kLocalTimeSquareIntegralStdError = 0.004702;

/// Scaling in the horizon: int (L_t^s)^2 ds has the law of t^{3/2} int (L_1^s)^2 ds.
inline constexpr double kLocalTimeSquareExponent = 1.5;

}  // namespace fbmbt::oracle
