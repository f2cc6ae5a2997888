#pragma once

// Computable realisations of the limit objects: the Stratonovich endpoint form
// F(X_u) - F(0), Wiener-Ito integrals of f(X) against an independent Brownian
// motion W, local-time-weighted integrals, and the Taylor-type consistency
// residual linking V^{(1)} and V^{(3)}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fbmbt/crossing_scheme.hpp"
#include "fbmbt/gaussian_core.hpp"
#include "fbmbt/rng.hpp"
#include "fbmbt/variation_stats.hpp"

namespace fbmbt {

enum class LimitKind { kStratonovichEndpoint, kWienerIto, kLocalTimeWeighted };

struct LimitValue {
  LimitKind kind = LimitKind::kWienerIto;
  double value = 0.0;
  std::optional<double> conditional_variance;  ///< given (X, Y); >= 0 when present
};

/// int_0^{y_end} f(X) d°X realised as F(X_{y_end}) - F(X_0), X read at the
/// nearest grid point to y_end (resolution 2^{-n/2}). Used on the whole range
/// H > 1/6.
inline double stratonovich_endpoint(const WeightFunction& f, const FbmGrid& x, double y_end) {
  if (!f.has_primitive()) throw std::invalid_argument("stratonovich_endpoint: weight has no primitive");
  const std::int64_t j = x.nearest_index(y_end);
  return f.primitive(x.at(j)) - f.primitive(x[0]);
}

/// int_0^u f(X_s) dW_s, two-sided: the X^+ / W^+ branch for u >= 0, X^- / W^-
/// for u < 0. Left-point Riemann-Ito sum on the X grid with fresh W increments
/// drawn from rng; conditional variance sum f(X_{s_i})^2 h.
inline LimitValue wiener_ito_integral(const WeightFunction& f, const FbmGrid& x, double u, Engine& rng) {
  const double h = x.spacing();
  const auto cells = static_cast<std::int64_t>(std::floor(std::abs(u) / h + 1e-9));
  const std::int64_t dir = u < 0 ? -1 : 1;
  if (!x.contains(dir * cells)) {
    std::ostringstream os;
    os << "Wiener-Ito integral to u = " << u << " exceeds fBm span " << x.span();
    throw SpanExceeded(os.str());
  }
  std::normal_distribution<double> gauss;
  const double sd = std::sqrt(h);
  CompensatedSum value;
  CompensatedSum var;
  for (std::int64_t i = 0; i < cells; ++i) {
    const double w = f(x[dir * i]);
    value.add(w * sd * gauss(rng));
    var.add(w * w * h);
  }
  return {LimitKind::kWienerIto, value.value(), var.value()};
}

/// int f(X_s) L_t^s(Y) dW_s over the support of the local-time profile, one
/// W increment per cell [jh, (j+1)h] weighted by f(X_{jh}) L(j).
inline LimitValue local_time_weighted_integral(const WeightFunction& f, const FbmGrid& x, const LocalTimeEstimate& lt,
                                               Engine& rng) {
  if (lt.level() != x.level()) {
    std::ostringstream os;
    os << "local-time grid level " << lt.level() << " does not match fBm grid level " << x.level();
    throw std::invalid_argument(os.str());
  }
  if (!x.contains(lt.first_cell()) || !x.contains(lt.end_cell())) {
    throw SpanExceeded("local-time support exceeds fBm span");
  }
  const double h = x.spacing();
  std::normal_distribution<double> gauss;
  const double sd = std::sqrt(h);
  CompensatedSum value;
  CompensatedSum var;
  for (std::int64_t j = lt.first_cell(); j < lt.end_cell(); ++j) {
    const double w = f(x[j]) * lt.value(j);
    value.add(w * sd * gauss(rng));
    var.add(w * w * h);
  }
  return {LimitKind::kLocalTimeWeighted, value.value(), var.value()};
}

/// int (L_t^s)^2 ds for one fine path: box-kernel occupation density on a
/// grid of spacing dx covering the path range, then a Riemann sum.
inline double local_time_square_integral(const CoupledPath& path, double t, double dx, double bandwidth) {
  if (path.y.empty()) throw std::invalid_argument("local_time_square_integral: empty path");
  const auto [lo, hi] = std::minmax_element(path.y.begin(), path.y.end());
  const double x0 = std::floor((*lo - bandwidth) / dx) * dx;
  const auto count = static_cast<std::size_t>(std::ceil((*hi + bandwidth - x0) / dx)) + 1;
  const auto occ = occupation_local_time(path, t, x0, dx, count, bandwidth);
  CompensatedSum acc;
  for (double v : occ) acc.add(v * v * dx);
  return acc.value();
}

struct TaylorResidual {
  double residual = 0.0;       ///< |F(Z_end) - F(0) - 2^{-nH/2} V^{(1)} + 2^{-3nH/2} V^{(3)}(f'') / 12|
  double fifth_power_sum = 0.0;///< sum_k |Z_{T_{k+1}} - Z_{T_k}|^5
  double constant = 0.0;       ///< C_F = sup|f''''| / 60
  [[nodiscard]] double envelope() const noexcept { return constant * fifth_power_sum; }
};

/// Per-step remainder of the corrected trapezoid rule is f''''(xi) d^5 / 120
/// to leading order; the calibrated constant doubles that.
inline double taylor_remainder_constant(const WeightFunction& f) { return f.sup_abs_fourth() / 60.0; }

inline TaylorResidual taylor_consistency(const WeightFunction& f, const FbmGrid& x, const CrossingRecord& rec) {
  if (!f.has_primitive()) throw std::invalid_argument("taylor_consistency: weight has no primitive");
  detail::require_compatible(x, rec);
  const double h_idx = x.hurst().value();
  const int n = rec.level();
  const double z_end = x[rec.j_star()];
  const double lhs = f.primitive(z_end) - f.primitive(0.0);
  const double v1 = v_statistic(x, rec, f, 1);
  const double v3 = v_statistic(x, rec, f.derivative(2), 3);
  const double rhs = std::exp2(-0.5 * n * h_idx) * v1 - std::exp2(-1.5 * n * h_idx) / 12.0 * v3;
  CompensatedSum fifth;
  const auto pos = rec.positions();
  for (std::size_t k = 0; k + 1 < pos.size(); ++k) fifth.add(std::pow(std::abs(x[pos[k + 1]] - x[pos[k]]), 5));
  return {std::abs(lhs - rhs), fifth.value(), taylor_remainder_constant(f)};
}

}  // namespace fbmbt
