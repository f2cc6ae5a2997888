#pragma once

// Weighted power variations of Z = X(Y) along the stopping times, their
// one-sided fBm counterparts W, and the algebraic identities that separate X
// from Y.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fbmbt/crossing_scheme.hpp"
#include "fbmbt/gaussian_core.hpp"
#include "fbmbt/hermite_constants.hpp"

namespace fbmbt {

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double v) noexcept {
    add(v);
    return *this;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// x^r by repeated multiplication.
inline double int_pow(double x, int r) noexcept {
  double acc = 1.0;
  for (int i = 0; i < r; ++i) acc *= x;
  return acc;
}

using RealFn = double (*)(double);

/// A registered C_b^infinity weight with derivatives up to order 4.
/// derivative(k) yields a weight whose value is f^{(k)}.
class WeightFunction {
 public:
  static constexpr int kMaxDerivative = 4;

  WeightFunction(std::string name, std::array<RealFn, kMaxDerivative + 1> derivs, RealFn primitive,
                 double sup_abs_fourth, int available = kMaxDerivative)
      : name_(std::move(name)), derivs_(derivs), primitive_(primitive), sup_abs_fourth_(sup_abs_fourth),
        available_(available) {}

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] double operator()(double x) const { return derivs_[0](x); }

  /// k-th derivative of f evaluated at x (k <= available order).
  [[nodiscard]] double d(int k, double x) const {
    if (k < 0 || k > available_) throw std::out_of_range("WeightFunction: derivative order not available");
    return derivs_[static_cast<std::size_t>(k)](x);
  }

  [[nodiscard]] bool has_primitive() const noexcept { return primitive_ != nullptr; }
  [[nodiscard]] double primitive(double x) const {
    if (primitive_ == nullptr) throw std::logic_error("weight '" + name_ + "' has no registered primitive");
    return primitive_(x);
  }

  /// sup |f''''| on R; sets the Taylor remainder constant.
  [[nodiscard]] double sup_abs_fourth() const noexcept { return sup_abs_fourth_; }

  /// f^{(k)} as a weight; its primitive is f^{(k-1)}.
  [[nodiscard]] WeightFunction derivative(int k) const {
    if (k < 0 || k > available_) throw std::out_of_range("WeightFunction: derivative order not available");
    if (k == 0) return *this;
    std::array<RealFn, kMaxDerivative + 1> shifted{};
    for (int i = 0; i + k <= kMaxDerivative; ++i) shifted[static_cast<std::size_t>(i)] = derivs_[static_cast<std::size_t>(i + k)];
    for (int i = kMaxDerivative - k + 1; i <= kMaxDerivative; ++i) shifted[static_cast<std::size_t>(i)] = shifted[0];
    return WeightFunction(name_ + std::string(static_cast<std::size_t>(k), '\''), shifted,
                          derivs_[static_cast<std::size_t>(k - 1)], 0.0, available_ - k);
  }

 private:
  std::string name_;
  std::array<RealFn, kMaxDerivative + 1> derivs_;
  RealFn primitive_;
  double sup_abs_fourth_;
  int available_;
};

namespace detail {

inline double one_fn(double) { return 1.0; }
inline double zero_fn(double) { return 0.0; }
inline double identity_fn(double x) { return x; }
inline double cos_fn(double x) { return std::cos(x); }
inline double neg_sin_fn(double x) { return -std::sin(x); }
inline double neg_cos_fn(double x) { return -std::cos(x); }
inline double sin_fn(double x) { return std::sin(x); }
inline double rational_fn(double x) { return 1.0 / (1.0 + x * x); }
inline double rational_d1(double x) {
  const double q = 1.0 + x * x;
  return -2.0 * x / (q * q);
}
inline double rational_d2(double x) {
  const double q = 1.0 + x * x;
  return (6.0 * x * x - 2.0) / (q * q * q);
}
inline double rational_d3(double x) {
  const double q = 1.0 + x * x;
  return 24.0 * x * (1.0 - x * x) / (q * q * q * q);
}
inline double rational_d4(double x) {
  const double q = 1.0 + x * x;
  const double x2 = x * x;
  return 24.0 * (5.0 * x2 * x2 - 10.0 * x2 + 1.0) / (q * q * q * q * q);
}
inline double atan_fn(double x) { return std::atan(x); }

}  // namespace detail

/// Names accepted by weight_by_name.
inline const std::array<std::string_view, 3>& weight_names() {
  static const std::array<std::string_view, 3> names{"one", "cos", "rational"};
  return names;
}

/// The closed registry: "one" (f = 1, F = x), "cos" (F = sin), "rational"
/// (f = 1/(1+x^2), F = arctan). Each has bounded derivatives of all orders.
inline WeightFunction weight_by_name(std::string_view name) {
  using namespace detail;
  if (name == "one") return WeightFunction("one", {one_fn, zero_fn, zero_fn, zero_fn, zero_fn}, identity_fn, 0.0);
  if (name == "cos") return WeightFunction("cos", {cos_fn, neg_sin_fn, neg_cos_fn, sin_fn, cos_fn}, sin_fn, 1.0);
  if (name == "rational") {
    return WeightFunction("rational", {rational_fn, rational_d1, rational_d2, rational_d3, rational_d4}, atan_fn,
                          24.0);
  }
  throw std::invalid_argument("unknown weight function '" + std::string(name) + "' (known: one, cos, rational)");
}

namespace detail {

inline void require_compatible(const FbmGrid& x, const CrossingRecord& rec) {
  if (x.level() != rec.level()) {
    std::ostringstream os;
    os << "fBm grid level " << x.level() << " does not match walk level " << rec.level();
    throw std::invalid_argument(os.str());
  }
  if (!x.contains(rec.min_position()) || !x.contains(rec.max_position())) {
    std::ostringstream os;
    os << "walk range [" << rec.min_position() << ", " << rec.max_position() << "] exceeds fBm span +-"
       << x.half_count();
    throw SpanExceeded(os.str());
  }
}

inline std::int64_t cells_for_time(const FbmGrid& x, double t) {
  return static_cast<std::int64_t>(std::floor(std::abs(t) / x.spacing() + 1e-9));
}

}  // namespace detail

/// V_n^{(r)}(f, t): sum over walk steps k of the trapezoid weight
/// (f(Z_{T_k}) + f(Z_{T_{k+1}}))/2 times (2^{nH/2} (Z_{T_{k+1}} - Z_{T_k}))^r - mu_r.
inline double v_statistic(const FbmGrid& x, const CrossingRecord& rec, const WeightFunction& f, int r) {
  if (r < 1) throw std::invalid_argument("v_statistic: r must be positive");
  detail::require_compatible(x, rec);
  const double s = increment_scale(x.hurst(), x.level());
  const double mu = gaussian_moment(r);
  const auto pos = rec.positions();
  CompensatedSum acc;
  double z_prev = x[pos[0]];
  double f_prev = f(z_prev);
  for (std::size_t k = 1; k < pos.size(); ++k) {
    const double z = x[pos[k]];
    const double fz = f(z);
    acc.add(0.5 * (f_prev + fz) * (int_pow(s * (z - z_prev), r) - mu));
    z_prev = z;
    f_prev = fz;
  }
  return acc.value();
}

/// The separated form: sum over cells j of Delta_j f * [(2^{nH/2} dX_j)^r - mu_r]
/// * (U_j + (-1)^r D_j).
inline double v_statistic_separated(const FbmGrid& x, const CrossingRecord& rec, const WeightFunction& f, int r) {
  if (r < 1) throw std::invalid_argument("v_statistic_separated: r must be positive");
  detail::require_compatible(x, rec);
  const double s = increment_scale(x.hurst(), x.level());
  const double mu = gaussian_moment(r);
  const std::int64_t sign = (r % 2 == 0) ? 1 : -1;
  CompensatedSum acc;
  for (std::int64_t j = rec.first_cell(); j < rec.end_cell(); ++j) {
    const std::int64_t weight = rec.up(j) + sign * rec.down(j);
    if (weight == 0) continue;
    const double a = x[j];
    const double b = x[j + 1];
    acc.add(0.5 * (f(a) + f(b)) * (int_pow(s * (b - a), r) - mu) * static_cast<double>(weight));
  }
  return acc.value();
}

/// W_n^{(order)}(f, .) over |cells| grid cells on the side given by the sign
/// of signed_cells: sum_j (f(X^+-_j) + f(X^+-_{j+1}))/2 H_order(X^{n,+-}_{j+1} - X^{n,+-}_j).
inline double w_statistic_cells(const FbmGrid& x, const WeightFunction& f, int order, std::int64_t signed_cells) {
  if (order < 1) throw std::invalid_argument("w_statistic: order must be positive");
  const std::int64_t dir = signed_cells < 0 ? -1 : 1;
  const std::int64_t cells = signed_cells < 0 ? -signed_cells : signed_cells;
  if (!x.contains(dir * cells)) {
    std::ostringstream os;
    os << "W statistic over " << signed_cells << " cells exceeds fBm span +-" << x.half_count();
    throw SpanExceeded(os.str());
  }
  const double s = increment_scale(x.hurst(), x.level());
  CompensatedSum acc;
  double a = x[0];
  double fa = f(a);
  for (std::int64_t j = 0; j < cells; ++j) {
    const double b = x[dir * (j + 1)];
    const double fb = f(b);
    acc.add(0.5 * (fa + fb) * hermite_eval(order, s * (b - a)));
    a = b;
    fa = fb;
  }
  return acc.value();
}

/// W_n^{(order)}(f, t) with the side chosen by the sign of t; covers
/// floor(2^{n/2} |t|) cells.
inline double w_statistic(const FbmGrid& x, const WeightFunction& f, int order, double t_signed) {
  const std::int64_t cells = detail::cells_for_time(x, t_signed);
  return w_statistic_cells(x, f, order, t_signed < 0 ? -cells : cells);
}

/// Right-hand side of the odd-order transform: sum_i kappa_{r,i} W^{(2i-1)}(f, Y_end),
/// with Y_end = j* 2^{-n/2}.
inline double v_odd_via_hermite(const FbmGrid& x, const CrossingRecord& rec, const WeightFunction& f, int r) {
  if (r < 1) throw std::invalid_argument("v_odd_via_hermite: r must be positive");
  detail::require_compatible(x, rec);
  CompensatedSum acc;
  for (int i = 1; i <= r; ++i) acc.add(kappa(r, i) * w_statistic_cells(x, f, 2 * i - 1, rec.j_star()));
  return acc.value();
}

struct IdentityDiscrepancy {
  double left = 0.0;
  double right = 0.0;
  [[nodiscard]] double absolute() const noexcept { return std::abs(left - right); }
  /// |left - right| / (1 + |left|).
  [[nodiscard]] double relative() const noexcept { return absolute() / (1.0 + std::abs(left)); }
};

/// Direct V_n^{(r)} against its cell-separated form.
inline IdentityDiscrepancy separation_identity_check(const FbmGrid& x, const CrossingRecord& rec,
                                                     const WeightFunction& f, int r) {
  return {v_statistic(x, rec, f, r), v_statistic_separated(x, rec, f, r)};
}

/// Direct V_n^{(2r-1)} against sum_i kappa_{r,i} W^{(2i-1)}(f, Y_end).
inline IdentityDiscrepancy transform_identity_check(const FbmGrid& x, const CrossingRecord& rec,
                                                    const WeightFunction& f, int r) {
  return {v_statistic(x, rec, f, 2 * r - 1), v_odd_via_hermite(x, rec, f, r)};
}

/// 2^{-n kappa_tilde} V_n^{(p)}(f, t).
inline double s_tilde_statistic(const FbmGrid& x, const CrossingRecord& rec, const WeightFunction& f, int p,
                                double kappa_tilde) {
  return std::exp2(-static_cast<double>(rec.level()) * kappa_tilde) * v_statistic(x, rec, f, p);
}

/// 2^{n kappa} sum_k Delta f [(Z_{T_{k+1}} - Z_{T_k})^p - E(.)^p] on raw
/// (unnormalised) increments along the stopping times. The centering is
/// mu_p 2^{-npH/2} since |Y_{T_{k+1}} - Y_{T_k}| = 2^{-n/2}.
inline double s_statistic(const FbmGrid& x, const CrossingRecord& rec, const WeightFunction& f, int p,
                          double kappa_exp) {
  if (p < 1) throw std::invalid_argument("s_statistic: p must be positive");
  detail::require_compatible(x, rec);
  const int n = rec.level();
  const double centering = gaussian_moment(p) * std::exp2(-0.5 * n * p * x.hurst().value());
  const auto pos = rec.positions();
  CompensatedSum acc;
  for (std::size_t k = 0; k + 1 < pos.size(); ++k) {
    const double a = x[pos[k]];
    const double b = x[pos[k + 1]];
    acc.add(0.5 * (f(a) + f(b)) * (int_pow(b - a, p) - centering));
  }
  return std::exp2(static_cast<double>(n) * kappa_exp) * acc.value();
}

/// E|N|^a = 2^{a/2} Gamma((a+1)/2) / sqrt(pi).
inline double gaussian_abs_moment(double a) {
  return std::exp2(0.5 * a) * std::tgamma(0.5 * (a + 1.0)) / std::sqrt(M_PI);
}

/// E[(Z_{(k+1)2^{-n}} - Z_{k2^{-n}})^p] = mu_p E|Y_{2^{-n}}|^{pH}
/// = mu_p 2^{-npH/2} E|N|^{pH}, by conditioning on Y.
inline double raw_increment_moment(Hurst hurst, int level, int p) {
  const double ph = p * hurst.value();
  return gaussian_moment(p) * std::exp2(-0.5 * level * ph) * gaussian_abs_moment(ph);
}

/// The raw-time statistic 2^{n kappa} sum_{k < floor(2^n t)} Delta f [(Z_{(k+1)2^{-n}}
/// - Z_{k2^{-n}})^p - E(.)^p], with Z read from X at the nearest grid point to
/// Y_{k 2^{-n}}. Requires a path-coupled record; the grid lookup adds a
/// discretisation bias of order the X grid spacing.
inline double s_statistic_raw(const FbmGrid& x, const CrossingRecord& rec, const WeightFunction& f, int p,
                              double kappa_exp) {
  if (p < 1) throw std::invalid_argument("s_statistic_raw: p must be positive");
  const auto& cp = rec.coupled();
  if (!cp) throw std::invalid_argument("s_statistic_raw: needs a path-coupled record");
  const int n = rec.level();
  const std::int64_t stride = std::int64_t{1} << (cp->fine_level - n);
  const std::int64_t count = walk_step_count(n, rec.horizon());
  if (count * stride >= static_cast<std::int64_t>(cp->y.size())) {
    throw std::out_of_range("s_statistic_raw: fine path shorter than the horizon");
  }
  const double centering = raw_increment_moment(x.hurst(), n, p);
  auto z_at = [&](std::int64_t k) { return x.at(x.nearest_index(cp->y[static_cast<std::size_t>(k * stride)])); };
  CompensatedSum acc;
  double a = z_at(0);
  for (std::int64_t k = 0; k < count; ++k) {
    const double b = z_at(k + 1);
    acc.add(0.5 * (f(a) + f(b)) * (int_pow(b - a, p) - centering));
    a = b;
  }
  return std::exp2(static_cast<double>(n) * kappa_exp) * acc.value();
}

enum class StatisticKind { kV, kWOdd, kS, kR };

inline const char* statistic_name(StatisticKind k) {
  switch (k) {
    case StatisticKind::kV: return "V";
    case StatisticKind::kWOdd: return "W";
    case StatisticKind::kS: return "S";
    default: return "R";
  }
}

/// One statistic tracked across a contiguous range of levels n.
struct VariationSeries {
  StatisticKind statistic = StatisticKind::kV;
  int order = 1;
  std::string weight;
  Hurst hurst{0.5};
  double horizon = 1.0;
  std::map<int, double> values;

  /// Adds the value at level n; levels must extend the range by one and values be finite.
  void push(int level, double value) {
    if (!std::isfinite(value)) {
      std::ostringstream os;
      os << statistic_name(statistic) << " series: non-finite value at n = " << level;
      throw std::invalid_argument(os.str());
    }
    if (!values.empty() && level != values.rbegin()->first + 1) {
      std::ostringstream os;
      os << statistic_name(statistic) << " series: level " << level << " does not extend range ending at "
         << values.rbegin()->first;
      throw std::invalid_argument(os.str());
    }
    values.emplace(level, value);
  }
};

}  // namespace fbmbt
