#pragma once

// Probabilists' Hermite polynomials, Gaussian moments, exact Hermite
// expansions of monomials, and the limit-variance constants built on them.

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fbmbt/errors.hpp"
#include "fbmbt/gaussian_core.hpp"

namespace fbmbt {

inline constexpr int kMaxHermiteDegree = 64;

/// Constant of the critical H = 1/6 change-of-variable formula (literature value).
/// Used only by the qualitative H = 1/6 check.
inline constexpr double kCriticalKappa3 = 2.322;

namespace detail {

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("Hermite coefficient overflow (int64)");
  return out;
}

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("Hermite coefficient overflow (int64)");
  return out;
}

}  // namespace detail

/// Monomial coefficients of H_0..H_max, built from H_{p+1} = x H_p - p H_{p-1}.
class HermiteBasis {
 public:
  explicit HermiteBasis(int max_degree) : max_degree_(max_degree) {
    if (max_degree < 1) throw std::invalid_argument("HermiteBasis: max_degree must be positive");
    coeffs_.assign(static_cast<std::size_t>(max_degree + 1), {});
    coeffs_[0] = {1};
    coeffs_[1] = {0, 1};
    for (int p = 1; p < max_degree; ++p) {
      const auto& cur = coeffs_[static_cast<std::size_t>(p)];
      const auto& prev = coeffs_[static_cast<std::size_t>(p - 1)];
      std::vector<std::int64_t> next(static_cast<std::size_t>(p + 2), 0);
      for (std::size_t k = 0; k < cur.size(); ++k) next[k + 1] = cur[k];
      for (std::size_t k = 0; k < prev.size(); ++k) {
        next[k] = detail::checked_add(next[k], -detail::checked_mul(p, prev[k]));
      }
      coeffs_[static_cast<std::size_t>(p + 1)] = std::move(next);
    }
  }

  [[nodiscard]] int max_degree() const noexcept { return max_degree_; }

  /// Coefficient of x^k in H_p.
  [[nodiscard]] std::int64_t coefficient(int p, int k) const {
    check_degree(p);
    const auto& c = coeffs_[static_cast<std::size_t>(p)];
    return (k < 0 || static_cast<std::size_t>(k) >= c.size()) ? 0 : c[static_cast<std::size_t>(k)];
  }

  /// Horner evaluation of the stored monomial form.
  [[nodiscard]] double eval_monomial(int p, double x) const {
    check_degree(p);
    const auto& c = coeffs_[static_cast<std::size_t>(p)];
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + static_cast<double>(*it);
    return acc;
  }

 private:
  void check_degree(int p) const {
    if (p < 0 || p > max_degree_) {
      std::ostringstream os;
      os << "Hermite degree " << p << " exceeds basis maximum " << max_degree_;
      throw std::out_of_range(os.str());
    }
  }

  int max_degree_;
  std::vector<std::vector<std::int64_t>> coeffs_;
};

/// H_p(x) by the three-term recurrence.
inline double hermite_eval(int p, double x) {
  if (p < 0 || p > kMaxHermiteDegree) {
    std::ostringstream os;
    os << "Hermite degree " << p << " outside [0, " << kMaxHermiteDegree << "]";
    throw std::out_of_range(os.str());
  }
  if (p == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 1; k < p; ++k) {
    const double next = x * cur - static_cast<double>(k) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// mu_p = E[N^p]: 0 for odd p, (p-1)!! for even p.
inline double gaussian_moment(int p) {
  if (p < 0) throw std::invalid_argument("gaussian_moment: p must be nonnegative");
  if (p % 2 == 1) return 0.0;
  double acc = 1.0;
  for (int k = p - 1; k > 1; k -= 2) acc *= k;
  return acc;
}

/// Exact coefficients c_k with x^m = sum_k c_k H_k(x), via the inverted
/// recurrence x H_k = H_{k+1} + k H_{k-1}.
inline std::vector<std::int64_t> monomial_in_hermite(int m) {
  if (m < 0) throw std::invalid_argument("monomial_in_hermite: degree must be nonnegative");
  std::vector<std::int64_t> c{1};
  for (int d = 0; d < m; ++d) {
    std::vector<std::int64_t> next(c.size() + 1, 0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (c[k] == 0) continue;
      next[k + 1] = detail::checked_add(next[k + 1], c[k]);
      if (k > 0) next[k - 1] = detail::checked_add(next[k - 1], detail::checked_mul(static_cast<std::int64_t>(k), c[k]));
    }
    c = std::move(next);
  }
  return c;
}

/// kappa_{r,i}: coefficient of H_{2i-1} in x^{2r-1}.
inline double kappa(int r, int i) {
  if (r < 1 || i < 1 || i > r) throw std::invalid_argument("kappa: need 1 <= i <= r");
  return static_cast<double>(monomial_in_hermite(2 * r - 1)[static_cast<std::size_t>(2 * i - 1)]);
}

/// b_{2r,a}: coefficient of H_{2a} in x^{2r} (the H_0 coefficient is mu_{2r}).
inline double b_even(int r, int a) {
  if (r < 1 || a < 1 || a > r) throw std::invalid_argument("b_even: need 1 <= a <= r");
  return static_cast<double>(monomial_in_hermite(2 * r)[static_cast<std::size_t>(2 * a)]);
}

struct AlphaOptions {
  std::int64_t initial_truncation = std::int64_t{1} << 14;
  /// Work cap: the truncation never grows past this.
  std::int64_t max_truncation = std::int64_t{1} << 24;
  double relative_tolerance = 1e-10;
};

struct AlphaResult {
  double value = 0.0;           ///< alpha_m
  double lag_sum = 0.0;         ///< sum_{|a|<=K} rho(a)^m
  double tail_bound = 0.0;      ///< bound on sum_{|a|>K} |rho(a)|^m
  std::int64_t truncation = 0;  ///< K actually used
};

/// True when sum_a |rho(a)|^m converges, i.e. H < 1 - 1/(2m).
inline bool alpha_converges(Hurst hurst, int m) { return hurst.value() < 1.0 - 1.0 / (2.0 * m); }

/// alpha_m = sqrt(m! sum_{a in Z} rho(a)^m), truncated at |a| <= K with an
/// integral-comparison tail bound; K doubles until the bound is below tolerance.
inline AlphaResult alpha_detailed(Hurst hurst, int m, const AlphaOptions& opts = {}) {
  if (m < 1) throw std::invalid_argument("alpha: order must be positive");
  if (!alpha_converges(hurst, m)) {
    std::ostringstream os;
    os << "alpha_" << m << " diverges: sum of rho(a)^" << m << " is finite iff H < 1 - 1/(2*" << m
       << "), got H = " << hurst.value();
    throw DivergenceError(os.str());
  }
  const double h = hurst.value();
  if (m == 1) {
    // Telescopes: sum_{|a|<=K} rho(a) = (K+1)^{2H} - K^{2H} -> 0.
    const std::int64_t k = std::max<std::int64_t>(1, opts.initial_truncation);
    const double kd = static_cast<double>(k);
    const double partial = std::pow(kd + 1.0, 2.0 * h) - std::pow(kd, 2.0 * h);
    return AlphaResult{0.0, partial, partial, k};
  }
  const double decay = (2.0 - 2.0 * h) * m - 1.0;  // > 0 on the convergence range
  double sum = 1.0;
  double compensation = 0.0;
  auto add = [&](double v) {
    const double t = sum + v;
    compensation += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  };
  std::int64_t done = 0;
  std::int64_t k = std::max<std::int64_t>(1, opts.initial_truncation);
  while (true) {
    for (std::int64_t a = done + 1; a <= k; ++a) add(2.0 * std::pow(rho(hurst, a), m));
    done = k;
    const double total = sum + compensation;
    const double kd = static_cast<double>(k);
    const double envelope = std::max(std::abs(rho(hurst, k)) * std::pow(kd, 2.0 - 2.0 * h), std::abs(h * (2.0 * h - 1.0)));
    const double tail = envelope == 0.0 ? 0.0 : 2.0 * std::pow(envelope * 1.001, m) * std::pow(kd, -decay) / decay;
    if (tail <= opts.relative_tolerance * std::abs(total)) {
      double fact = 1.0;
      for (int q = 2; q <= m; ++q) fact *= q;
      return AlphaResult{std::sqrt(fact * total), total, tail, k};
    }
    if (k >= opts.max_truncation) {
      std::ostringstream os;
      os << "alpha_" << m << " at H = " << h << " unconverged at truncation " << k << " (tail bound " << tail
         << ")";
      throw UnconvergedError(os.str());
    }
    k = std::min(2 * k, opts.max_truncation);
  }
}

inline double alpha(Hurst hurst, int m, const AlphaOptions& opts = {}) { return alpha_detailed(hurst, m, opts).value; }

/// beta_{2r-1} = sqrt(sum_{l=2}^{r} kappa_{r,l}^2 alpha_{2l-1}^2), r >= 2.
inline double beta_odd(Hurst hurst, int r, const AlphaOptions& opts = {}) {
  if (r < 2) throw std::invalid_argument("beta_odd: r must be at least 2");
  double acc = 0.0;
  for (int l = 2; l <= r; ++l) {
    const double k = kappa(r, l);
    const double a = alpha(hurst, 2 * l - 1, opts);
    acc += k * k * a * a;
  }
  return std::sqrt(acc);
}

/// gamma_{2r} = sqrt(sum_{a=1}^{r} b_{2r,a}^2 alpha_{2a}^2), r >= 1.
inline double gamma_even(Hurst hurst, int r, const AlphaOptions& opts = {}) {
  if (r < 1) throw std::invalid_argument("gamma_even: r must be positive");
  double acc = 0.0;
  for (int a = 1; a <= r; ++a) {
    const double b = b_even(r, a);
    const double al = alpha(hurst, 2 * a, opts);
    acc += b * b * al * al;
  }
  return std::sqrt(acc);
}

enum class ConstantStatus { kFinite, kDivergent, kUnconverged };

inline const char* status_name(ConstantStatus s) {
  switch (s) {
    case ConstantStatus::kFinite: return "";
    case ConstantStatus::kDivergent: return "diverges";
    default: return "unconverged";
  }
}

/// All decomposition and limit constants for one (H, r).
struct LimitConstants {
  Hurst hurst{0.5};
  int r = 1;
  std::vector<double> mu;                    ///< mu[p], p = 0..4r
  std::vector<double> kappa;                 ///< kappa[i-1] = kappa_{r,i}
  std::vector<double> b;                     ///< b[a-1] = b_{2r,a}
  std::vector<std::optional<double>> alpha;  ///< alpha[m-1], m = 1..2r; empty where divergent
  std::optional<double> beta_odd;            ///< beta_{2r-1}; r >= 2 and all needed alphas finite
  std::optional<double> gamma_even;          ///< gamma_{2r}; all needed alphas finite
  std::vector<ConstantStatus> alpha_status;
  ConstantStatus beta_status = ConstantStatus::kDivergent;
  ConstantStatus gamma_status = ConstantStatus::kDivergent;
};

inline LimitConstants make_limit_constants(Hurst hurst, int r, const AlphaOptions& opts = {}) {
  if (r < 1) throw std::invalid_argument("make_limit_constants: r must be positive");
  LimitConstants out;
  out.hurst = hurst;
  out.r = r;
  for (int p = 0; p <= 4 * r; ++p) out.mu.push_back(gaussian_moment(p));
  for (int i = 1; i <= r; ++i) out.kappa.push_back(kappa(r, i));
  for (int a = 1; a <= r; ++a) out.b.push_back(b_even(r, a));
  // Near-critical sums that hit the work cap are recorded as unconverged, not thrown.
  for (int m = 1; m <= 2 * r; ++m) {
    if (!alpha_converges(hurst, m)) {
      out.alpha.emplace_back(std::nullopt);
      out.alpha_status.push_back(ConstantStatus::kDivergent);
      continue;
    }
    try {
      out.alpha.emplace_back(alpha(hurst, m, opts));
      out.alpha_status.push_back(ConstantStatus::kFinite);
    } catch (const UnconvergedError&) {
      out.alpha.emplace_back(std::nullopt);
      out.alpha_status.push_back(ConstantStatus::kUnconverged);
    }
  }
  // Weighted root-sum of squares over alpha_m; the worst missing status wins.
  auto combine = [&](auto&& orders_and_weights, std::optional<double>& value, ConstantStatus& status) {
    double acc = 0.0;
    status = ConstantStatus::kFinite;
    for (const auto& [m, w] : orders_and_weights) {
      const auto idx = static_cast<std::size_t>(m - 1);
      const auto st = out.alpha_status[idx];
      if (st == ConstantStatus::kDivergent) status = ConstantStatus::kDivergent;
      if (st == ConstantStatus::kUnconverged && status == ConstantStatus::kFinite) status = ConstantStatus::kUnconverged;
      if (out.alpha[idx]) acc += w * w * *out.alpha[idx] * *out.alpha[idx];
    }
    if (status == ConstantStatus::kFinite) value = std::sqrt(acc);
  };
  if (r >= 2) {
    std::vector<std::pair<int, double>> terms;
    for (int l = 2; l <= r; ++l) terms.emplace_back(2 * l - 1, out.kappa[static_cast<std::size_t>(l - 1)]);
    combine(terms, out.beta_odd, out.beta_status);
  }
  {
    std::vector<std::pair<int, double>> terms;
    for (int a = 1; a <= r; ++a) terms.emplace_back(2 * a, out.b[static_cast<std::size_t>(a - 1)]);
    combine(terms, out.gamma_even, out.gamma_status);
  }
  return out;
}

}  // namespace fbmbt
