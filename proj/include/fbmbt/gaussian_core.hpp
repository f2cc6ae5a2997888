#pragma once

// Two-sided fractional Brownian motion on dyadic grids: covariance kernels,
// the fGn autocovariance rho(k), inner products of indicator functions, and
// exact sampling by circulant embedding (dense Cholesky as fallback).

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmbt/errors.hpp"
#include "fbmbt/log.hpp"
#include "fbmbt/rng.hpp"

namespace fbmbt {

/// Hurst index, strictly inside (0, 1).
class Hurst {
 public:
  explicit Hurst(double value) : value_(value) {
    if (!(value > 0.0 && value < 1.0)) {
      std::ostringstream os;
      os << "Hurst index must lie in the open interval (0,1), got " << value;
      throw std::invalid_argument(os.str());
    }
  }
  [[nodiscard]] double value() const noexcept { return value_; }
  friend bool operator==(const Hurst&, const Hurst&) = default;

 private:
  double value_;
};

/// Grid spacing 2^{-n/2} of the level-n spatial lattice.
inline double grid_spacing(int level) { return std::exp2(-0.5 * static_cast<double>(level)); }

/// Normalisation 2^{nH/2}; maps grid increments to unit variance.
inline double increment_scale(Hurst hurst, int level) {
  return std::exp2(0.5 * static_cast<double>(level) * hurst.value());
}

/// E[X_t X_s] for two-sided fBm.
inline double cov(Hurst hurst, double t, double s) {
  const double two_h = 2.0 * hurst.value();
  return 0.5 * (std::pow(std::abs(s), two_h) + std::pow(std::abs(t), two_h) -
                std::pow(std::abs(t - s), two_h));
}

namespace detail {

// Lags at or below this use the three-term formula verbatim.
inline constexpr std::int64_t kRhoDirectLagLimit = 4096;

// rho(k) = sum_{j>=1} binom(2H, 2j) k^{2H-2j} for large |k|; avoids the
// cancellation of the three-term formula.
inline double rho_asymptotic(double h, double k) {
  const double two_h = 2.0 * h;
  double binom = 1.0;  // binom(2H, m), updated incrementally
  double sum = 0.0;
  const double k2inv = 1.0 / (k * k);
  double power = std::pow(k, two_h);
  for (int m = 1; m <= 40; ++m) {
    binom *= (two_h - (m - 1)) / m;
    if (m % 2 == 1) continue;
    power *= k2inv;
    const double term = binom * power;
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace detail

/// Autocovariance of unit-spacing fractional Gaussian noise,
/// rho(k) = (|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}) / 2. Symmetric bit-for-bit.
inline double rho(Hurst hurst, std::int64_t k) {
  const std::int64_t a = k < 0 ? -k : k;
  if (a == 0) return 1.0;
  const double x = static_cast<double>(a);
  if (a > detail::kRhoDirectLagLimit) return detail::rho_asymptotic(hurst.value(), x);
  const double two_h = 2.0 * hurst.value();
  return 0.5 * (std::pow(x + 1.0, two_h) + std::pow(x - 1.0, two_h) - 2.0 * std::pow(x, two_h));
}

/// <eps_u, delta_{(j+1)h}> = E[X_u (X_{(j+1)h} - X_{jh})], h = 2^{-n/2}.
inline double inner_eps_delta(Hurst hurst, int level, double u, std::int64_t j) {
  const double h = grid_spacing(level);
  return cov(hurst, u, static_cast<double>(j + 1) * h) - cov(hurst, u, static_cast<double>(j) * h);
}

/// <delta_{(k+1)h}, delta_{(l+1)h}> = 2^{-nH} rho(k-l).
inline double inner_delta_delta(Hurst hurst, int level, std::int64_t k, std::int64_t l) {
  return std::exp2(-static_cast<double>(level) * hurst.value()) * rho(hurst, k - l);
}

/// sum_{k,l < floor(2^{n/2} t)} |<delta_{k+1}, delta_{l+1}>|^r, evaluated in O(M) by lag.
inline double delta_delta_power_sum(Hurst hurst, int level, double t, int r) {
  const auto m = static_cast<std::int64_t>(std::floor(std::exp2(0.5 * level) * t + 1e-9));
  const double scale = std::pow(std::exp2(-static_cast<double>(level) * hurst.value()), r);
  double sum = static_cast<double>(m);  // lag 0, |rho(0)|^r = 1
  for (std::int64_t d = 1; d < m; ++d) {
    sum += 2.0 * static_cast<double>(m - d) * std::pow(std::abs(rho(hurst, d)), r);
  }
  return scale * sum;
}

/// sum_{k,l < floor(2^{n/2} t)} |<eps_{(k+shift)h}, delta_{(l+1)h}>| with shift in {0, 1}.
inline double eps_delta_abs_sum(Hurst hurst, int level, double t, int shift) {
  const auto m = static_cast<std::int64_t>(std::floor(std::exp2(0.5 * level) * t + 1e-9));
  const double h = grid_spacing(level);
  double sum = 0.0;
  for (std::int64_t k = 0; k < m; ++k) {
    const double u = static_cast<double>(k + shift) * h;
    for (std::int64_t l = 0; l < m; ++l) sum += std::abs(inner_eps_delta(hurst, level, u, l));
  }
  return sum;
}

/// Samples of two-sided fBm X_{jh}, j = -J..J, on the level-n grid h = 2^{-n/2}.
class FbmGrid {
 public:
  FbmGrid(Hurst hurst, int level, std::int64_t half_count, std::vector<double> values)
      : hurst_(hurst), level_(level), half_count_(half_count), values_(std::move(values)) {
    if (level < 0) throw std::invalid_argument("FbmGrid: level must be nonnegative");
    if (half_count < 0) throw std::invalid_argument("FbmGrid: half_count must be nonnegative");
    if (values_.size() != static_cast<std::size_t>(2 * half_count + 1)) {
      throw std::invalid_argument("FbmGrid: expected 2J+1 values");
    }
    if (values_[static_cast<std::size_t>(half_count)] != 0.0) {
      throw std::invalid_argument("FbmGrid: value at the origin must be exactly 0");
    }
  }

  [[nodiscard]] Hurst hurst() const noexcept { return hurst_; }
  [[nodiscard]] int level() const noexcept { return level_; }
  [[nodiscard]] double spacing() const { return grid_spacing(level_); }
  [[nodiscard]] std::int64_t half_count() const noexcept { return half_count_; }
  [[nodiscard]] double span() const { return static_cast<double>(half_count_) * spacing(); }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

  [[nodiscard]] bool contains(std::int64_t j) const noexcept { return j >= -half_count_ && j <= half_count_; }

  /// X at grid index j (time j * h). Throws SpanExceeded outside [-J, J].
  [[nodiscard]] double at(std::int64_t j) const {
    if (!contains(j)) {
      std::ostringstream os;
      os << "grid index " << j << " outside fBm span [-" << half_count_ << ", " << half_count_ << "]";
      throw SpanExceeded(os.str());
    }
    return values_[static_cast<std::size_t>(j + half_count_)];
  }

  /// Unchecked access; caller guarantees contains(j).
  [[nodiscard]] double operator[](std::int64_t j) const noexcept {
    return values_[static_cast<std::size_t>(j + half_count_)];
  }

  /// Nearest grid index to time s (ties away from zero).
  [[nodiscard]] std::int64_t nearest_index(double s) const {
    return static_cast<std::int64_t>(std::llround(s / spacing()));
  }

 private:
  Hurst hurst_;
  int level_;
  std::int64_t half_count_;
  std::vector<double> values_;
};

namespace detail {

// Complex DFT plan of fixed size. Planning is serialised (the FFTW planner is
// not reentrant); execution on caller-owned arrays is thread-safe.
class DftPlan {
 public:
  explicit DftPlan(std::size_t size) : size_(size) {
    std::vector<std::complex<double>> in(size), out(size);
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(size), reinterpret_cast<fftw_complex*>(in.data()),
                             reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan_ == nullptr) throw std::runtime_error("FFTW planning failed");
  }
  DftPlan(const DftPlan&) = delete;
  DftPlan& operator=(const DftPlan&) = delete;
  ~DftPlan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }

  [[nodiscard]] std::size_t size() const noexcept { return size_; }

  void forward(std::vector<std::complex<double>>& in, std::vector<std::complex<double>>& out) const {
    out.resize(size_);
    fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex mu;
    return mu;
  }
  std::size_t size_;
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

enum class FbmMethod { kAuto, kCirculant, kCholesky };

/// Reusable exact sampler for fBm on a fixed (H, level, span).
/// Factorisation is done once; sample() is const and safe to call concurrently.
class FbmGenerator {
 public:
  /// Relative threshold below which a negative embedding eigenvalue forces Cholesky.
  static constexpr double kNegativeEigenTolerance = 1e-10;

  FbmGenerator(Hurst hurst, int level, double span, FbmMethod method = FbmMethod::kAuto)
      : hurst_(hurst), level_(level) {
    if (!(span > 0.0)) throw std::invalid_argument("FbmGenerator: span must be positive");
    if (level < 0) throw std::invalid_argument("FbmGenerator: level must be nonnegative");
    const double h = grid_spacing(level);
    half_count_ = static_cast<std::int64_t>(std::floor(span / h + 1e-9));
    increments_ = static_cast<std::size_t>(2 * half_count_);
    const double var = std::pow(h, 2.0 * hurst.value());
    if (increments_ == 0) {
      method_ = FbmMethod::kCirculant;
      return;
    }
    if (method != FbmMethod::kCholesky && try_circulant(var)) {
      method_ = FbmMethod::kCirculant;
      return;
    }
    if (method == FbmMethod::kCirculant) {
      throw FactorizationError("circulant embedding is not nonnegative definite");
    }
    factor_cholesky(var);
    method_ = FbmMethod::kCholesky;
  }

  [[nodiscard]] Hurst hurst() const noexcept { return hurst_; }
  [[nodiscard]] int level() const noexcept { return level_; }
  [[nodiscard]] std::int64_t half_count() const noexcept { return half_count_; }
  [[nodiscard]] FbmMethod method() const noexcept { return method_; }
  [[nodiscard]] std::size_t embedding_size() const noexcept { return plan_ ? plan_->size() : 0; }

  /// One exact sample; the fGn sequence spans the whole grid [-L, L] and the
  /// cumulative sum is pinned so that X_0 = 0.
  [[nodiscard]] FbmGrid sample(Engine& rng) const {
    std::vector<double> noise = method_ == FbmMethod::kCholesky ? sample_cholesky(rng) : sample_circulant(rng);
    std::vector<double> values(increments_ + 1);
    double acc = 0.0;
    values[0] = 0.0;
    for (std::size_t i = 0; i < increments_; ++i) {
      acc += noise[i];
      values[i + 1] = acc;
    }
    const double origin = values[static_cast<std::size_t>(half_count_)];
    for (double& v : values) v -= origin;
    values[static_cast<std::size_t>(half_count_)] = 0.0;
    return FbmGrid(hurst_, level_, half_count_, std::move(values));
  }

 private:
  bool try_circulant(double var) {
    const std::size_t n = increments_;
    const std::size_t m = std::max<std::size_t>(2, std::bit_ceil(2 * (n > 1 ? n - 1 : 1)));
    std::vector<std::complex<double>> row(m), eig;
    for (std::size_t k = 0; k <= m / 2; ++k) {
      const double c = var * rho(hurst_, static_cast<std::int64_t>(k));
      row[k] = c;
      if (k > 0 && k < m / 2) row[m - k] = c;
    }
    auto plan = std::make_shared<detail::DftPlan>(m);
    plan->forward(row, eig);
    double max_eig = 0.0;
    for (const auto& e : eig) max_eig = std::max(max_eig, e.real());
    std::vector<double> sqrt_eig(m);
    std::size_t clamped = 0;
    for (std::size_t k = 0; k < m; ++k) {
      double lam = eig[k].real();
      if (lam < 0.0) {
        if (lam < -kNegativeEigenTolerance * max_eig) return false;
        lam = 0.0;
        ++clamped;
      }
      sqrt_eig[k] = std::sqrt(lam / static_cast<double>(m));
    }
    if (clamped > 0) {
      std::ostringstream os;
      os << "circulant embedding: clamped " << clamped << " slightly negative eigenvalue(s) to 0 (H="
         << hurst_.value() << ", level=" << level_ << ")";
      log_warning(os.str());
    }
    plan_ = std::move(plan);
    sqrt_eig_ = std::move(sqrt_eig);
    return true;
  }

  void factor_cholesky(double var) {
    const auto n = static_cast<Eigen::Index>(increments_);
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) c(i, j) = var * rho(hurst_, static_cast<std::int64_t>(i - j));
    }
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) {
      throw FactorizationError("Cholesky factorisation of the fGn covariance failed");
    }
    chol_ = std::make_shared<const Eigen::MatrixXd>(llt.matrixL());
  }

  std::vector<double> sample_circulant(Engine& rng) const {
    const std::size_t m = plan_->size();
    std::normal_distribution<double> gauss;
    std::vector<std::complex<double>> w(m), out;
    w[0] = sqrt_eig_[0] * gauss(rng);
    w[m / 2] = sqrt_eig_[m / 2] * gauss(rng);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t k = 1; k < m / 2; ++k) {
      const double a = gauss(rng);
      const double b = gauss(rng);
      const double s = sqrt_eig_[k] * inv_sqrt2;
      w[k] = {s * a, s * b};
      w[m - k] = {s * a, -s * b};
    }
    plan_->forward(w, out);
    std::vector<double> noise(increments_);
    for (std::size_t i = 0; i < increments_; ++i) noise[i] = out[i].real();
    return noise;
  }

  std::vector<double> sample_cholesky(Engine& rng) const {
    std::normal_distribution<double> gauss;
    Eigen::VectorXd g(static_cast<Eigen::Index>(increments_));
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = gauss(rng);
    const Eigen::VectorXd x = chol_->triangularView<Eigen::Lower>() * g;
    return {x.data(), x.data() + x.size()};
  }

  Hurst hurst_;
  int level_;
  std::int64_t half_count_ = 0;
  std::size_t increments_ = 0;
  FbmMethod method_ = FbmMethod::kAuto;
  std::shared_ptr<const detail::DftPlan> plan_;
  std::vector<double> sqrt_eig_;
  std::shared_ptr<const Eigen::MatrixXd> chol_;
};

/// Convenience wrapper: build a generator and draw one path.
inline FbmGrid generate_fbm(Hurst hurst, int level, double span, Engine& rng,
                            FbmMethod method = FbmMethod::kAuto) {
  return FbmGenerator(hurst, level, span, method).sample(rng);
}

}  // namespace fbmbt
