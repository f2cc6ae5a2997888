#pragma once

#include <stdexcept>
#include <string>

namespace fbmbt {

/// A requested sum over lags diverges for the given Hurst index and order.
class DivergenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A truncated series did not reach its tolerance within the work cap.
class UnconvergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A walk or evaluation point fell outside the sampled fBm grid.
/// The harness reacts by regenerating with a wider span.
class SpanExceeded : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Covariance factorisation failed (both circulant embedding and Cholesky).
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration. The message names the violated range.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace fbmbt
