#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace fbmbt {

inline std::atomic<bool>& warnings_enabled() {
  static std::atomic<bool> enabled{true};
  return enabled;
}

inline void log_warning(std::string_view message) {
  if (!warnings_enabled().load(std::memory_order_relaxed)) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "fbmbt: warning: " << message << '\n';
}

}  // namespace fbmbt
