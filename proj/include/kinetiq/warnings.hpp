#pragma once

#include <mutex>
#include <set>
#include <string>
#include <vector>

namespace kinetiq {

/// Process-wide sink for non-fatal conditions that should be reported once
/// per run (e.g. a parameter missing at some point). Thread-safe.
class WarningLog {
 public:
  static WarningLog& instance() {
    static WarningLog log;
    return log;
  }

  /// Records `message` unless an identical one was already recorded.
  void warn_once(const std::string& message) {
    std::lock_guard lock(mu_);
    if (seen_.insert(message).second) ordered_.push_back(message);
  }

  std::vector<std::string> drain() {
    std::lock_guard lock(mu_);
    auto out = std::move(ordered_);
    ordered_.clear();
    return out;
  }

  void reset() {
    std::lock_guard lock(mu_);
    seen_.clear();
    ordered_.clear();
  }

 private:
  std::mutex mu_;
  std::set<std::string> seen_;
  std::vector<std::string> ordered_;
};

}  // namespace kinetiq
