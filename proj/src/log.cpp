#include "xfdd/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace xfdd::log {
namespace {

Level parse_env() {
  const char* env = std::getenv("XFDD_LOG");
  if (env == nullptr) return Level::kWarn;
  std::string v(env);
  if (v == "error") return Level::kError;
  if (v == "info") return Level::kInfo;
  if (v == "debug") return Level::kDebug;
  return Level::kWarn;
}

std::atomic<int>& level_slot() {
  static std::atomic<int> slot{static_cast<int>(parse_env())};
  return slot;
}

const char* tag(Level level) {
  switch (level) {
    case Level::kError: return "error";
    case Level::kWarn: return "warn";
    case Level::kInfo: return "info";
    case Level::kDebug: return "debug";
  }
  return "?";
}

}  // namespace

Level threshold() { return static_cast<Level>(level_slot().load()); }

void set_threshold(Level level) { level_slot().store(static_cast<int>(level)); }

void write(Level level, std::string_view msg) {
  if (static_cast<int>(level) > level_slot().load()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[xfdd " << tag(level) << "] " << msg << '\n';
}

}  // namespace xfdd::log
