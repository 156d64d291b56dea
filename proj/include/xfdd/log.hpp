#pragma once

#include <string_view>

namespace xfdd::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Threshold read once from XFDD_LOG (error|warn|info|debug); defaults to warn.
Level threshold();
void set_threshold(Level level);

void write(Level level, std::string_view msg);

inline void warn(std::string_view msg) { write(Level::kWarn, msg); }
inline void info(std::string_view msg) { write(Level::kInfo, msg); }
inline void debug(std::string_view msg) { write(Level::kDebug, msg); }

}  // namespace xfdd::log
