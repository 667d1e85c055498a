#pragma once

#include <string_view>

namespace cinetransfer {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

void set_log_level(LogLevel level);
LogLevel log_level();

void log_message(LogLevel level, std::string_view channel, std::string_view message);

inline void log_warn(std::string_view channel, std::string_view message) {
  log_message(LogLevel::Warn, channel, message);
}
inline void log_info(std::string_view channel, std::string_view message) {
  log_message(LogLevel::Info, channel, message);
}
inline void log_debug(std::string_view channel, std::string_view message) {
  log_message(LogLevel::Debug, channel, message);
}

} // namespace cinetransfer
