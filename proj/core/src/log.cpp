#include "cinetransfer/log.h"

#include <atomic>
#include <iostream>
#include <mutex>

namespace cinetransfer {

namespace {

std::atomic<int> gLevel{static_cast<int>(LogLevel::Warn)};
std::mutex gSinkMutex;

const char* levelName(LogLevel level) {
  switch (level) {
    case LogLevel::Debug:
      return "debug";
    case LogLevel::Info:
      return "info";
    case LogLevel::Warn:
      return "warn";
    case LogLevel::Error:
      return "error";
    default:
      return "";
  }
}

} // namespace

void set_log_level(LogLevel level) {
  gLevel.store(static_cast<int>(level));
}

LogLevel log_level() {
  return static_cast<LogLevel>(gLevel.load());
}

void log_message(LogLevel level, std::string_view channel, std::string_view message) {
  if (static_cast<int>(level) < gLevel.load()) {
    return;
  }
  std::lock_guard<std::mutex> lock(gSinkMutex);
  std::cerr << "[" << levelName(level) << "][" << channel << "] " << message << '\n';
}

} // namespace cinetransfer
