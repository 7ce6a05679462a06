#include "hetlb/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace hetlb {

namespace {

std::atomic<LogLevel> g_level{LogLevel::Warn};
std::mutex g_mutex;

void emit(LogLevel level, const char* tag, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(g_level.load())) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << tag << msg << '\n';
}

}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_warn(const std::string& msg) { emit(LogLevel::Warn, "warning: ", msg); }
void log_info(const std::string& msg) { emit(LogLevel::Info, "", msg); }
void log_debug(const std::string& msg) { emit(LogLevel::Debug, "debug: ", msg); }

}  // namespace hetlb
