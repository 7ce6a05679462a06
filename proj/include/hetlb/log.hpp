#pragma once

#include <string>

namespace hetlb {

enum class LogLevel { Quiet, Warn, Info, Debug };

void set_log_level(LogLevel level);
LogLevel log_level();

// Thread-safe line-oriented logging to stderr.
void log_warn(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace hetlb
