#pragma once

#include <cstdio>
#include <string>

namespace fbl::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Reads FEEDBACK_LAB_LOG on first use (error|warn|info|debug). Default: warn.
Level threshold();
void set_threshold(Level lv);

void write(Level lv, const std::string& msg);

inline void error(const std::string& m) { write(Level::Error, m); }
inline void warn(const std::string& m) { write(Level::Warn, m); }
inline void info(const std::string& m) { write(Level::Info, m); }
inline void debug(const std::string& m) { write(Level::Debug, m); }

}  // namespace fbl::log
