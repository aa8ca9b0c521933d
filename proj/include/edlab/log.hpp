#pragma once
// Minimal leveled logger. Level comes from the ED_LOG_LEVEL environment
// variable (error|warn|info|debug), default warn. Output goes to stderr so it
// never contaminates machine-readable stdout.

#include <string>

namespace edlab::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level level();
void set_level(Level lv);

void write(Level lv, const std::string& msg);

inline void error(const std::string& msg) { write(Level::Error, msg); }
inline void warn(const std::string& msg) { write(Level::Warn, msg); }
inline void info(const std::string& msg) { write(Level::Info, msg); }
inline void debug(const std::string& msg) { write(Level::Debug, msg); }

}  // namespace edlab::log
