#include "edlab/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace edlab::log {

namespace {

Level parse_env() {
  const char* e = std::getenv("ED_LOG_LEVEL");
  if (!e) return Level::Warn;
  if (std::strcmp(e, "error") == 0) return Level::Error;
  if (std::strcmp(e, "warn") == 0) return Level::Warn;
  if (std::strcmp(e, "info") == 0) return Level::Info;
  if (std::strcmp(e, "debug") == 0) return Level::Debug;
  return Level::Warn;
}

Level g_level = parse_env();
std::mutex g_mutex;

const char* tag(Level lv) {
  switch (lv) {
    case Level::Error: return "error";
    case Level::Warn: return "warn";
    case Level::Info: return "info";
    case Level::Debug: return "debug";
  }
  return "?";
}

}  // namespace

Level level() { return g_level; }
void set_level(Level lv) { g_level = lv; }

void write(Level lv, const std::string& msg) {
  if (static_cast<int>(lv) > static_cast<int>(g_level)) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::fprintf(stderr, "[%s] %s\n", tag(lv), msg.c_str());
}

}  // namespace edlab::log
