#include "docee/util/logging.hpp"

#include <cstdlib>
#include <cstring>
#include <mutex>

namespace docee::log {

Level threshold() {
  static Level cached = [] {
    const char* env = std::getenv("DOCEE_LOG");
    if (env == nullptr) return Level::Info;
    if (std::strcmp(env, "debug") == 0) return Level::Debug;
    if (std::strcmp(env, "warn") == 0) return Level::Warn;
    return Level::Info;
  }();
  return cached;
}

void emit(Level level, const std::string& message) {
  if (level < threshold()) return;
  static std::mutex mu;
  const char* tag = level == Level::Debug ? "debug" : level == Level::Info ? "info" : "warn";
  std::lock_guard<std::mutex> lock(mu);
  std::fprintf(stderr, "[docee %s] %s\n", tag, message.c_str());
}

}  // namespace docee::log
