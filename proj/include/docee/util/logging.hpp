#pragma once

#include <cstdarg>
#include <cstdio>
#include <string>

namespace docee::log {

enum class Level { Debug = 0, Info = 1, Warn = 2 };

// Threshold comes from the DOCEE_LOG environment variable
// ("debug" | "info" | "warn"), read once. Default: info.
Level threshold();

void emit(Level level, const std::string& message);

inline void debug(const std::string& m) { emit(Level::Debug, m); }
inline void info(const std::string& m) { emit(Level::Info, m); }
inline void warn(const std::string& m) { emit(Level::Warn, m); }

}  // namespace docee::log
