#pragma once

#include <iostream>
#include <mutex>
#include <string>

namespace diva::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level& level() {
    static Level lvl = Level::warn;
    return lvl;
}

inline Level parse_level(const std::string& s) {
    if (s == "error") return Level::error;
    if (s == "warn") return Level::warn;
    if (s == "info") return Level::info;
    if (s == "debug") return Level::debug;
    return Level::warn;
}

namespace detail {
inline std::mutex& mutex() {
    static std::mutex m;
    return m;
}
inline void emit(const char* tag, const std::string& msg) {
    std::lock_guard<std::mutex> lock(mutex());
    std::cerr << tag << msg << '\n';
}
} // namespace detail

inline void error(const std::string& msg) {
    if (level() >= Level::error) detail::emit("[error] ", msg);
}
inline void warn(const std::string& msg) {
    if (level() >= Level::warn) detail::emit("[warn] ", msg);
}
inline void info(const std::string& msg) {
    if (level() >= Level::info) detail::emit("[info] ", msg);
}
inline void debug(const std::string& msg) {
    if (level() >= Level::debug) detail::emit("[debug] ", msg);
}

} // namespace diva::log
