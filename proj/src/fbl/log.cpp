#include "fbl/log.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace fbl::log {

namespace {

std::atomic<int> g_threshold{-1};
std::mutex g_mu;

Level parse_env() {
    const char* v = std::getenv("FEEDBACK_LAB_LOG");
    if (!v) return Level::Warn;
    if (!std::strcmp(v, "error")) return Level::Error;
    if (!std::strcmp(v, "warn")) return Level::Warn;
    if (!std::strcmp(v, "info")) return Level::Info;
    if (!std::strcmp(v, "debug")) return Level::Debug;
    return Level::Warn;
}

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

Level threshold() {
    int t = g_threshold.load(std::memory_order_relaxed);
    if (t < 0) {
        t = static_cast<int>(parse_env());
        g_threshold.store(t, std::memory_order_relaxed);
    }
    return static_cast<Level>(t);
}

void set_threshold(Level lv) { g_threshold.store(static_cast<int>(lv)); }

void write(Level lv, const std::string& msg) {
    if (static_cast<int>(lv) > static_cast<int>(threshold())) return;
    std::lock_guard<std::mutex> lock(g_mu);
    std::fprintf(stderr, "[fbl:%s] %s\n", tag(lv), msg.c_str());
}

}  // namespace fbl::log
