#include "kinex/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace kinex {

namespace {

std::mutex sink_mutex;

WarningSink& sink() {
    static WarningSink s = [](std::string_view msg) {
        static const bool verbose = std::getenv("KINEX_VERBOSE") != nullptr;
        if (verbose) std::cerr << "kinex: warning: " << msg << '\n';
    };
    return s;
}

}  // namespace

void set_warning_sink(WarningSink s) {
    std::lock_guard lock(sink_mutex);
    sink() = std::move(s);
}

void warn(std::string_view message) {
    std::lock_guard lock(sink_mutex);
    if (sink()) sink()(message);
}

}  // namespace kinex
