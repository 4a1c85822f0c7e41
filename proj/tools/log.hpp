#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mpls/error.hpp"

namespace mpls::cli::log {

/// Stderr logger whose level comes from MPLS_LOG (error, warn, info, debug; default warn).
inline void init()
{
    auto logger = spdlog::stderr_color_mt("mpls");
    logger->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("MPLS_LOG")) {
        const std::string v(env);
        if (v == "error") {
            level = spdlog::level::err;
        } else if (v == "warn") {
            level = spdlog::level::warn;
        } else if (v == "info") {
            level = spdlog::level::info;
        } else if (v == "debug") {
            level = spdlog::level::debug;
        } else {
            throw ValidationError("MPLS_LOG must be one of error, warn, info, debug (got '" + v + "')");
        }
    }
    logger->set_level(level);
    spdlog::set_default_logger(logger);
}

inline void info(const std::string& msg) { spdlog::info(msg); }
inline void debug(const std::string& msg) { spdlog::debug(msg); }
inline void warn(const std::string& msg) { spdlog::warn(msg); }
inline void error(const std::string& msg) { spdlog::error(msg); }

}  // namespace mpls::cli::log
