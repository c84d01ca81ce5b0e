#pragma once

#include <spdlog/spdlog.h>

namespace trustbeta::log {

// Reads TRUSTBETA_LOG (trace|debug|info|warn|error|off); default warn.
void init_from_env();

using spdlog::debug;
using spdlog::error;
using spdlog::info;
using spdlog::warn;

}  // namespace trustbeta::log
