#include "trustbeta/logging.hpp"

#include <cstdlib>
#include <spdlog/sinks/stdout_color_sinks.h>

namespace trustbeta::log {

void init_from_env() {
  auto logger = spdlog::stderr_color_mt("trustbeta");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("TRUSTBETA_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level)
                          : spdlog::level::warn);
}

}  // namespace trustbeta::log
