#include "pfmimo/cli/commands.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string_view>
#include <iostream>

int main(int argc, char** argv) {
  // PFMIMO_LOG: trace, debug, info, warn (default), error, critical or off
  auto logger = spdlog::stderr_color_mt("pfmimo");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("PFMIMO_LOG"); level != nullptr && *level != '\0') {
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string_view(level) != "off") {
      std::cerr << "warning: unknown PFMIMO_LOG level '" << level << "'\n";
    } else {
      spdlog::set_level(parsed);
    }
  }
  return pfmimo::cli::run(argc, argv, std::cout, std::cerr);
}
