#include <cstdlib>

#include <spdlog/sinks/stdout_color_sinks.h>

#include "log_internal.hpp"

namespace nsdp {

namespace {

spdlog::level::level_enum to_spdlog(LogLevel level) {
  switch (level) {
    case LogLevel::Debug:
      return spdlog::level::debug;
    case LogLevel::Info:
      return spdlog::level::info;
    case LogLevel::Off:
      break;
  }
  return spdlog::level::off;
}

std::shared_ptr<spdlog::logger> make_logger() {
  auto sink = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
  auto lg = std::make_shared<spdlog::logger>("nsdp", sink);
  lg->set_pattern("[nsdp %l] %v");
  const char* env = std::getenv("NSDP_LOG");
  lg->set_level(to_spdlog(env ? parse_log_level(env) : LogLevel::Off));
  return lg;
}

std::shared_ptr<spdlog::logger>& instance() {
  static std::shared_ptr<spdlog::logger> lg = make_logger();
  return lg;
}

}  // namespace

LogLevel parse_log_level(std::string_view text) {
  if (text == "debug") return LogLevel::Debug;
  if (text == "info") return LogLevel::Info;
  return LogLevel::Off;
}

LogLevel log_level() {
  switch (instance()->level()) {
    case spdlog::level::trace:
    case spdlog::level::debug:
      return LogLevel::Debug;
    case spdlog::level::info:
      return LogLevel::Info;
    default:
      return LogLevel::Off;
  }
}

void set_log_level(LogLevel level) { instance()->set_level(to_spdlog(level)); }

namespace detail {

spdlog::logger& logger() { return *instance(); }

}  // namespace detail

}  // namespace nsdp
