#pragma once

#include <string_view>

namespace nsdp {

enum class LogLevel { Off, Info, Debug };

/// Parses "off" | "info" | "debug"; unknown strings map to Off.
LogLevel parse_log_level(std::string_view text);

/// Current level. Initialized from the NSDP_LOG environment variable on first
/// use; set_log_level overrides it.
LogLevel log_level();
void set_log_level(LogLevel level);

}  // namespace nsdp
