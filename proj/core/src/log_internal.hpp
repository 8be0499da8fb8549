#pragma once

#include <spdlog/spdlog.h>

#include "nsdp/log.hpp"

namespace nsdp::detail {

/// Shared stderr logger whose level tracks nsdp::log_level().
spdlog::logger& logger();

}  // namespace nsdp::detail
