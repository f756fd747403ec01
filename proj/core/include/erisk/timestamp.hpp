#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace erisk {

/// UTC instant at second resolution.
using Timestamp = std::chrono::sys_seconds;

/// Accepts "YYYY-MM-DD HH:MM:SS" and ISO-8601 ("YYYY-MM-DDTHH:MM:SS" with
/// optional fractional seconds and a "Z" or "+HH:MM" offset). Surrounding
/// whitespace is ignored. Returns nullopt for anything else.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// "YYYY-MM-DD HH:MM:SS".
std::string format_timestamp(Timestamp t);

}  // namespace erisk
