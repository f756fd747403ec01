#pragma once

#include <filesystem>
#include <string_view>

namespace erisk {

/// Locates a bundled data file (questionnaire, readability registry, word
/// list). Search order: $ERISK_DATA_DIR, the source tree, the install prefix.
/// Throws ConfigError when the file is nowhere to be found.
std::filesystem::path bundled_data(std::string_view name);

}  // namespace erisk
