#include "erisk/data.hpp"

#include <cstdlib>
#include <string>

#include "erisk/error.hpp"

namespace erisk {

std::filesystem::path bundled_data(std::string_view name) {
  std::string tried;
  auto probe = [&](const std::filesystem::path& dir) -> std::filesystem::path {
    auto candidate = dir / name;
    tried += " " + candidate.string();
    return std::filesystem::exists(candidate) ? candidate : std::filesystem::path{};
  };
  if (const char* env = std::getenv("ERISK_DATA_DIR"); env && *env) {
    if (auto p = probe(env); !p.empty()) return p;
  }
  if (auto p = probe(ERISK_SOURCE_DATA_DIR); !p.empty()) return p;
  if (auto p = probe(ERISK_INSTALL_DATA_DIR); !p.empty()) return p;
  throw ConfigError("bundled data file '" + std::string(name) + "' not found; tried" + tried);
}

}  // namespace erisk
