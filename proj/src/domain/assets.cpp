#include "rimr/assets.h"

#include <cstdlib>
#include <filesystem>
#include <map>

#include "rimr/error.h"
#include "rimr/serialize.h"

namespace rimr::detail {
const std::map<std::string, std::string_view, std::less<>>& embedded_assets();
}  // namespace rimr::detail

namespace rimr::assets {

std::string load(std::string_view name) {
  if (const char* dir = std::getenv("RIMR_ASSET_DIR"); dir != nullptr && *dir != '\0') {
    std::filesystem::path candidate = std::filesystem::path(dir) / std::string(name);
    if (std::filesystem::is_regular_file(candidate)) return read_text_file(candidate);
  }
  const auto& table = detail::embedded_assets();
  auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorCode::kIo, "unknown asset " + std::string(name));
  return std::string(it->second);
}

std::vector<std::string> embedded_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : detail::embedded_assets()) names.push_back(name);
  return names;
}

}  // namespace rimr::assets
