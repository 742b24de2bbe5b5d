#pragma once

#include <optional>
#include <string_view>

namespace lessonweave::assets {

// Files compiled in from assets/, e.g. "catalog/en.json".
std::optional<std::string_view> find(std::string_view name);

}  // namespace lessonweave::assets
