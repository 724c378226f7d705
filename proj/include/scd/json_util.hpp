#pragma once

#include <filesystem>

#include <json.hpp>

namespace scd {

// Parse errors report line and column.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace scd
