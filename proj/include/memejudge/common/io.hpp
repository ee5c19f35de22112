#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace memejudge {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path);
std::vector<std::uint8_t> read_binary_file(const fs::path& path);

// Writes via a sibling temp file followed by rename(2), so readers never see a partial file.
void write_file_atomic(const fs::path& path, std::string_view contents);

// One JSON object per line. Blank lines are skipped; a malformed line throws with its line number.
std::vector<json> read_jsonl(const fs::path& path);
void write_jsonl_atomic(const fs::path& path, const std::vector<json>& rows);

// Stable serialization used for everything that gets fingerprinted or byte-compared.
std::string canonical_dump(const json& value, int indent = -1);

// ISO-8601 UTC. Honors SOURCE_DATE_EPOCH so reproducible runs can pin it.
std::string utc_timestamp();

std::string trim(std::string_view s);
std::string rtrim(std::string_view s);
std::string to_lower(std::string_view s);

}  // namespace memejudge
