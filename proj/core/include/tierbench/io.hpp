#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tierbench::io {

struct JsonLine {
  std::size_t line_no;  // 1-based
  nlohmann::json value;
};

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames, so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Blank lines are skipped. Malformed lines raise SchemaError naming the line;
// a file without any record raises EmptyFile.
std::vector<JsonLine> read_jsonl(const std::filesystem::path& path);
std::vector<JsonLine> parse_jsonl(std::string_view text, std::string_view source_name);
std::string to_jsonl(const std::vector<nlohmann::json>& records);

std::vector<std::string> parse_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace tierbench::io
