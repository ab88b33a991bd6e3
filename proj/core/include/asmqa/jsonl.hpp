#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace asmqa {

using Json = nlohmann::json;

/// Reads all lines of a text file. Throws Error{io} if unreadable.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Parses every non-blank line as JSON. Throws Error{data} naming the line on bad JSON.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

/// Compact single-line dump with unescaped UTF-8.
std::string dump_line(const Json& value);

class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path);
    void write(const Json& value);
    void write_raw(const std::string& line);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace asmqa
