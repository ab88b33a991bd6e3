#include "asmqa/jsonl.hpp"

#include <sstream>

#include "asmqa/error.hpp"

namespace asmqa {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    if (in.bad()) throw Error(ErrorKind::io, "read failure on " + path.string());
    return lines;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    std::vector<Json> out;
    out.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
        try {
            out.push_back(Json::parse(lines[i]));
        } catch (const Json::parse_error& e) {
            throw Error(ErrorKind::data, path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

std::string dump_line(const Json& value) {
    return value.dump(-1, ' ', false, Json::error_handler_t::replace);
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorKind::io, "cannot write " + path.string());
}

void JsonlWriter::write(const Json& value) { write_raw(dump_line(value)); }

void JsonlWriter::write_raw(const std::string& line) {
    out_ << line << '\n';
    if (!out_) throw Error(ErrorKind::io, "write failure on " + path_.string());
}

void JsonlWriter::close() {
    out_.close();
    if (out_.fail()) throw Error(ErrorKind::io, "close failure on " + path_.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::io, "write failure on " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace asmqa
