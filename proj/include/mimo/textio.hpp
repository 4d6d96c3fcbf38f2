#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "errors.hpp"

namespace mimo {

/// Shortest decimal form that parses back to the identical double. Keeps CSV
/// and JSON output byte-stable across runs and locales.
inline std::string format_double(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw IoError("failed to read file: " + path);
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out.good()) throw IoError("failed to write file: " + path);
}

}  // namespace mimo
