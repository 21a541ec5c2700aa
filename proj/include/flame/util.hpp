#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "flame/error.hpp"

namespace flame {

namespace fs = std::filesystem;

// 64-bit FNV-1a. Fixed seed so every hash-derived artifact (line vectors,
// local embeddings, mock digests) is stable across runs and platforms.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

inline std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string rstrip(std::string_view s) {
    std::size_t end = s.size();
    while (end > 0 && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(0, end));
}

inline std::string lstrip(std::string_view s) {
    std::size_t begin = 0;
    while (begin < s.size() && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    return std::string(s.substr(begin));
}

inline std::string strip(std::string_view s) { return rstrip(lstrip(s)); }

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

// CRLF / lone-CR normalized to LF.
inline std::string normalize_newlines(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            out.push_back('\n');
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

// Splits into lines after newline normalization. One trailing newline does
// not produce an extra empty line: "a\nb\n" -> {"a", "b"}, "" -> {}.
inline std::vector<std::string> split_lines(std::string_view text) {
    std::string norm = normalize_newlines(text);
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < norm.size()) {
        std::size_t nl = norm.find('\n', pos);
        if (nl == std::string::npos) {
            lines.push_back(norm.substr(pos));
            return lines;
        }
        lines.push_back(norm.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out += lines[i];
        if (i + 1 < lines.size()) out += '\n';
    }
    return out;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline fs::path make_temp_dir(const std::string& prefix) {
    std::string tmpl = (fs::temp_directory_path() / (prefix + "XXXXXX")).string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw Error("cannot create temp directory");
    return fs::path(buf.data());
}

// Removes the directory tree on scope exit.
class ScopedTempDir {
  public:
    explicit ScopedTempDir(const std::string& prefix = "flame-") : path_(make_temp_dir(prefix)) {}
    ~ScopedTempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    ScopedTempDir(const ScopedTempDir&) = delete;
    ScopedTempDir& operator=(const ScopedTempDir&) = delete;

    const fs::path& path() const { return path_; }

  private:
    fs::path path_;
};

// Byte-cap with an explicit elision marker once the cap is hit.
inline constexpr const char* kTruncationMarker = "…[truncated]";

inline std::string truncate_bytes(std::string_view text, std::size_t cap) {
    if (text.size() <= cap) return std::string(text);
    return std::string(text.substr(0, cap)) + kTruncationMarker;
}

} // namespace flame
