#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "tod/errors.hpp"

namespace tod {

// Shortest round-trip decimal form via std::to_chars: locale-independent,
// '.' decimal point, parses back to the identical double. All CSV output
// goes through this so reruns are byte-identical.
inline std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw NumericError("fmt_double: to_chars failed");
    return std::string(buf, ptr);
}

// Hexfloat form for snapshot files (bit-exact by construction).
inline std::string fmt_double_hex(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
    if (ec != std::errc()) throw NumericError("fmt_double_hex: to_chars failed");
    return std::string(buf, ptr);
}

// Accepts both the general and the hexfloat forms written by the fmt_*
// helpers above (hexfloats carry a 'p' exponent marker).
inline double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    const bool hex = s.find('p') != std::string_view::npos || s.find('P') != std::string_view::npos;
    const auto fmt = hex ? std::chars_format::hex : std::chars_format::general;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, fmt);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("invalid number '" + std::string(s) + "' at " + where);
    return v;
}

inline long parse_long(std::string_view s, const std::string& where) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("invalid integer '" + std::string(s) + "' at " + where);
    return v;
}

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

// Comma-delimited, '.' decimal, header row, LF endings. Writes to a temp
// file and renames on close so readers never observe partial output.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header) : path_(path) {
        tmp_ = path + ".tmp";
        out_.open(tmp_, std::ios::binary);
        if (!out_) throw IoError("cannot open for write: " + tmp_);
        out_ << header << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << "\n";
    }

    void close() {
        if (closed_) return;
        out_.close();
        if (!out_) throw IoError("write failed: " + tmp_);
        if (std::rename(tmp_.c_str(), path_.c_str()) != 0)
            throw IoError("rename failed: " + path_);
        closed_ = true;
    }

    ~CsvWriter() {
        try {
            close();
        } catch (...) {
        }
    }

private:
    std::string path_;
    std::string tmp_;
    std::ofstream out_;
    bool closed_ = false;
};

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_text_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open for write: " + tmp);
        out << content;
        if (!out) throw IoError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("rename failed: " + path);
}

}  // namespace tod
