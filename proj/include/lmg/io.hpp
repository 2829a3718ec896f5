#pragma once

// CSV tables with shortest round-trip numbers, SHA-256 content hashes and
// ISO-8601 timestamps for run manifests.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <openssl/evp.h>

#include "lmg/errors.hpp"

namespace lmg::io {

class IoError : public Error {
public:
    using Error::Error;
};

/// Shortest decimal that parses back to exactly v. NaN prints as "nan".
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw IoError("not a number: '" + s + "'");
    return v;
}

using Cell = std::variant<double, long, std::string>;

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != header.size()) throw Error("table row width does not match header");
        rows.push_back(std::move(row));
    }

    /// UTF-8, comma separated, header row, LF line endings.
    std::string to_csv() const {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
        out += '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) out += ',';
                if (auto d = std::get_if<double>(&r[i]))
                    out += format_double(*d);
                else if (auto l = std::get_if<long>(&r[i]))
                    out += std::to_string(*l);
                else
                    out += std::get<std::string>(r[i]);
            }
            out += '\n';
        }
        return out;
    }
};

/// Parsed CSV: header plus raw string fields.
struct CsvData {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw IoError("no column '" + name + "'");
    }
    double number(std::size_t row, const std::string& name) const { return parse_double(rows[row][column(name)]); }
};

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            f.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    f.push_back(cur);
    return f;
}

inline CsvData parse_csv(const std::string& text) {
    CsvData d;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') throw IoError("CSV must use LF line endings");
        if (first) {
            d.header = split_line(line);
            first = false;
            continue;
        }
        if (line.empty()) continue;
        auto f = split_line(line);
        if (f.size() != d.header.size()) throw IoError("CSV row width mismatch: " + line);
        d.rows.push_back(std::move(f));
    }
    if (first) throw IoError("empty CSV");
    return d;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + p.string());
    f << content;
    if (!f) throw IoError("write failed for " + p.string());
}

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
inline std::string iso8601(std::chrono::system_clock::time_point tp) {
    std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace lmg::io
