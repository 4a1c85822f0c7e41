#pragma once

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpls/error.hpp"
#include "mpls/model.hpp"

namespace mpls::cli {

namespace fs = std::filesystem;
using nlohmann::json;

class IoError : public Error {
public:
    using Error::Error;
};

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string() + ": " + std::strerror(errno));
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

inline void ensure_directory(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

namespace detail {

inline double parse_double(std::string_view field, const fs::path& path, std::size_t line)
{
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
        field.remove_suffix(1);
    }
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw ValidationError(path.string() + ":" + std::to_string(line) + ": not a number: '" + std::string(field) +
                              "'");
    }
    return v;
}

}  // namespace detail

/// Comma-separated rows, no header. Blank lines are skipped.
inline Matrix read_matrix_csv(const fs::path& path)
{
    const std::string text = read_text(path);
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            const std::string_view field(line.data() + start,
                                         (comma == std::string::npos ? line.size() : comma) - start);
            row.push_back(detail::parse_double(field, path, line_no));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(rows.front().size()) + " columns, found " +
                                  std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError(path.string() + ": empty matrix file");
    Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return M;
}

/// One value per line.
inline Vector read_vector_csv(const fs::path& path)
{
    const Matrix M = read_matrix_csv(path);
    if (M.cols() != 1) {
        throw ValidationError(path.string() + ": expected one value per line, found " + std::to_string(M.cols()) +
                              " columns");
    }
    return M.col(0);
}

inline std::string matrix_csv(const Matrix& M)
{
    std::string s;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (j) s += ',';
            s += format_double(M(i, j));
        }
        s += '\n';
    }
    return s;
}

inline std::string vector_csv(const Vector& v)
{
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        s += format_double(v[i]);
        s += '\n';
    }
    return s;
}

inline void write_matrix_csv(const fs::path& path, const Matrix& M) { write_text(path, matrix_csv(M)); }
inline void write_vector_csv(const fs::path& path, const Vector& v) { write_text(path, vector_csv(v)); }

inline json read_json(const fs::path& path)
{
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": invalid JSON: " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline json to_json(const Vector& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(std::isfinite(v[i]) ? json(v[i]) : json(nullptr));
    return a;
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline Vector vector_from_json(const json& j, const std::string& what)
{
    if (!j.is_array()) throw ValidationError(what + " must be an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ValidationError(what + "[" + std::to_string(i) + "] is not a number");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

}  // namespace mpls::cli
