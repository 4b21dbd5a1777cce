#include "ofrep/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "ofrep/common.hpp"

namespace ofrep::csv {

namespace {

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open '{}' for reading", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Table Table::read(const std::filesystem::path& path) { return parse(read_text(path), path.string()); }

Table Table::parse(std::string_view text, const std::string& origin) {
    Table t;
    t.origin_ = origin;
    std::size_t pos = 0;
    bool first = true;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (first) {
            t.header_ = std::move(fields);
            first = false;
            continue;
        }
        if (fields.size() != t.header_.size()) {
            throw Error(fmt::format("{}:{}: expected {} fields, got {}", origin, line_no, t.header_.size(),
                                    fields.size()));
        }
        t.rows_.push_back(std::move(fields));
    }
    if (first) throw Error(fmt::format("{}: missing CSV header", origin));
    return t;
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (header_[i] == name) return i;
    }
    throw Error(fmt::format("{}: missing column '{}'", origin_, name));
}

bool Table::has_column(std::string_view name) const {
    for (const auto& h : header_) {
        if (h == name) return true;
    }
    return false;
}

double Table::real(std::size_t row, std::size_t col) const {
    const std::string& s = rows_[row][col];
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error(fmt::format("{}: row {}: '{}' is not a number (column '{}')", origin_, row + 1, s,
                                header_[col]));
    }
    return v;
}

std::int64_t Table::integer(std::size_t row, std::size_t col) const {
    const std::string& s = rows_[row][col];
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error(fmt::format("{}: row {}: '{}' is not an integer (column '{}')", origin_, row + 1, s,
                                header_[col]));
    }
    return v;
}

std::string format_real(double v) {
    return fmt::format("{}", v);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot open '{}' for writing", path.string()));
    out << text;
    if (!out) throw Error(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace ofrep::csv
