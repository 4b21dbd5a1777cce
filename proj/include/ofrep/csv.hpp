#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ofrep::csv {

/// Header-addressed CSV table. No quoting support: every producer in this
/// project writes plain comma-separated numeric or identifier fields.
class Table {
public:
    static Table read(const std::filesystem::path& path);
    static Table parse(std::string_view text, const std::string& origin = "<memory>");

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;

    const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }
    double real(std::size_t row, std::size_t col) const;
    std::int64_t integer(std::size_t row, std::size_t col) const;

private:
    std::string origin_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Formats a double with the shortest representation that round-trips.
std::string format_real(double v);

std::string read_text(const std::filesystem::path& path);

/// Writes `text`, creating parent directories as needed.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ofrep::csv
