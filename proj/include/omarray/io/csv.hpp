#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace omarray::io
{

// 17 significant digits: round-trips every double and keeps files byte-stable.
inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using CsvCell = std::variant<double, long long, std::string>;

// Comma separated, header row, LF line endings.
class CsvTable
{
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<CsvCell> row)
    {
        if (row.size() != header_.size())
            throw std::invalid_argument("csv row has " + std::to_string(row.size()) + " cells, header has " +
                                        std::to_string(header_.size()));
        rows_.push_back(std::move(row));
    }

    std::size_t size() const { return rows_.size(); }
    const std::vector<std::string> &header() const { return header_; }

    std::string str() const
    {
        std::string out;
        append_line(out, header_);
        for (const auto &row : rows_) {
            std::vector<std::string> cells;
            cells.reserve(row.size());
            for (const auto &c : row)
                cells.push_back(cell_text(c));
            append_line(out, cells);
        }
        return out;
    }

private:
    static std::string cell_text(const CsvCell &c)
    {
        if (const auto *d = std::get_if<double>(&c))
            return format_double(*d);
        if (const auto *i = std::get_if<long long>(&c))
            return std::to_string(*i);
        return std::get<std::string>(c);
    }

    static void append_line(std::string &out, const std::vector<std::string> &cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                out += ',';
            out += cells[i];
        }
        out += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<CsvCell>> rows_;
};

inline void write_text_file(const std::string &path, const std::string &text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot write '" + path + "'");
    f << text;
    if (!f)
        throw std::runtime_error("write failed for '" + path + "'");
}

} // namespace omarray::io
