#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "../core.hpp"

namespace hypmass::io {

// shortest decimal that reads back to the same double
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text) {
    double v = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw std::invalid_argument("not a number: '" + text + "'");
    return v;
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    CsvWriter& row(const std::vector<double>& values) {
        if (values.size() != header_.size()) throw std::invalid_argument("CsvWriter: row width mismatch");
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format_double(v));
        rows_.push_back(std::move(cells));
        return *this;
    }
    // mixed rows: text cells pass through untouched
    CsvWriter& row_text(std::vector<std::string> cells) {
        if (cells.size() != header_.size()) throw std::invalid_argument("CsvWriter: row width mismatch");
        rows_.push_back(std::move(cells));
        return *this;
    }

    std::string str() const {
        std::string out;
        append_line(out, header_);
        for (const auto& r : rows_) append_line(out, r);
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << str();
    }

    std::size_t size() const { return rows_.size(); }

private:
    static void append_line(std::string& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    }
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

inline Table read_csv(std::istream& in) {
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            t.header.push_back(cell);
        }
    }
    t.columns.assign(t.header.size(), {});
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t k = 0;
        while (std::getline(ss, cell, ',')) {
            if (k >= t.header.size())
                throw std::runtime_error("csv line " + std::to_string(lineno) + ": too many cells");
            try {
                t.columns[k++].push_back(parse_double(cell));
            } catch (const std::invalid_argument& e) {
                throw std::runtime_error("csv line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        if (k != t.header.size())
            throw std::runtime_error("csv line " + std::to_string(lineno) + ": too few cells");
    }
    return t;
}

inline Table read_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    return read_csv(f);
}

}  // namespace hypmass::io
