#pragma once
//
// CSV tables serialized with 12 significant digits. Formatting goes through
// snprintf("%.12g") so output is identical across runs and thread counts.

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mcmc::io {

class CsvTable {
public:
    using Cell = std::variant<double, long long, std::string>;

    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
        if (header_.empty()) throw std::invalid_argument("CsvTable: empty header");
    }

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }

    void add(std::vector<Cell> row) {
        if (row.size() != header_.size()) throw std::invalid_argument("CsvTable: row width differs from header");
        rows_.push_back(std::move(row));
    }

    static std::string format(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);  // no "-0"
        return buf;
    }

    std::string str() const {
        std::string out;
        for (std::size_t j = 0; j < header_.size(); ++j) out += (j ? "," : "") + header_[j];
        out += '\n';
        for (const auto& row : rows_) {
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (j) out += ',';
                if (const auto* d = std::get_if<double>(&row[j])) {
                    out += format(*d);
                } else if (const auto* i = std::get_if<long long>(&row[j])) {
                    out += std::to_string(*i);
                } else {
                    out += std::get<std::string>(row[j]);
                }
            }
            out += '\n';
        }
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

/// Reads a numeric CSV with a header row into named columns.
struct CsvColumns {
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;

    const std::vector<double>& column(const std::string& name) const {
        for (std::size_t j = 0; j < names.size(); ++j) {
            if (names[j] == name) return values[j];
        }
        throw std::invalid_argument("CSV has no column `" + name + "`");
    }
    bool has(const std::string& name) const {
        for (const auto& n : names) {
            if (n == name) return true;
        }
        return false;
    }
};

inline CsvColumns read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot read CSV `" + path + "`");
    CsvColumns out;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cur;
        for (char ch : s) {
            if (ch == ',') {
                cells.push_back(cur);
                cur.clear();
            } else if (ch != '\r') {
                cur += ch;
            }
        }
        cells.push_back(cur);
        return cells;
    };
    if (!std::getline(f, line)) throw std::invalid_argument("CSV `" + path + "` is empty");
    out.names = split(line);
    out.values.resize(out.names.size());
    int no = 1;
    while (std::getline(f, line)) {
        ++no;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != out.names.size()) {
            throw std::invalid_argument("CSV `" + path + "` line " + std::to_string(no) + ": wrong number of fields");
        }
        for (std::size_t j = 0; j < cells.size(); ++j) {
            try {
                std::size_t used = 0;
                out.values[j].push_back(std::stod(cells[j], &used));
                if (used != cells[j].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw std::invalid_argument("CSV `" + path + "` line " + std::to_string(no) + ": `" + cells[j] +
                                            "` is not a number");
            }
        }
    }
    return out;
}

}  // namespace mcmc::io
