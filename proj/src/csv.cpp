#include "bayes/csv.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bayes {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

} // namespace

const CsvColumn& CsvTable::column(const std::string& name) const {
    for (const auto& c : columns)
        if (c.name == name) return c;
    throw ingestion_error("csv: no column named " + name);
}

std::vector<double> CsvTable::numeric(const std::string& name) const {
    const CsvColumn& c = column(name);
    std::vector<double> out;
    out.reserve(c.values.size());
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        if (!c.values[i])
            throw ingestion_error("csv: missing value in column " + name + " at row " +
                                  std::to_string(i + 1));
        out.push_back(*c.values[i]);
    }
    return out;
}

CsvTable load_csv(const std::string& path, const std::vector<CsvColumnSpec>& schema) {
    std::ifstream in(path);
    if (!in) throw ingestion_error("csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ingestion_error("csv: empty file " + path);
    const auto header = split_line(line);
    if (header.size() != schema.size())
        throw ingestion_error("csv: header of " + path + " has " +
                              std::to_string(header.size()) + " columns, expected " +
                              std::to_string(schema.size()));
    for (std::size_t j = 0; j < schema.size(); ++j) {
        if (trim(header[j]) != schema[j].name)
            throw ingestion_error("csv: header column " + std::to_string(j + 1) + " is '" +
                                  trim(header[j]) + "', expected '" + schema[j].name + "'");
    }

    CsvTable table;
    table.columns.resize(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) table.columns[j].name = schema[j].name;

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split_line(line);
        if (fields.size() != schema.size())
            throw ingestion_error("csv: row " + std::to_string(row) + " of " + path + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(schema.size()));
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const std::string cell = trim(fields[j]);
            if (cell.empty()) {
                if (!schema[j].allow_missing)
                    throw ingestion_error("csv: missing value at row " + std::to_string(row) +
                                          ", column " + schema[j].name);
                table.columns[j].values.push_back(std::nullopt);
                continue;
            }
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end != cell.c_str() + cell.size() || !std::isfinite(v))
                throw ingestion_error("csv: non-numeric cell '" + cell + "' at row " +
                                      std::to_string(row) + ", column " + schema[j].name);
            table.columns[j].values.push_back(v);
        }
    }
    table.rows = row;
    return table;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& data) {
    std::ofstream out(path);
    if (!out) throw ingestion_error("csv: cannot write " + path);
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out << ',';
        out << header[j];
    }
    out << '\n';
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.cols(); ++j) {
            if (j) out << ',';
            const double v = data(i, j);
            if (!std::isnan(v)) out << format_double(v);
        }
        out << '\n';
    }
}

} // namespace bayes
