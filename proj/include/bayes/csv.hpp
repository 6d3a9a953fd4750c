#ifndef BAYES_CSV_HPP
#define BAYES_CSV_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bayes/errors.hpp"

namespace bayes {

/// Column of a typed CSV table; missing cells are empty optionals and are
/// only legal when the schema marks the column as allowing them.
struct CsvColumn {
    std::string name;
    std::vector<std::optional<double>> values;
};

struct CsvTable {
    std::vector<CsvColumn> columns;
    std::size_t rows = 0;

    const CsvColumn& column(const std::string& name) const;
    std::vector<double> numeric(const std::string& name) const; // throws on missing cells
};

struct CsvColumnSpec {
    std::string name;
    bool allow_missing = false;
};

/// Reads a headered CSV; header must match the schema exactly (order and
/// names). Type mismatches and illegal missing cells name the 1-based data
/// row and the column.
CsvTable load_csv(const std::string& path, const std::vector<CsvColumnSpec>& schema);

/// Full-precision decimal text; round-trips through strtod exactly.
std::string format_double(double v);

/// Writes a CSV with the given header; any NaN cell is emitted as empty.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& data);

} // namespace bayes

#endif
