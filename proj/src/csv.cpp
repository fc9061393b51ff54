#include "specswap/csv.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "specswap/errors.hpp"

namespace specswap {

const std::vector<double>& CsvTable::column(const std::string& header) const {
    for (std::size_t i = 0; i < headers.size(); ++i) {
        if (headers[i] == header) return columns[i];
    }
    throw IoError("csv column '" + header + "' not found");
}

void write_columns_csv(const std::string& path,
                       const std::vector<std::string>& headers,
                       const std::vector<std::vector<double>>& columns) {
    if (headers.size() != columns.size() || headers.empty()) {
        throw IoError("csv writer needs one header per column");
    }
    std::size_t rows = columns[0].size();
    for (const auto& col : columns) {
        if (col.size() != rows) throw IoError("csv columns differ in length");
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << std::setprecision(17);
    for (std::size_t i = 0; i < headers.size(); ++i) {
        out << headers[i] << (i + 1 < headers.size() ? ',' : '\n');
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            out << columns[c][r] << (c + 1 < columns.size() ? ',' : '\n');
        }
    }
    if (!out) throw IoError("failed writing " + path);
}

void write_matrix_csv(const std::string& path, const std::string& row_name,
                      const std::vector<double>& row_values,
                      const std::string& col_name,
                      const std::vector<double>& col_values,
                      const std::string& value_name, const Eigen::MatrixXd& values) {
    if (static_cast<int>(row_values.size()) != values.rows() ||
        static_cast<int>(col_values.size()) != values.cols()) {
        throw IoError("matrix axes do not match the value shape");
    }
    std::vector<double> rows, cols, vals;
    rows.reserve(row_values.size() * col_values.size());
    for (std::size_t r = 0; r < row_values.size(); ++r) {
        for (std::size_t c = 0; c < col_values.size(); ++c) {
            rows.push_back(row_values[r]);
            cols.push_back(col_values[c]);
            vals.push_back(values(static_cast<int>(r), static_cast<int>(c)));
        }
    }
    write_columns_csv(path, {row_name, col_name, value_name}, {rows, cols, vals});
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty csv: " + path);
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) table.headers.push_back(cell);
    table.columns.resize(table.headers.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream row(line);
        std::size_t c = 0;
        while (std::getline(row, cell, ',')) {
            if (c >= table.columns.size()) {
                throw IoError(path + ": extra cell on line " + std::to_string(line_no));
            }
            try {
                table.columns[c].push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError(path + ": non-numeric cell on line " +
                              std::to_string(line_no));
            }
            ++c;
        }
        if (c != table.columns.size()) {
            throw IoError(path + ": short row on line " + std::to_string(line_no));
        }
    }
    return table;
}

}  // namespace specswap
