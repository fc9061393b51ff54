#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace specswap {

// Numeric table, column-major. All CSV payloads here are plain doubles;
// anything structural goes in the header row.
struct CsvTable {
    std::vector<std::string> headers;
    std::vector<std::vector<double>> columns;

    int rows() const { return columns.empty() ? 0 : static_cast<int>(columns[0].size()); }
    const std::vector<double>& column(const std::string& header) const;
};

void write_columns_csv(const std::string& path,
                       const std::vector<std::string>& headers,
                       const std::vector<std::vector<double>>& columns);

// Long format: one row per cell, axis values spelled out.
void write_matrix_csv(const std::string& path, const std::string& row_name,
                      const std::vector<double>& row_values,
                      const std::string& col_name,
                      const std::vector<double>& col_values,
                      const std::string& value_name, const Eigen::MatrixXd& values);

CsvTable read_csv(const std::string& path);

}  // namespace specswap
