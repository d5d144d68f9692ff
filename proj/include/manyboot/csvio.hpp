#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "manyboot/projection.hpp"

namespace manyboot {

// Strict CSV: comma-separated, header required, UTF-8, decimal point, no
// thousands separators, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  long column_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv_file(const std::string& path);
CsvTable read_csv_text(const std::string& text);

// Extracts named numeric columns.  Rows with a missing (empty) cell in any
// selected column are skipped and counted into *rows_rejected; a non-empty
// cell that fails to parse as a number raises NonNumericCell.
Eigen::MatrixXd extract_columns(const CsvTable& table,
                                const std::vector<std::string>& names,
                                long* rows_rejected);

// Serializes a dataset with columns y, x1..xd, w1..wq (17 significant digits,
// lossless round-trip).
std::string dataset_to_csv(const Dataset& data);

// Reads a dataset back from the dataset_to_csv layout.
Dataset dataset_from_csv(const std::string& text);

// Formats a double with round-trip precision.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace manyboot
