#include "manyboot/csvio.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "manyboot/errors.hpp"

namespace manyboot {

long CsvTable::column_index(const std::string& name) const {
  for (size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return long(j);
  }
  return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_number(const std::string& cell, double* out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t')) --last;
  if (first == last) return false;
  auto [ptr, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

CsvTable read_csv_text(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!have_header) {
      table.header = split_line(line);
      if (table.header.size() == 1 && table.header[0].empty()) {
        throw SchemaMismatch("empty CSV header");
      }
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size()) {
      throw SchemaMismatch("line " + std::to_string(lineno) + " has " +
                           std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw SchemaMismatch("empty CSV input");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  return read_csv_text(read_text_file(path));
}

Eigen::MatrixXd extract_columns(const CsvTable& table,
                                const std::vector<std::string>& names,
                                long* rows_rejected) {
  std::vector<long> idx;
  for (const auto& name : names) {
    long j = table.column_index(name);
    if (j < 0) throw MissingColumn(name);
    idx.push_back(j);
  }
  std::vector<std::vector<double>> kept;
  long rejected = 0;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::vector<double> vals(idx.size());
    bool missing = false;
    for (size_t k = 0; k < idx.size(); ++k) {
      const std::string& cell = row[idx[k]];
      std::string trimmed;
      for (char ch : cell) {
        if (ch != ' ' && ch != '\t') trimmed.push_back(ch);
      }
      if (trimmed.empty()) {
        missing = true;
        break;
      }
      if (!parse_number(cell, &vals[k])) {
        throw NonNumericCell(names[k], long(r) + 1, cell);
      }
    }
    if (missing) {
      ++rejected;
      continue;
    }
    kept.push_back(std::move(vals));
  }
  if (rows_rejected) *rows_rejected = rejected;
  Eigen::MatrixXd out(long(kept.size()), long(names.size()));
  for (size_t r = 0; r < kept.size(); ++r) {
    for (size_t k = 0; k < names.size(); ++k) out(long(r), long(k)) = kept[r][k];
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream out;
  out << "y";
  for (long j = 0; j < data.X.cols(); ++j) out << ",x" << (j + 1);
  for (long j = 0; j < data.W.cols(); ++j) out << ",w" << (j + 1);
  out << "\n";
  for (long i = 0; i < data.n(); ++i) {
    out << format_double(data.y[i]);
    for (long j = 0; j < data.X.cols(); ++j)
      out << "," << format_double(data.X(i, j));
    for (long j = 0; j < data.W.cols(); ++j)
      out << "," << format_double(data.W(i, j));
    out << "\n";
  }
  return out.str();
}

Dataset dataset_from_csv(const std::string& text) {
  CsvTable table = read_csv_text(text);
  std::vector<std::string> xs, ws;
  for (const auto& name : table.header) {
    if (name.size() > 1 && name[0] == 'x') xs.push_back(name);
    else if (name.size() > 1 && name[0] == 'w') ws.push_back(name);
  }
  long rejected = 0;
  Dataset data;
  data.y = extract_columns(table, {"y"}, &rejected).col(0);
  data.X = extract_columns(table, xs, &rejected);
  data.W = extract_columns(table, ws, &rejected);
  return data;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path);
  out << content;
  if (!out) throw InputError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace manyboot
