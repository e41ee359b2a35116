#include "facov/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace facov {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

bool parse_date(const std::string& s, long& out) {
  const std::string t = trim(s);
  if (t.size() < 6 || t.size() > 8) return false;
  if (!std::all_of(t.begin(), t.end(),
                   [](unsigned char c) { return std::isdigit(c); })) {
    return false;
  }
  out = std::stol(t);
  return true;
}

// The provider marks missing data as -99.99 or -999.
bool is_missing_marker(double v) {
  return v <= -99.0;
}

DatedTable load_table(const std::string& path, LoadOptions opts) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }

  DatedTable table;
  std::vector<std::string> header;
  std::string line;
  long line_no = 0;
  long last_date = -1;
  bool in_data = false;
  std::vector<std::string> pending_header;  // last non-data line seen

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      if (in_data) break;  // trailing annotation block (FF files)
      continue;
    }
    auto fields = split_csv_line(line);
    long date;
    if (!parse_date(fields[0], date)) {
      if (in_data) break;  // annotations after the data section
      pending_header = fields;  // header candidate; preamble lines drop out
      continue;
    }
    if (!in_data) {
      if (pending_header.size() < 2) {
        throw ParseError(path + ": no header line found before data at line " +
                         std::to_string(line_no));
      }
      header = pending_header;
      std::set<std::string> seen;
      for (std::size_t c = 1; c < header.size(); ++c) {
        const std::string name = trim(header[c]);
        if (name.empty()) {
          throw ParseError(path + ": empty column name in header");
        }
        if (!seen.insert(name).second) {
          throw ParseError(path + ": duplicate column name '" + name + "'");
        }
        table.names.push_back(name);
      }
      table.columns.resize(table.names.size());
      in_data = true;
    }
    if (fields.size() != header.size()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row(table.names.size());
    bool missing = false;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      double v;
      if (!parse_double(fields[c], v)) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": cannot parse value '" + fields[c] + "'");
      }
      if (is_missing_marker(v)) missing = true;
      row[c - 1] = v;
    }
    if (missing) {
      if (opts.missing == MissingPolicy::reject) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": missing-value marker present (use the drop "
                         "policy to skip such rows)");
      }
      continue;
    }
    if (date <= last_date) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": date " +
                       std::to_string(date) + " is not strictly increasing");
    }
    last_date = date;
    table.dates.push_back(date);
    for (std::size_t c = 0; c < row.size(); ++c) {
      table.columns[c].push_back(row[c]);
    }
  }
  if (!in_data || table.dates.empty()) {
    throw ParseError(path + ": no data rows found");
  }
  return table;
}

}  // namespace

const std::vector<double>& DatedTable::column(
    const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return columns[i];
  }
  throw MissingColumn("column '" + name + "' not present");
}

bool DatedTable::has_column(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

DatedTable load_factor_csv(const std::string& path, LoadOptions opts) {
  DatedTable table = load_table(path, opts);
  for (const char* required : {"Mkt-RF", "SMB", "HML"}) {
    if (!table.has_column(required)) {
      throw MissingColumn(path + ": required factor column '" +
                          std::string(required) + "' not found");
    }
  }
  return table;
}

DatedTable load_returns_csv(const std::string& path, LoadOptions opts) {
  return load_table(path, opts);
}

AlignResult align_and_excess(const DatedTable& factors,
                             const DatedTable& returns, bool subtract_rf) {
  if (subtract_rf && !factors.has_column("RF")) {
    throw MissingColumn("factor table has no RF column for excess returns");
  }
  std::unordered_map<long, std::size_t> factor_rows;
  for (std::size_t i = 0; i < factors.dates.size(); ++i) {
    factor_rows.emplace(factors.dates[i], i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> joined;
  for (std::size_t j = 0; j < returns.dates.size(); ++j) {
    auto it = factor_rows.find(returns.dates[j]);
    if (it != factor_rows.end()) {
      joined.emplace_back(it->second, j);
    }
  }
  if (joined.empty()) {
    throw EmptyIntersection("factor and return tables share no dates");
  }

  const std::size_t n = joined.size();
  AlignResult result;
  result.dropped_factor_dates = factors.dates.size() - n;
  result.dropped_return_dates = returns.dates.size() - n;

  const std::vector<std::string> factor_names = {"Mkt-RF", "SMB", "HML"};
  result.factors.data.resize(3, static_cast<Index>(n));
  for (std::size_t r = 0; r < factor_names.size(); ++r) {
    const auto& col = factors.column(factor_names[r]);
    for (std::size_t t = 0; t < n; ++t) {
      result.factors.data(static_cast<Index>(r), static_cast<Index>(t)) =
          col[joined[t].first];
    }
  }
  const std::vector<double>* rf =
      subtract_rf ? &factors.column("RF") : nullptr;
  result.returns.data.resize(static_cast<Index>(returns.names.size()),
                             static_cast<Index>(n));
  for (std::size_t a = 0; a < returns.names.size(); ++a) {
    for (std::size_t t = 0; t < n; ++t) {
      double v = returns.columns[a][joined[t].second];
      if (rf) v -= (*rf)[joined[t].first];
      result.returns.data(static_cast<Index>(a), static_cast<Index>(t)) = v;
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    const std::string stamp =
        std::to_string(returns.dates[joined[t].second]);
    result.factors.labels.push_back(stamp);
    result.returns.labels.push_back(stamp);
  }
  return result;
}

void write_matrix_csv(const MatrixXd& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << "# " << m.rows() << " " << m.cols() << "\r\n";
  char buf[40];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\r\n";
  }
  if (!out) {
    throw IoError("write failed for " + path);
  }
}

MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::string line;
  long rows = -1, cols = -1;
  std::vector<std::vector<double>> data;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      if (rows < 0) {
        std::istringstream dims(t.substr(1));
        dims >> rows >> cols;
      }
      continue;
    }
    auto fields = split_csv_line(t);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      double v;
      if (!parse_double(f, v)) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": cannot parse value '" + f + "'");
      }
      row.push_back(v);
    }
    if (!data.empty() && row.size() != data.front().size()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": ragged row");
    }
    data.push_back(std::move(row));
  }
  if (data.empty()) {
    if (rows == 0 || cols == 0) return MatrixXd(std::max(rows, 0L),
                                                std::max(cols, 0L));
    throw ParseError(path + ": no data rows");
  }
  MatrixXd m(static_cast<Index>(data.size()),
             static_cast<Index>(data.front().size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data[i].size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = data[i][j];
    }
  }
  if (rows >= 0 && (rows != m.rows() || cols != m.cols())) {
    throw ParseError(path + ": dimension header disagrees with data");
  }
  return m;
}

void write_vector_csv(const VectorXd& v, const std::string& path) {
  write_matrix_csv(v, path);
}

VectorXd read_vector_csv(const std::string& path) {
  const MatrixXd m = read_matrix_csv(path);
  if (m.cols() != 1) {
    throw ParseError(path + ": expected a single column");
  }
  return m.col(0);
}

}  // namespace facov
