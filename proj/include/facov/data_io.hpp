#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "facov/estimators.hpp"

namespace facov {

// A date-indexed table parsed from a Fama-French style CSV.
struct DatedTable {
  std::vector<long> dates;  // YYYYMMDD, strictly increasing
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // one per name

  std::size_t rows() const { return dates.size(); }
  const std::vector<double>& column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

enum class MissingPolicy {
  reject,  // any -99.99 family marker is a parse error
  drop,    // rows containing markers are dropped (and counted)
};

struct LoadOptions {
  MissingPolicy missing = MissingPolicy::reject;
};

// Factor file: requires Mkt-RF, SMB, HML; RF optional. Leading comment
// lines before the header are tolerated.
DatedTable load_factor_csv(const std::string& path, LoadOptions opts = {});

// Return file: arbitrary asset column names.
DatedTable load_returns_csv(const std::string& path, LoadOptions opts = {});

struct AlignResult {
  FactorPanel factors;       // rows Mkt-RF, SMB, HML
  ReturnPanel returns;       // asset excess returns
  std::size_t dropped_factor_dates = 0;
  std::size_t dropped_return_dates = 0;
};

// Inner-join on dates; subtracts RF from the returns when requested.
AlignResult align_and_excess(const DatedTable& factors,
                             const DatedTable& returns,
                             bool subtract_rf = true);

// Matrix CSV round-trip at full double precision. The first line is a
// "# rows cols" comment.
void write_matrix_csv(const MatrixXd& m, const std::string& path);
MatrixXd read_matrix_csv(const std::string& path);

void write_vector_csv(const VectorXd& v, const std::string& path);
VectorXd read_vector_csv(const std::string& path);

}  // namespace facov
