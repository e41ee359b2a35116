#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace facov {

// Error categories; the CLI maps them onto exit codes
// (1 usage, 2 data, 3 numerical).
enum class ErrorKind { usage = 1, data = 2, numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define FACOV_ERROR(Name, Kind)                           \
  struct Name : Error {                                   \
    explicit Name(std::string msg)                        \
        : Error(ErrorKind::Kind, std::move(msg)) {}       \
  }

FACOV_ERROR(DimensionMismatch, data);
FACOV_ERROR(TooFewObservations, data);
FACOV_ERROR(ParseError, data);
FACOV_ERROR(MissingColumn, data);
FACOV_ERROR(EmptyIntersection, data);
FACOV_ERROR(IoError, data);

FACOV_ERROR(SingularFactorGram, numerical);
FACOV_ERROR(SingularFactorCov, numerical);
FACOV_ERROR(SingularMatrix, numerical);
FACOV_ERROR(ZeroResidualVariance, numerical);
FACOV_ERROR(NotPositiveDefinite, numerical);
FACOV_ERROR(NotSymmetric, numerical);
FACOV_ERROR(NotPsd, numerical);
FACOV_ERROR(DegenerateFrontier, numerical);
FACOV_ERROR(DegenerateInverse, numerical);
FACOV_ERROR(MissingMoment, numerical);
FACOV_ERROR(NoConvergence, numerical);
FACOV_ERROR(RejectionStall, numerical);

FACOV_ERROR(InvalidTarget, usage);

#undef FACOV_ERROR

}  // namespace facov
