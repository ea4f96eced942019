#pragma once

#include <stdexcept>
#include <string>

namespace proxest {

// Every library error carries a family so callers (the CLI in particular)
// can map failures to distinct exit codes without string matching.
enum class ErrorFamily { config, io, data, numeric };

class Error : public std::runtime_error {
public:
  Error(ErrorFamily family, const std::string& what)
      : std::runtime_error(what), family_(family) {}
  ErrorFamily family() const noexcept { return family_; }

private:
  ErrorFamily family_;
};

struct InvalidConfigError : Error {
  explicit InvalidConfigError(const std::string& w) : Error(ErrorFamily::config, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorFamily::io, w) {}
};

struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorFamily::data, w) {}
};
struct DimensionMismatchError : DataError {
  explicit DimensionMismatchError(const std::string& w) : DataError(w) {}
};
struct MissingTruthError : DataError {
  explicit MissingTruthError(const std::string& w) : DataError(w) {}
};
struct InsufficientDataError : DataError {
  explicit InsufficientDataError(const std::string& w) : DataError(w) {}
};
struct EmptySubgroupError : DataError {
  explicit EmptySubgroupError(const std::string& w) : DataError(w) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorFamily::numeric, w) {}
};
struct ZeroRowError : NumericError {
  explicit ZeroRowError(const std::string& w) : NumericError(w) {}
};
struct SingularMatrixError : NumericError {
  explicit SingularMatrixError(const std::string& w) : NumericError(w) {}
};
struct RankDeficientError : NumericError {
  explicit RankDeficientError(const std::string& w) : NumericError(w) {}
};
struct DegenerateCellError : NumericError {
  explicit DegenerateCellError(const std::string& w) : NumericError(w) {}
};
struct ExcessiveClampingError : NumericError {
  explicit ExcessiveClampingError(const std::string& w) : NumericError(w) {}
};
struct NonDiagonalizableError : NumericError {
  explicit NonDiagonalizableError(const std::string& w) : NumericError(w) {}
};
struct NonPositiveEigenvalueError : NumericError {
  explicit NonPositiveEigenvalueError(const std::string& w) : NumericError(w) {}
};
struct StochasticPowerError : NumericError {
  explicit StochasticPowerError(const std::string& w) : NumericError(w) {}
};
struct IllConditionedFitError : NumericError {
  explicit IllConditionedFitError(const std::string& w) : NumericError(w) {}
};
struct TooFewReplicatesError : NumericError {
  explicit TooFewReplicatesError(const std::string& w) : NumericError(w) {}
};
struct EnumerationTooLargeError : NumericError {
  explicit EnumerationTooLargeError(const std::string& w) : NumericError(w) {}
};

}  // namespace proxest
