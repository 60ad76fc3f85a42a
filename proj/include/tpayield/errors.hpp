#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace tpayield {

enum class ErrorCode {
  MissingColumn,
  UnknownLabel,
  OutOfRange,
  EmptyDataset,
  ParseError,
  InvalidArgument,
  DegenerateFeature,
  UnseenLabel,
  DegenerateInput,
  DegenerateTarget,
  NonConvergence,
  LengthMismatch,
  DimensionMismatch,
  NonFiniteLoss,
  MissingArtifact,
  Io,
};

/// Single exception type for the whole library; the code identifies the
/// failure class and row/column carry data-file context when available.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  Error(ErrorCode code, std::string message, long row, long column)
      : std::runtime_error(std::move(message)),
        code_(code),
        row_(row),
        column_(column) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<long> row() const noexcept { return row_; }
  std::optional<long> column() const noexcept { return column_; }

 private:
  ErrorCode code_;
  std::optional<long> row_;
  std::optional<long> column_;
};

const char* error_code_name(ErrorCode code);

}  // namespace tpayield
