#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace deepqoe {

enum class Errc {
  // schema
  MissingColumn,
  UnparsableValue,
  UnknownCategoryValue,
  BadVectorDim,
  DegenerateField,
  TooFewRecords,
  NoGroupField,
  SingleGroup,
  BadSpec,
  // wordvec
  EmptyFile,
  InconsistentDim,
  MalformedLine,
  // diff
  ShapeMismatch,
  IndexOutOfRange,
  NonFinite,
  GraphNotRecorded,
  PreconditionViolation,
  // model
  IncompatibleExtractor,
  HeadMismatch,
  SchemaViolation,
  EmptyDataset,
  WrongHead,
  BadMagic,
  VersionUnsupported,
  CorruptPayload,
  // eval
  LengthMismatch,
  Empty,
  ConstantInput,
  // baselines
  DegenerateTitle,
  UnknownTitle,
  DimMismatch,
  TooFewPoints,
  // plumbing
  InvalidConfig,
  Io,
};

std::string_view errc_name(Errc code);

// Every failure surfaced by the library. Parse errors carry the 1-based data
// row (header excluded) and the column name.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Error(Errc code, const std::string& what, std::size_t row, std::string column);

  Errc code() const noexcept { return code_; }
  const std::optional<std::size_t>& row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  Errc code_;
  std::optional<std::size_t> row_;
  std::string column_;
};

}  // namespace deepqoe
