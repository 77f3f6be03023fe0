#include "deepqoe/error.hpp"

namespace deepqoe {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::UnparsableValue: return "UnparsableValue";
    case Errc::UnknownCategoryValue: return "UnknownCategoryValue";
    case Errc::BadVectorDim: return "BadVectorDim";
    case Errc::DegenerateField: return "DegenerateField";
    case Errc::TooFewRecords: return "TooFewRecords";
    case Errc::NoGroupField: return "NoGroupField";
    case Errc::SingleGroup: return "SingleGroup";
    case Errc::BadSpec: return "BadSpec";
    case Errc::EmptyFile: return "EmptyFile";
    case Errc::InconsistentDim: return "InconsistentDim";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::NonFinite: return "NonFinite";
    case Errc::GraphNotRecorded: return "GraphNotRecorded";
    case Errc::PreconditionViolation: return "PreconditionViolation";
    case Errc::IncompatibleExtractor: return "IncompatibleExtractor";
    case Errc::HeadMismatch: return "HeadMismatch";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::WrongHead: return "WrongHead";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::CorruptPayload: return "CorruptPayload";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Empty: return "Empty";
    case Errc::ConstantInput: return "ConstantInput";
    case Errc::DegenerateTitle: return "DegenerateTitle";
    case Errc::UnknownTitle: return "UnknownTitle";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

namespace {
std::string decorate(Errc code, const std::string& what) {
  return std::string(errc_name(code)) + ": " + what;
}
}  // namespace

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(decorate(code, what)), code_(code) {}

Error::Error(Errc code, const std::string& what, std::size_t row, std::string column)
    : std::runtime_error(decorate(code, what + " (row " + std::to_string(row) +
                                            ", column '" + column + "')")),
      code_(code),
      row_(row),
      column_(std::move(column)) {}

}  // namespace deepqoe
