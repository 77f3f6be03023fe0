#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "deepqoe/rng.hpp"

namespace deepqoe::schema {

// --- field kinds --------------------------------------------------------------

struct TextKind {
  friend bool operator==(const TextKind&, const TextKind&) = default;
};
struct CategoricalKind {
  std::vector<std::string> vocab;
  friend bool operator==(const CategoricalKind&, const CategoricalKind&) = default;
};
struct ContinuousKind {
  friend bool operator==(const ContinuousKind&, const ContinuousKind&) = default;
};
struct VideoFeatureKind {
  std::size_t dim = 0;
  friend bool operator==(const VideoFeatureKind&, const VideoFeatureKind&) = default;
};

using FieldKind = std::variant<TextKind, CategoricalKind, ContinuousKind, VideoFeatureKind>;

std::string_view kind_name(const FieldKind& kind);

struct FieldSpec {
  std::string name;
  FieldKind kind;
  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

struct ClassificationLabel {
  std::size_t num_classes = 2;
  // Optional display names; when present they are accepted on input and
  // emitted on output in place of the numeric value.
  std::vector<std::string> class_names;
  // Integer value in the file that maps to class 0 (scores 1..5 -> 0..4).
  long base = 1;
  friend bool operator==(const ClassificationLabel&, const ClassificationLabel&) = default;
};
struct RegressionLabel {
  friend bool operator==(const RegressionLabel&, const RegressionLabel&) = default;
};

struct LabelSpec {
  std::string column = "score";
  std::variant<ClassificationLabel, RegressionLabel> kind;

  bool is_classification() const {
    return std::holds_alternative<ClassificationLabel>(kind);
  }
  std::size_t num_classes() const;  // 0 for regression
  friend bool operator==(const LabelSpec&, const LabelSpec&) = default;
};

inline constexpr std::string_view kIdColumn = "id";

class DatasetSchema {
 public:
  DatasetSchema() = default;
  // Validates every invariant; throws Error{BadSpec}.
  DatasetSchema(std::vector<FieldSpec> fields, LabelSpec label,
                std::optional<std::string> group_field = std::nullopt);

  const std::vector<FieldSpec>& fields() const noexcept { return fields_; }
  const LabelSpec& label() const noexcept { return label_; }
  const std::optional<std::string>& group_field() const noexcept { return group_field_; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws SchemaViolation
  const FieldSpec& field(std::string_view name) const { return fields_[index_of(name)]; }

  friend bool operator==(const DatasetSchema&, const DatasetSchema&) = default;

 private:
  std::vector<FieldSpec> fields_;
  LabelSpec label_;
  std::optional<std::string> group_field_;
};

using SchemaPtr = std::shared_ptr<const DatasetSchema>;

// --- records ------------------------------------------------------------------

// string for Text, vocab index for Categorical, real for Continuous, real
// vector for VideoFeature.
using FieldValue = std::variant<std::string, std::size_t, double, std::vector<double>>;
// class index for classification, real score for regression.
using Label = std::variant<std::size_t, double>;

struct JndAnnotation {
  JndAnnotation(double jnd1, double jnd2, double jnd3);  // throws BadSpec unless increasing
  double jnd1;
  double jnd2;
  double jnd3;
  friend bool operator==(const JndAnnotation&, const JndAnnotation&) = default;
};

struct Record {
  std::string id;
  std::vector<FieldValue> values;
  Label label;
  std::optional<JndAnnotation> jnd;
  friend bool operator==(const Record&, const Record&) = default;
};

std::size_t class_of(const Record& r);
double score_of(const Record& r);

// Throws SchemaViolation when the record breaks a Record invariant.
void validate_record(const Record& r, const DatasetSchema& schema);

struct Dataset {
  SchemaPtr schema;
  std::vector<Record> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  Dataset subset(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return *a.schema == *b.schema && a.records == b.records;
  }
};

// Group value of a record for leave-one-group-out: the text itself or the
// category's vocabulary string.
std::string group_value(const Record& r, const DatasetSchema& schema);

// --- video features -----------------------------------------------------------

class VideoFeatureTable {
 public:
  VideoFeatureTable(std::size_t dim, std::map<std::string, std::vector<double>> clips);
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<double>* find(const std::string& clip_id) const;
  const std::map<std::string, std::vector<double>>& clips() const noexcept { return clips_; }

 private:
  std::size_t dim_;
  std::map<std::string, std::vector<double>> clips_;
};

// "#dqfeat dim=<D>" then "clip_id<TAB>f1 f2 ... fD" per line.
VideoFeatureTable load_video_features(std::istream& in);
void write_video_features(std::ostream& out, const VideoFeatureTable& table);

// --- CSV ----------------------------------------------------------------------

// Columns not named by the schema are ignored, except `id` (record id; the
// 1-based data row number otherwise) and, for classification schemas without
// a label column, `qp,jnd1,jnd2,jnd3` from which the label is derived.
// VideoFeature cells hold either a clip id (resolved through `features`) or
// the vector inline as space-separated reals. With require_label=false a
// missing label column is allowed and every record gets class 0 or score 0.
Dataset parse_dataset(std::istream& in, SchemaPtr schema,
                      const VideoFeatureTable* features = nullptr, bool require_label = true);
void write_dataset(std::ostream& out, const Dataset& dataset);

// Shortest text form that parses back to the identical double.
std::string format_real(double v);
std::optional<double> parse_real(std::string_view text);
std::vector<std::string> split_line(std::string_view line, char delim);

// --- normalization ------------------------------------------------------------

struct NormStats {
  NormStats(std::string field, double min, double max);  // throws DegenerateField if max <= min
  std::string field;
  double min;
  double max;
  friend bool operator==(const NormStats&, const NormStats&) = default;
};

NormStats compute_norm_stats(const Dataset& dataset, std::string_view field);
double normalize(double value, const NormStats& stats);

// --- JND labeling -------------------------------------------------------------

enum class QoEClass { Excellent = 0, Good = 1, Fair = 2, Bad = 3 };

inline constexpr std::size_t kNumQoEClasses = 4;
std::string_view qoe_class_name(QoEClass c);
std::vector<std::string> qoe_class_names();

// Half-open bands: [jnd_k, jnd_k+1) belongs to the lower-quality class.
QoEClass jnd_to_class(double qp, const JndAnnotation& jnd);

// --- splits -------------------------------------------------------------------

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction,
                                  std::uint64_t seed);

struct Fold {
  Dataset train;
  Dataset test;
  std::string group;
};

// One fold per distinct group value, ordered by group value.
std::vector<Fold> leave_one_group_out(const Dataset& dataset);

// --- synthetic data -----------------------------------------------------------

enum class SyntheticTask { Classification, Regression, Jnd };

// WHU-like generator. For the score tasks
//   score = clamp(round(b0 + b1*nb + b2*type_offset[type] + b3*res_offset[res]
//                       + interaction*type_sign[type]*(nb - 0.5) + e), 1, 5)
// with nb the min-max normalized bitrate and e ~ uniform(-noise, noise); the
// regression task skips the rounding. The Jnd task draws a JND triple per
// (type, resolution) and an integer qp in [0, 51]; the label is
// jnd_to_class(qp, jnd).
struct SyntheticSpec {
  std::size_t n_records = 100;
  SyntheticTask task = SyntheticTask::Classification;
  std::vector<std::string> types = {"movie", "cartoon", "sport", "news"};
  std::vector<double> type_offsets = {0.0, 0.5, 1.0, -0.5};
  std::vector<double> type_signs = {1.0, -1.0, 1.0, -1.0};
  std::vector<std::string> resolutions = {"360P", "480P", "720P"};
  std::vector<double> resolution_offsets = {-0.5, 0.0, 0.5};
  double bitrate_min = 200.0;
  double bitrate_max = 2000.0;
  double b0 = 1.5;
  double b1 = 2.5;
  double b2 = 1.0;
  double b3 = 1.0;
  double interaction = 0.0;
  double noise = 0.5;
  bool user_fields = true;
  std::size_t nuisance_fields = 0;
  std::size_t video_dim = 0;
};

SchemaPtr synthetic_schema(const SyntheticSpec& spec);
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace deepqoe::schema
