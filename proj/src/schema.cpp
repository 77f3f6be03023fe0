#include "deepqoe/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "deepqoe/error.hpp"

namespace deepqoe::schema {

std::string_view kind_name(const FieldKind& kind) {
  switch (kind.index()) {
    case 0: return "text";
    case 1: return "categorical";
    case 2: return "continuous";
    default: return "video";
  }
}

std::size_t LabelSpec::num_classes() const {
  if (const auto* c = std::get_if<ClassificationLabel>(&kind)) return c->num_classes;
  return 0;
}

DatasetSchema::DatasetSchema(std::vector<FieldSpec> fields, LabelSpec label,
                             std::optional<std::string> group_field)
    : fields_(std::move(fields)), label_(std::move(label)), group_field_(std::move(group_field)) {
  std::set<std::string> seen;
  for (const auto& f : fields_) {
    if (f.name.empty()) throw Error(Errc::BadSpec, "field with empty name");
    if (f.name == kIdColumn) throw Error(Errc::BadSpec, "'id' is reserved for record ids");
    if (f.name == label_.column) {
      throw Error(Errc::BadSpec, "field '" + f.name + "' collides with the label column");
    }
    if (!seen.insert(f.name).second) throw Error(Errc::BadSpec, "duplicate field '" + f.name + "'");
    if (const auto* c = std::get_if<CategoricalKind>(&f.kind)) {
      if (c->vocab.empty()) throw Error(Errc::BadSpec, "empty vocabulary for '" + f.name + "'");
      std::set<std::string> words(c->vocab.begin(), c->vocab.end());
      if (words.size() != c->vocab.size()) {
        throw Error(Errc::BadSpec, "duplicate vocabulary entry in '" + f.name + "'");
      }
    }
    if (const auto* v = std::get_if<VideoFeatureKind>(&f.kind); v && v->dim == 0) {
      throw Error(Errc::BadSpec, "video feature '" + f.name + "' has dim 0");
    }
  }
  if (label_.column.empty()) throw Error(Errc::BadSpec, "empty label column name");
  if (const auto* c = std::get_if<ClassificationLabel>(&label_.kind)) {
    if (c->num_classes < 2) throw Error(Errc::BadSpec, "classification needs >= 2 classes");
    if (!c->class_names.empty() && c->class_names.size() != c->num_classes) {
      throw Error(Errc::BadSpec, "class_names length differs from num_classes");
    }
  }
  if (group_field_) {
    auto idx = find(*group_field_);
    if (!idx) throw Error(Errc::BadSpec, "group field '" + *group_field_ + "' is not a field");
    const auto& kind = fields_[*idx].kind;
    if (!std::holds_alternative<TextKind>(kind) && !std::holds_alternative<CategoricalKind>(kind)) {
      throw Error(Errc::BadSpec, "group field must be text or categorical");
    }
  }
}

std::optional<std::size_t> DatasetSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t DatasetSchema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(Errc::SchemaViolation, "no field named '" + std::string(name) + "'");
}

JndAnnotation::JndAnnotation(double a, double b, double c) : jnd1(a), jnd2(b), jnd3(c) {
  if (!(jnd1 < jnd2 && jnd2 < jnd3)) {
    throw Error(Errc::BadSpec, "JND points must be strictly increasing");
  }
}

std::size_t class_of(const Record& r) {
  if (const auto* c = std::get_if<std::size_t>(&r.label)) return *c;
  throw Error(Errc::WrongHead, "record carries a regression label");
}

double score_of(const Record& r) {
  if (const auto* s = std::get_if<double>(&r.label)) return *s;
  throw Error(Errc::WrongHead, "record carries a class label");
}

void validate_record(const Record& r, const DatasetSchema& schema) {
  const auto& fields = schema.fields();
  auto fail = [&](const std::string& what) {
    throw Error(Errc::SchemaViolation, "record '" + r.id + "': " + what);
  };
  if (r.values.size() != fields.size()) fail("value count differs from field count");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto& kind = fields[i].kind;
    const auto& v = r.values[i];
    if (std::holds_alternative<TextKind>(kind)) {
      if (!std::holds_alternative<std::string>(v)) fail(fields[i].name + " must be text");
    } else if (const auto* c = std::get_if<CategoricalKind>(&kind)) {
      const auto* idx = std::get_if<std::size_t>(&v);
      if (!idx || *idx >= c->vocab.size()) fail(fields[i].name + " category out of range");
    } else if (std::holds_alternative<ContinuousKind>(kind)) {
      const auto* x = std::get_if<double>(&v);
      if (!x || !std::isfinite(*x)) fail(fields[i].name + " must be a finite real");
    } else {
      const auto dim = std::get<VideoFeatureKind>(kind).dim;
      const auto* vec = std::get_if<std::vector<double>>(&v);
      if (!vec || vec->size() != dim) fail(fields[i].name + " vector length mismatch");
    }
  }
  if (const auto* c = std::get_if<ClassificationLabel>(&schema.label().kind)) {
    const auto* k = std::get_if<std::size_t>(&r.label);
    if (!k || *k >= c->num_classes) fail("class label out of range");
  } else if (!std::holds_alternative<double>(r.label)) {
    fail("regression label must be real");
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out{schema, {}};
  out.records.reserve(indices.size());
  for (std::size_t i : indices) out.records.push_back(records.at(i));
  return out;
}

std::string group_value(const Record& r, const DatasetSchema& schema) {
  if (!schema.group_field()) throw Error(Errc::NoGroupField, "schema declares no group field");
  const std::size_t idx = schema.index_of(*schema.group_field());
  if (const auto* c = std::get_if<CategoricalKind>(&schema.fields()[idx].kind)) {
    return c->vocab.at(std::get<std::size_t>(r.values[idx]));
  }
  return std::get<std::string>(r.values[idx]);
}

// --- text helpers -------------------------------------------------------------

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_real(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::vector<std::string> split_line(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

namespace {

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::optional<std::vector<double>> parse_vector(std::string_view text) {
  std::vector<double> out;
  std::istringstream ss{std::string(text)};
  std::string tok;
  while (ss >> tok) {
    auto v = parse_real(tok);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

std::string format_vector(const std::vector<double>& v, char sep = ' ') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_real(v[i]);
  }
  return out;
}

}  // namespace

// --- video features -----------------------------------------------------------

VideoFeatureTable::VideoFeatureTable(std::size_t dim, std::map<std::string, std::vector<double>> clips)
    : dim_(dim), clips_(std::move(clips)) {
  if (dim_ == 0) throw Error(Errc::BadSpec, "video feature dim must be positive");
  for (const auto& [id, v] : clips_) {
    if (v.size() != dim_) throw Error(Errc::BadVectorDim, "clip '" + id + "' has wrong length");
  }
}

const std::vector<double>* VideoFeatureTable::find(const std::string& clip_id) const {
  auto it = clips_.find(clip_id);
  return it == clips_.end() ? nullptr : &it->second;
}

VideoFeatureTable load_video_features(std::istream& in) {
  std::string line;
  if (!read_line(in, line)) throw Error(Errc::EmptyFile, "video feature file is empty");
  constexpr std::string_view prefix = "#dqfeat dim=";
  if (line.rfind(prefix, 0) != 0) {
    throw Error(Errc::MalformedLine, "feature file must start with '#dqfeat dim=<D>'");
  }
  std::size_t dim = 0;
  const std::string_view rest = std::string_view(line).substr(prefix.size());
  auto res = std::from_chars(rest.data(), rest.data() + rest.size(), dim);
  if (res.ec != std::errc() || res.ptr != rest.data() + rest.size() || dim == 0) {
    throw Error(Errc::MalformedLine, "bad dim in feature header");
  }
  std::map<std::string, std::vector<double>> clips;
  std::size_t line_no = 1;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(Errc::MalformedLine, "feature line " + std::to_string(line_no));
    }
    auto vec = parse_vector(std::string_view(line).substr(tab + 1));
    if (!vec) throw Error(Errc::MalformedLine, "feature line " + std::to_string(line_no));
    if (vec->size() != dim) {
      throw Error(Errc::BadVectorDim, "feature line " + std::to_string(line_no) + " has " +
                                          std::to_string(vec->size()) + " values, expected " +
                                          std::to_string(dim));
    }
    clips[line.substr(0, tab)] = std::move(*vec);
  }
  return VideoFeatureTable(dim, std::move(clips));
}

void write_video_features(std::ostream& out, const VideoFeatureTable& table) {
  out << "#dqfeat dim=" << table.dim() << '\n';
  for (const auto& [id, v] : table.clips()) out << id << '\t' << format_vector(v) << '\n';
}

// --- CSV ----------------------------------------------------------------------

Dataset parse_dataset(std::istream& in, SchemaPtr schema, const VideoFeatureTable* features,
                      bool require_label) {
  if (!schema) throw Error(Errc::BadSpec, "null schema");
  std::string line;
  if (!read_line(in, line)) throw Error(Errc::MissingColumn, "dataset has no header row");
  const auto header = split_line(line, ',');
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], i);

  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = col.find(std::string(name));
    if (it == col.end()) return std::nullopt;
    return it->second;
  };

  const auto& fields = schema->fields();
  std::vector<std::size_t> field_cols;
  for (const auto& f : fields) {
    auto c = column(f.name);
    if (!c) throw Error(Errc::MissingColumn, "column '" + f.name + "' not in header");
    field_cols.push_back(*c);
  }
  const auto id_col = column(kIdColumn);
  const auto label_col = column(schema->label().column);
  const auto qp_col = column("qp");
  const auto j1 = column("jnd1"), j2 = column("jnd2"), j3 = column("jnd3");
  const bool has_jnd = qp_col && j1 && j2 && j3;
  const auto* cls = std::get_if<ClassificationLabel>(&schema->label().kind);
  const bool unlabeled = !label_col && !has_jnd && !require_label;
  if (!label_col && !unlabeled) {
    if (!cls || !has_jnd) {
      throw Error(Errc::MissingColumn, "label column '" + schema->label().column + "' not in header");
    }
    if (cls->num_classes != kNumQoEClasses) {
      throw Error(Errc::BadSpec, "JND-derived labels need a 4-class label spec");
    }
  }

  Dataset ds{schema, {}};
  std::size_t row = 0;
  while (read_line(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto cells = split_line(line, ',');
    if (cells.size() != header.size()) {
      throw Error(Errc::UnparsableValue,
                  "expected " + std::to_string(header.size()) + " cells, got " +
                      std::to_string(cells.size()),
                  row, "*");
    }
    auto real_at = [&](std::size_t c) {
      auto v = parse_real(cells[c]);
      if (!v) throw Error(Errc::UnparsableValue, "'" + cells[c] + "' is not a real", row, header[c]);
      return *v;
    };

    Record rec;
    rec.id = id_col ? cells[*id_col] : std::to_string(row);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::size_t c = field_cols[i];
      const std::string& cell = cells[c];
      const auto& kind = fields[i].kind;
      if (std::holds_alternative<TextKind>(kind)) {
        rec.values.emplace_back(cell);
      } else if (const auto* cat = std::get_if<CategoricalKind>(&kind)) {
        auto it = std::find(cat->vocab.begin(), cat->vocab.end(), cell);
        if (it == cat->vocab.end()) {
          throw Error(Errc::UnknownCategoryValue, "'" + cell + "' not in vocabulary", row, header[c]);
        }
        rec.values.emplace_back(static_cast<std::size_t>(it - cat->vocab.begin()));
      } else if (std::holds_alternative<ContinuousKind>(kind)) {
        rec.values.emplace_back(real_at(c));
      } else {
        const std::size_t dim = std::get<VideoFeatureKind>(kind).dim;
        std::vector<double> vec;
        if (features != nullptr && features->find(cell) != nullptr) {
          vec = *features->find(cell);
        } else if (auto parsed = parse_vector(cell)) {
          vec = std::move(*parsed);
        } else {
          throw Error(Errc::UnparsableValue, "unknown clip or malformed vector", row, header[c]);
        }
        if (vec.size() != dim) {
          throw Error(Errc::BadVectorDim,
                      "vector of length " + std::to_string(vec.size()) + ", expected " +
                          std::to_string(dim),
                      row, header[c]);
        }
        rec.values.emplace_back(std::move(vec));
      }
    }

    if (has_jnd) {
      const double a = real_at(*j1), b = real_at(*j2), c = real_at(*j3);
      if (!(a < b && b < c)) {
        throw Error(Errc::UnparsableValue, "JND points not increasing", row, "jnd1");
      }
      rec.jnd.emplace(a, b, c);
    }

    if (label_col) {
      const std::string& cell = cells[*label_col];
      if (cls) {
        std::optional<std::size_t> k;
        auto it = std::find(cls->class_names.begin(), cls->class_names.end(), cell);
        if (it != cls->class_names.end()) {
          k = static_cast<std::size_t>(it - cls->class_names.begin());
        } else {
          long v = 0;
          auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
          if (res.ec == std::errc() && res.ptr == cell.data() + cell.size() && v >= cls->base &&
              v - cls->base < static_cast<long>(cls->num_classes)) {
            k = static_cast<std::size_t>(v - cls->base);
          }
        }
        if (!k) throw Error(Errc::UnparsableValue, "'" + cell + "' is not a valid class", row, header[*label_col]);
        rec.label = *k;
      } else {
        rec.label = real_at(*label_col);
      }
    } else if (unlabeled) {
      rec.label = cls ? Label(std::size_t{0}) : Label(0.0);
    } else {
      rec.label = static_cast<std::size_t>(jnd_to_class(real_at(*qp_col), *rec.jnd));
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  const auto& schema = *dataset.schema;
  const bool with_jnd = std::any_of(dataset.records.begin(), dataset.records.end(),
                                    [](const Record& r) { return r.jnd.has_value(); });
  const bool qp_is_field = schema.find("qp").has_value();
  if (with_jnd && !qp_is_field) {
    throw Error(Errc::BadSpec, "JND annotations need a 'qp' field to be written");
  }
  out << kIdColumn;
  for (const auto& f : schema.fields()) out << ',' << f.name;
  if (with_jnd) out << ",jnd1,jnd2,jnd3";
  out << ',' << schema.label().column << '\n';
  for (const auto& r : dataset.records) {
    out << r.id;
    for (std::size_t i = 0; i < schema.fields().size(); ++i) {
      out << ',';
      const auto& kind = schema.fields()[i].kind;
      const auto& v = r.values[i];
      if (const auto* cat = std::get_if<CategoricalKind>(&kind)) {
        out << cat->vocab.at(std::get<std::size_t>(v));
      } else if (const auto* s = std::get_if<std::string>(&v)) {
        out << *s;
      } else if (const auto* x = std::get_if<double>(&v)) {
        out << format_real(*x);
      } else {
        out << format_vector(std::get<std::vector<double>>(v));
      }
    }
    if (with_jnd) {
      if (!r.jnd) throw Error(Errc::BadSpec, "record '" + r.id + "' lacks its JND annotation");
      out << ',' << format_real(r.jnd->jnd1) << ',' << format_real(r.jnd->jnd2) << ','
          << format_real(r.jnd->jnd3);
    }
    out << ',';
    if (const auto* cls = std::get_if<ClassificationLabel>(&schema.label().kind)) {
      const std::size_t k = std::get<std::size_t>(r.label);
      if (!cls->class_names.empty()) {
        out << cls->class_names.at(k);
      } else {
        out << static_cast<long>(k) + cls->base;
      }
    } else {
      out << format_real(std::get<double>(r.label));
    }
    out << '\n';
  }
}

// --- normalization ------------------------------------------------------------

NormStats::NormStats(std::string field_, double min_, double max_)
    : field(std::move(field_)), min(min_), max(max_) {
  if (!(max > min)) {
    throw Error(Errc::DegenerateField, "field '" + field + "' has no spread (min " +
                                           format_real(min) + ", max " + format_real(max) + ")");
  }
}

NormStats compute_norm_stats(const Dataset& dataset, std::string_view field) {
  const std::size_t idx = dataset.schema->index_of(field);
  if (!std::holds_alternative<ContinuousKind>(dataset.schema->fields()[idx].kind)) {
    throw Error(Errc::SchemaViolation, "field '" + std::string(field) + "' is not continuous");
  }
  if (dataset.empty()) throw Error(Errc::EmptyDataset, "no records to compute statistics from");
  double lo = std::get<double>(dataset.records.front().values[idx]);
  double hi = lo;
  for (const auto& r : dataset.records) {
    const double v = std::get<double>(r.values[idx]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return NormStats(std::string(field), lo, hi);
}

double normalize(double value, const NormStats& stats) {
  if (value <= stats.min) return 0.0;
  if (value >= stats.max) return 1.0;
  return (value - stats.min) / (stats.max - stats.min);
}

// --- JND ----------------------------------------------------------------------

std::string_view qoe_class_name(QoEClass c) {
  switch (c) {
    case QoEClass::Excellent: return "excellent";
    case QoEClass::Good: return "good";
    case QoEClass::Fair: return "fair";
    case QoEClass::Bad: return "bad";
  }
  return "bad";
}

std::vector<std::string> qoe_class_names() {
  return {"excellent", "good", "fair", "bad"};
}

QoEClass jnd_to_class(double qp, const JndAnnotation& jnd) {
  if (qp < jnd.jnd1) return QoEClass::Excellent;
  if (qp < jnd.jnd2) return QoEClass::Good;
  if (qp < jnd.jnd3) return QoEClass::Fair;
  return QoEClass::Bad;
}

// --- splits -------------------------------------------------------------------

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (n < 2) throw Error(Errc::TooFewRecords, "split needs at least 2 records");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(Errc::InvalidConfig, "test fraction must lie in (0, 1)");
  }
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  Rng rng(seed);
  const auto order = rng.permutation(n);
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {dataset.subset(train), dataset.subset(test)};
}

std::vector<Fold> leave_one_group_out(const Dataset& dataset) {
  const auto& schema = *dataset.schema;
  if (!schema.group_field()) throw Error(Errc::NoGroupField, "schema declares no group field");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    members[group_value(dataset.records[i], schema)].push_back(i);
  }
  if (members.size() < 2) throw Error(Errc::SingleGroup, "leave-one-group-out needs >= 2 groups");
  std::vector<Fold> folds;
  for (const auto& [group, test_idx] : members) {
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (!std::binary_search(test_idx.begin(), test_idx.end(), i)) train_idx.push_back(i);
    }
    folds.push_back(Fold{dataset.subset(train_idx), dataset.subset(test_idx), group});
  }
  return folds;
}

// --- synthetic ----------------------------------------------------------------

namespace {

void check_spec(const SyntheticSpec& s) {
  auto bad = [](const std::string& what) { throw Error(Errc::BadSpec, what); };
  if (s.types.empty()) bad("no video types");
  if (s.type_offsets.size() != s.types.size()) bad("type_offsets length differs from types");
  if (s.type_signs.size() != s.types.size()) bad("type_signs length differs from types");
  if (s.resolutions.empty()) bad("no resolutions");
  if (s.resolution_offsets.size() != s.resolutions.size()) {
    bad("resolution_offsets length differs from resolutions");
  }
  if (!(s.bitrate_max > s.bitrate_min)) bad("bitrate_max must exceed bitrate_min");
  if (!(s.noise >= 0.0)) bad("noise must be non-negative");
  for (const auto& t : s.types) {
    if (t.empty() || t.find_first_of(" \t,") != std::string::npos) bad("type '" + t + "' is not a single token");
  }
}

}  // namespace

SchemaPtr synthetic_schema(const SyntheticSpec& spec) {
  check_spec(spec);
  std::vector<FieldSpec> fields;
  fields.push_back({"type", TextKind{}});
  fields.push_back({"resolution", CategoricalKind{spec.resolutions}});
  if (spec.task == SyntheticTask::Jnd) {
    fields.push_back({"qp", ContinuousKind{}});
  } else {
    fields.push_back({"bitrate", ContinuousKind{}});
  }
  if (spec.user_fields) {
    fields.push_back({"age", ContinuousKind{}});
    fields.push_back({"gender", CategoricalKind{{"male", "female"}}});
  }
  for (std::size_t i = 0; i < spec.nuisance_fields; ++i) {
    fields.push_back({"nuisance" + std::to_string(i + 1), ContinuousKind{}});
  }
  if (spec.video_dim > 0) fields.push_back({"video", VideoFeatureKind{spec.video_dim}});

  LabelSpec label;
  switch (spec.task) {
    case SyntheticTask::Classification:
      label = LabelSpec{"score", ClassificationLabel{5, {}, 1}};
      break;
    case SyntheticTask::Regression:
      label = LabelSpec{"mos", RegressionLabel{}};
      break;
    case SyntheticTask::Jnd:
      label = LabelSpec{"qoe_class", ClassificationLabel{kNumQoEClasses, qoe_class_names(), 0}};
      break;
  }
  return std::make_shared<const DatasetSchema>(std::move(fields), std::move(label), "type");
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  auto schema = synthetic_schema(spec);
  Dataset ds{schema, {}};
  Rng rng(seed);
  Rng label_noise = rng.split(1);
  Rng content = rng.split(2);

  // Per-type content signature for the video feature, and per-clip JND triples.
  std::vector<std::vector<double>> type_centers(spec.types.size());
  for (auto& c : type_centers) {
    c.resize(spec.video_dim);
    for (auto& v : c) v = content.uniform(-1.0, 1.0);
  }

  const double span = spec.bitrate_max - spec.bitrate_min;
  for (std::size_t i = 0; i < spec.n_records; ++i) {
    const std::size_t t = rng.below(spec.types.size());
    const std::size_t res = rng.below(spec.resolutions.size());
    Record rec;
    rec.id = "r" + std::to_string(i + 1);
    rec.values.emplace_back(spec.types[t]);
    rec.values.emplace_back(res);

    double nb = 0.0;
    double qp = 0.0;
    if (spec.task == SyntheticTask::Jnd) {
      qp = static_cast<double>(rng.below(52));
      rec.values.emplace_back(qp);
    } else {
      nb = rng.uniform();
      rec.values.emplace_back(spec.bitrate_min + nb * span);
    }
    if (spec.user_fields) {
      rec.values.emplace_back(static_cast<double>(15 + rng.below(46)));
      rec.values.emplace_back(static_cast<std::size_t>(rng.below(2)));
    }
    for (std::size_t k = 0; k < spec.nuisance_fields; ++k) rec.values.emplace_back(rng.uniform());
    if (spec.video_dim > 0) {
      std::vector<double> feat(spec.video_dim);
      for (std::size_t k = 0; k < feat.size(); ++k) {
        feat[k] = type_centers[t][k] + rng.uniform(-0.1, 0.1);
      }
      rec.values.emplace_back(std::move(feat));
    }

    const double e = spec.noise > 0.0 ? label_noise.uniform(-spec.noise, spec.noise) : 0.0;
    if (spec.task == SyntheticTask::Jnd) {
      // Higher offsets tolerate more compression before a visible change.
      const double base = 18.0 + 3.0 * spec.b2 * spec.type_offsets[t] +
                          3.0 * spec.b3 * spec.resolution_offsets[res];
      const double j1 = base + e;
      JndAnnotation jnd(j1, j1 + 9.0, j1 + 18.0);
      rec.label = static_cast<std::size_t>(jnd_to_class(qp, jnd));
      rec.jnd = jnd;
    } else {
      double score = spec.b0 + spec.b1 * nb + spec.b2 * spec.type_offsets[t] +
                     spec.b3 * spec.resolution_offsets[res] +
                     spec.interaction * spec.type_signs[t] * (nb - 0.5) + e;
      if (spec.task == SyntheticTask::Classification) {
        score = std::clamp(std::round(score), 1.0, 5.0);
        rec.label = static_cast<std::size_t>(score) - 1;
      } else {
        rec.label = std::clamp(score, 1.0, 5.0);
      }
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace deepqoe::schema
