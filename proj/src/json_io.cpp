#include "deepqoe/json_io.hpp"

#include "deepqoe/error.hpp"

namespace deepqoe::json_io {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::InvalidConfig, what); }

const json& member(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) invalid(std::string("missing key '") + key + "'");
  return j.at(key);
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return member(j, key).get<T>();
  } catch (const json::exception& e) {
    invalid(std::string("key '") + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get<T>(j, key);
}

}  // namespace

json schema_to_json(const schema::DatasetSchema& s) {
  json fields = json::array();
  for (const auto& f : s.fields()) {
    json jf{{"name", f.name}, {"kind", std::string(schema::kind_name(f.kind))}};
    if (const auto* c = std::get_if<schema::CategoricalKind>(&f.kind)) jf["vocab"] = c->vocab;
    if (const auto* v = std::get_if<schema::VideoFeatureKind>(&f.kind)) jf["dim"] = v->dim;
    fields.push_back(std::move(jf));
  }
  json label{{"column", s.label().column}};
  if (const auto* c = std::get_if<schema::ClassificationLabel>(&s.label().kind)) {
    label["kind"] = "classification";
    label["num_classes"] = c->num_classes;
    label["class_names"] = c->class_names;
    label["base"] = c->base;
  } else {
    label["kind"] = "regression";
  }
  json out{{"fields", fields}, {"label", label}};
  if (s.group_field()) out["group_field"] = *s.group_field();
  return out;
}

schema::DatasetSchema schema_from_json(const json& j) {
  std::vector<schema::FieldSpec> fields;
  const json& jfields = member(j, "fields");
  if (!jfields.is_array()) invalid("'fields' must be an array");
  for (const auto& jf : jfields) {
    const auto name = get<std::string>(jf, "name");
    const auto kind = get<std::string>(jf, "kind");
    if (kind == "text") {
      fields.push_back({name, schema::TextKind{}});
    } else if (kind == "categorical") {
      fields.push_back({name, schema::CategoricalKind{get<std::vector<std::string>>(jf, "vocab")}});
    } else if (kind == "continuous") {
      fields.push_back({name, schema::ContinuousKind{}});
    } else if (kind == "video") {
      fields.push_back({name, schema::VideoFeatureKind{get<std::size_t>(jf, "dim")}});
    } else {
      invalid("unknown field kind '" + kind + "'");
    }
  }
  const json& jl = member(j, "label");
  schema::LabelSpec label;
  label.column = get_or<std::string>(jl, "column", "score");
  const auto kind = get<std::string>(jl, "kind");
  if (kind == "classification") {
    label.kind = schema::ClassificationLabel{
        get<std::size_t>(jl, "num_classes"),
        get_or<std::vector<std::string>>(jl, "class_names", {}), get_or<long>(jl, "base", 1)};
  } else if (kind == "regression") {
    label.kind = schema::RegressionLabel{};
  } else {
    invalid("unknown label kind '" + kind + "'");
  }
  std::optional<std::string> group;
  if (j.contains("group_field") && !j.at("group_field").is_null()) {
    group = get<std::string>(j, "group_field");
  }
  return schema::DatasetSchema(std::move(fields), std::move(label), std::move(group));
}

json branch_to_json(const model::BranchSpec& b) {
  json out{{"field", b.field}, {"extractor", std::string(model::extractor_name(b.extractor))}};
  if (const auto* e = std::get_if<model::EmbeddingExtractor>(&b.extractor)) out["dim"] = e->dim;
  if (b.projection) out["projection"] = *b.projection;
  return out;
}

model::BranchSpec branch_from_json(const json& j) {
  model::BranchSpec b;
  b.field = get<std::string>(j, "field");
  const auto kind = get<std::string>(j, "extractor");
  if (kind == "text") {
    b.extractor = model::TextVectors{};
  } else if (kind == "embedding") {
    b.extractor = model::EmbeddingExtractor{get<std::size_t>(j, "dim")};
  } else if (kind == "dense_scalar") {
    b.extractor = model::DenseScalar{};
  } else if (kind == "passthrough") {
    b.extractor = model::Passthrough{};
  } else {
    invalid("unknown extractor '" + kind + "'");
  }
  if (j.contains("projection") && !j.at("projection").is_null()) {
    b.projection = get<std::size_t>(j, "projection");
  }
  return b;
}

json network_to_json(const model::NetworkConfig& c) {
  json out{{"hidden", c.hidden}, {"dropout", c.dropout}};
  if (const auto* s = std::get_if<model::SoftmaxHead>(&c.head)) {
    out["head"] = "softmax";
    out["num_classes"] = s->num_classes;
  } else {
    out["head"] = "linear";
  }
  return out;
}

model::NetworkConfig network_from_json(const json& j) {
  model::NetworkConfig c;
  c.hidden = get_or<std::vector<std::size_t>>(j, "hidden", c.hidden);
  c.dropout = get_or<double>(j, "dropout", c.dropout);
  const auto head = get_or<std::string>(j, "head", "softmax");
  if (head == "softmax") {
    c.head = model::SoftmaxHead{get<std::size_t>(j, "num_classes")};
  } else if (head == "linear") {
    c.head = model::LinearHead{};
  } else {
    invalid("unknown head '" + head + "'");
  }
  return c;
}

json optimizer_to_json(const diff::OptimizerSpec& spec) {
  if (const auto* s = std::get_if<diff::SgdConfig>(&spec)) {
    return json{{"kind", "sgd"}, {"lr", s->lr}, {"momentum", s->momentum}};
  }
  const auto& a = std::get<diff::AdamConfig>(spec);
  return json{{"kind", "adam"}, {"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2},
              {"epsilon", a.epsilon}};
}

diff::OptimizerSpec optimizer_from_json(const json& j) {
  const auto kind = get_or<std::string>(j, "kind", "adam");
  if (kind == "sgd") {
    diff::SgdConfig s;
    s.lr = get_or(j, "lr", s.lr);
    s.momentum = get_or(j, "momentum", s.momentum);
    return s;
  }
  if (kind != "adam") invalid("unknown optimizer '" + kind + "'");
  diff::AdamConfig a;
  a.lr = get_or(j, "lr", a.lr);
  a.beta1 = get_or(j, "beta1", a.beta1);
  a.beta2 = get_or(j, "beta2", a.beta2);
  a.epsilon = get_or(j, "epsilon", a.epsilon);
  return a;
}

json train_to_json(const model::TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"optimizer", optimizer_to_json(c.optimizer)},
              {"seed", c.seed},
              {"shuffle", c.shuffle}};
}

model::TrainConfig train_from_json(const json& j) {
  model::TrainConfig c;
  c.epochs = get_or(j, "epochs", c.epochs);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.shuffle = get_or(j, "shuffle", c.shuffle);
  if (j.contains("optimizer")) c.optimizer = optimizer_from_json(j.at("optimizer"));
  return c;
}

namespace {
const char* task_name(schema::SyntheticTask t) {
  switch (t) {
    case schema::SyntheticTask::Classification: return "classification";
    case schema::SyntheticTask::Regression: return "regression";
    case schema::SyntheticTask::Jnd: return "jnd";
  }
  return "classification";
}
}  // namespace

json synthetic_to_json(const schema::SyntheticSpec& s) {
  return json{{"n_records", s.n_records},
              {"task", task_name(s.task)},
              {"types", s.types},
              {"type_offsets", s.type_offsets},
              {"type_signs", s.type_signs},
              {"resolutions", s.resolutions},
              {"resolution_offsets", s.resolution_offsets},
              {"bitrate_min", s.bitrate_min},
              {"bitrate_max", s.bitrate_max},
              {"b0", s.b0},
              {"b1", s.b1},
              {"b2", s.b2},
              {"b3", s.b3},
              {"interaction", s.interaction},
              {"noise", s.noise},
              {"user_fields", s.user_fields},
              {"nuisance_fields", s.nuisance_fields},
              {"video_dim", s.video_dim}};
}

schema::SyntheticSpec synthetic_from_json(const json& j) {
  if (!j.is_object()) invalid("synthetic spec must be a JSON object");
  schema::SyntheticSpec s;
  const json known = synthetic_to_json(s);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) invalid("unknown synthetic-spec key '" + key + "'");
  }
  s.n_records = get_or(j, "n_records", s.n_records);
  const auto task = get_or<std::string>(j, "task", "classification");
  if (task == "classification") {
    s.task = schema::SyntheticTask::Classification;
  } else if (task == "regression") {
    s.task = schema::SyntheticTask::Regression;
  } else if (task == "jnd") {
    s.task = schema::SyntheticTask::Jnd;
  } else {
    invalid("unknown synthetic task '" + task + "'");
  }
  s.types = get_or(j, "types", s.types);
  s.type_offsets = get_or(j, "type_offsets", s.type_offsets);
  s.type_signs = get_or(j, "type_signs", s.type_signs);
  s.resolutions = get_or(j, "resolutions", s.resolutions);
  s.resolution_offsets = get_or(j, "resolution_offsets", s.resolution_offsets);
  s.bitrate_min = get_or(j, "bitrate_min", s.bitrate_min);
  s.bitrate_max = get_or(j, "bitrate_max", s.bitrate_max);
  s.b0 = get_or(j, "b0", s.b0);
  s.b1 = get_or(j, "b1", s.b1);
  s.b2 = get_or(j, "b2", s.b2);
  s.b3 = get_or(j, "b3", s.b3);
  s.interaction = get_or(j, "interaction", s.interaction);
  s.noise = get_or(j, "noise", s.noise);
  s.user_fields = get_or(j, "user_fields", s.user_fields);
  s.nuisance_fields = get_or(j, "nuisance_fields", s.nuisance_fields);
  s.video_dim = get_or(j, "video_dim", s.video_dim);
  return s;
}

}  // namespace deepqoe::json_io
