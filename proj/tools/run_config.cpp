#include "run_config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "deepqoe/error.hpp"
#include "deepqoe/json_io.hpp"

namespace deepqoe::cli {

using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
  return in;
}

const std::set<std::string> kKeys = {"schema",         "branches",   "network",     "train",
                                     "model_seed",     "data",       "word_vectors", "video_features",
                                     "output_dir",     "checkpoint"};

}  // namespace

RunConfig load_run_config(const fs::path& path) {
  json j;
  {
    std::ifstream in = open_input(path);
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(Errc::InvalidConfig, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
  }
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "run config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw Error(Errc::InvalidConfig, "unknown run-config key '" + key + "'");
  }
  for (const char* key : {"schema", "branches", "data"}) {
    if (!j.contains(key)) throw Error(Errc::InvalidConfig, std::string("run config lacks '") + key + "'");
  }

  RunConfig c;
  c.source = path;
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();

  try {
    c.schema = std::make_shared<const schema::DatasetSchema>(json_io::schema_from_json(j.at("schema")));
    if (j.contains("network")) c.network = json_io::network_from_json(j.at("network"));
    if (j.contains("train")) c.train = json_io::train_from_json(j.at("train"));
    if (j.contains("model_seed")) c.model_seed = j.at("model_seed").get<std::uint64_t>();

    const json& d = j.at("data");
    c.data.train = resolve(base, d.at("train").get<std::string>());
    if (d.contains("test")) c.data.test = resolve(base, d.at("test").get<std::string>());
    if (d.contains("test_fraction")) c.data.test_fraction = d.at("test_fraction").get<double>();
    if (d.contains("split_seed")) c.data.split_seed = d.at("split_seed").get<std::uint64_t>();

    if (j.contains("word_vectors")) {
      for (const auto& [field, p] : j.at("word_vectors").items()) {
        c.word_vectors[field] = resolve(base, p.get<std::string>());
      }
    }
    if (j.contains("video_features")) {
      c.video_features = resolve(base, j.at("video_features").get<std::string>());
    }
    c.output_dir = resolve(base, j.value("output_dir", std::string("out")));
    c.checkpoint = j.contains("checkpoint") ? resolve(base, j.at("checkpoint").get<std::string>())
                                            : c.output_dir / "model.dqoe";

    for (const auto& jb : j.at("branches")) {
      model::BranchSpec b = json_io::branch_from_json(jb);
      if (auto* text = std::get_if<model::TextVectors>(&b.extractor)) {
        auto it = c.word_vectors.find(b.field);
        if (it == c.word_vectors.end()) {
          throw Error(Errc::InvalidConfig, "text branch '" + b.field + "' has no word_vectors entry");
        }
        std::ifstream in = open_input(it->second);
        text->table = std::make_shared<const wordvec::WordVectorTable>(wordvec::load_word_vectors(in));
      }
      c.branches.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("run config: ") + e.what());
  }

  // Dry build: surfaces HeadMismatch / IncompatibleExtractor before any work.
  model::build_model(c.schema, c.branches, c.network, 0);
  return c;
}

std::optional<schema::VideoFeatureTable> load_features(const std::optional<fs::path>& path) {
  if (!path) return std::nullopt;
  std::ifstream in = open_input(*path);
  return schema::load_video_features(in);
}

schema::Dataset read_dataset(const fs::path& path, schema::SchemaPtr schema,
                             const schema::VideoFeatureTable* features, bool require_label) {
  std::ifstream in = open_input(path);
  return schema::parse_dataset(in, std::move(schema), features, require_label);
}

std::pair<schema::Dataset, schema::Dataset> load_split(const RunConfig& config) {
  const auto features = load_features(config.video_features);
  const auto* fp = features ? &*features : nullptr;
  schema::Dataset train = read_dataset(config.data.train, config.schema, fp);
  if (config.data.test) return {std::move(train), read_dataset(*config.data.test, config.schema, fp)};
  return schema::split(train, config.data.test_fraction, config.data.split_seed);
}

schema::Dataset load_all(const RunConfig& config) {
  const auto features = load_features(config.video_features);
  const auto* fp = features ? &*features : nullptr;
  schema::Dataset all = read_dataset(config.data.train, config.schema, fp);
  if (config.data.test) {
    auto test = read_dataset(*config.data.test, config.schema, fp);
    all.records.insert(all.records.end(), test.records.begin(), test.records.end());
  }
  return all;
}

std::vector<model::BranchSpec> prune_text_tables(const std::vector<model::BranchSpec>& branches,
                                                 const schema::DatasetSchema& schema,
                                                 const std::vector<const schema::Dataset*>& data) {
  std::vector<model::BranchSpec> out = branches;
  for (auto& b : out) {
    auto* text = std::get_if<model::TextVectors>(&b.extractor);
    if (!text) continue;
    const std::size_t fi = schema.index_of(b.field);
    std::set<std::string> tokens;
    for (const auto* ds : data) {
      for (const auto& r : ds->records) {
        for (auto& t : wordvec::tokenize(std::get<std::string>(r.values[fi]))) tokens.insert(std::move(t));
      }
    }
    text->table = std::make_shared<const wordvec::WordVectorTable>(
        text->table->restricted_to(std::vector<std::string>(tokens.begin(), tokens.end())));
  }
  return out;
}

}  // namespace deepqoe::cli
