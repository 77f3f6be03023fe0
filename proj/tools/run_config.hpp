#pragma once

// Run-config file: one JSON object describing data, schema, architecture and
// training for the deepqoe command line. Relative paths resolve against the
// directory holding the config file.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "deepqoe/model.hpp"
#include "deepqoe/schema.hpp"
#include "deepqoe/wordvec.hpp"

namespace deepqoe::cli {

namespace fs = std::filesystem;

struct DataConfig {
  fs::path train;
  std::optional<fs::path> test;  // held-out split of `train` when absent
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
};

struct RunConfig {
  fs::path source;
  schema::SchemaPtr schema;
  std::vector<model::BranchSpec> branches;  // text branches carry their full tables
  model::NetworkConfig network;
  model::TrainConfig train;
  std::optional<std::uint64_t> model_seed;  // defaults to train.seed
  DataConfig data;
  std::map<std::string, fs::path> word_vectors;
  std::optional<fs::path> video_features;
  fs::path output_dir;
  fs::path checkpoint;

  std::uint64_t init_seed() const { return model_seed.value_or(train.seed); }
};

// Parses, resolves paths, loads word vectors, and checks that schema,
// branches and head fit together. Throws Error.
RunConfig load_run_config(const fs::path& path);

std::optional<schema::VideoFeatureTable> load_features(const std::optional<fs::path>& path);

// Reads the configured dataset(s); returns (train, test).
std::pair<schema::Dataset, schema::Dataset> load_split(const RunConfig& config);

// All records named by the config, for leave-one-group-out runs.
schema::Dataset load_all(const RunConfig& config);

schema::Dataset read_dataset(const fs::path& path, schema::SchemaPtr schema,
                             const schema::VideoFeatureTable* features, bool require_label = true);

// Branches whose word tables keep only the tokens the given datasets use.
std::vector<model::BranchSpec> prune_text_tables(const std::vector<model::BranchSpec>& branches,
                                                 const schema::DatasetSchema& schema,
                                                 const std::vector<const schema::Dataset*>& data);

}  // namespace deepqoe::cli
