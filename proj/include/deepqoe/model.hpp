#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "deepqoe/diff.hpp"
#include "deepqoe/schema.hpp"
#include "deepqoe/wordvec.hpp"

namespace deepqoe::model {

using diff::Tensor;
using schema::Dataset;
using schema::Record;

// --- branch extractors --------------------------------------------------------

// Frozen pretrained word vectors, mean-pooled over the field's tokens.
struct TextVectors {
  std::shared_ptr<const wordvec::WordVectorTable> table;
};
// Learned lookup table for a categorical field.
struct EmbeddingExtractor {
  std::size_t dim = 1;
};
// 1 -> 1 identity dense unit on the min-max normalized value.
struct DenseScalar {};
// Precomputed video feature, fed as is.
struct Passthrough {};

using Extractor = std::variant<TextVectors, EmbeddingExtractor, DenseScalar, Passthrough>;

std::string_view extractor_name(const Extractor& e);

struct BranchSpec {
  std::string field;
  Extractor extractor;
  // Width of the bias-free learned projection applied after extraction.
  std::optional<std::size_t> projection;
};

struct SoftmaxHead {
  std::size_t num_classes = 2;
};
struct LinearHead {};
using HeadSpec = std::variant<SoftmaxHead, LinearHead>;

struct NetworkConfig {
  std::vector<std::size_t> hidden = {128, 32};
  double dropout = 0.5;
  HeadSpec head = SoftmaxHead{5};
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  diff::OptimizerSpec optimizer = diff::AdamConfig{};
  std::uint64_t seed = 0;
  bool shuffle = true;
  // Called after every epoch with (epoch index, mean training loss).
  std::function<void(std::size_t, double)> on_epoch;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  double seconds = 0.0;
  std::string checksum;
};

struct ForwardOutput {
  Tensor head;            // m x K probabilities, or m x 1 scores
  Tensor representation;  // m x last hidden size
};

class DeepQoEModel {
 public:
  const schema::DatasetSchema& schema() const noexcept { return *schema_; }
  const schema::SchemaPtr& schema_ptr() const noexcept { return schema_; }
  const std::vector<BranchSpec>& branch_specs() const noexcept { return specs_; }
  const NetworkConfig& network() const noexcept { return config_; }
  bool is_classifier() const noexcept { return std::holds_alternative<SoftmaxHead>(config_.head); }

  std::size_t fused_width() const noexcept { return fused_width_; }
  std::size_t representation_width() const noexcept { return config_.hidden.back(); }
  std::size_t output_width() const noexcept { return head_.out(); }

  const std::map<std::string, schema::NormStats>& norm_stats() const noexcept { return norm_; }
  bool has_norm_stats() const;
  void set_norm_stats(std::map<std::string, schema::NormStats> stats);
  // Fits min/max for every DenseScalar branch from the given records.
  void fit_norm_stats(const Dataset& dataset);

  // Manifest order: branches in schema order, hidden layers, head.
  std::vector<diff::Param*> params();
  std::vector<const diff::Param*> params() const;
  std::size_t param_count() const;

  // Records the full graph up to the head output; returns (head, representation).
  std::pair<diff::Var, diff::Var> graph(diff::Tape& tape, std::span<const Record> batch,
                                        bool training, Rng& rng);
  std::pair<diff::Var, diff::Var> graph(diff::Tape& tape, std::span<const Record> batch) const;
  // Mean loss (cross-entropy or squared error) of the batch.
  diff::Var loss(diff::Tape& tape, std::span<const Record> batch, bool training, Rng& rng);

 private:
  friend DeepQoEModel build_model(schema::SchemaPtr, std::vector<BranchSpec>, NetworkConfig,
                                  std::uint64_t);

  struct Branch {
    std::size_t field_index = 0;
    std::size_t width = 0;
    std::optional<diff::EmbeddingTable> embedding;
    std::optional<diff::DenseLayer> scalar;
    std::optional<diff::Param> projection;
  };

  template <typename Self>
  static std::pair<diff::Var, diff::Var> graph_impl(Self& self, diff::Tape& tape,
                                                    std::span<const Record> batch, bool training,
                                                    Rng* rng);

  schema::SchemaPtr schema_;
  std::vector<BranchSpec> specs_;  // schema field order
  std::vector<Branch> branches_;
  std::vector<diff::DenseLayer> hidden_;
  diff::DenseLayer head_;
  NetworkConfig config_;
  std::size_t fused_width_ = 0;
  std::map<std::string, schema::NormStats> norm_;
};

// Branch specs may come in any order; they are stored in schema field order,
// which is also the concatenation order.
DeepQoEModel build_model(schema::SchemaPtr schema, std::vector<BranchSpec> branches,
                         NetworkConfig config, std::uint64_t seed);

ForwardOutput forward(DeepQoEModel& model, std::span<const Record> batch, bool training, Rng& rng);
ForwardOutput forward(const DeepQoEModel& model, std::span<const Record> batch);

TrainReport train(DeepQoEModel& model, const Dataset& dataset, const TrainConfig& config);

// Lowest index among the maxima.
std::size_t argmax(std::span<const double> values);

std::pair<std::size_t, std::vector<double>> predict_class(const DeepQoEModel& model,
                                                          const Record& record);
double predict_score(const DeepQoEModel& model, const Record& record);
std::vector<double> extract_representation(const DeepQoEModel& model, const Record& record);

// FNV-1a over the little-endian bytes of every parameter, as 16 hex digits.
std::string param_checksum(const DeepQoEModel& model);

// --- checkpoint ---------------------------------------------------------------

inline constexpr char kCheckpointMagic[9] = "DQOEv001";

void save_checkpoint(const DeepQoEModel& model, std::ostream& out);
DeepQoEModel load_checkpoint(std::istream& in);

}  // namespace deepqoe::model
