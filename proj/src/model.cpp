#include "deepqoe/model.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <set>

#include "deepqoe/error.hpp"

namespace deepqoe::model {

using diff::Tape;
using diff::Var;

std::string_view extractor_name(const Extractor& e) {
  switch (e.index()) {
    case 0: return "text";
    case 1: return "embedding";
    case 2: return "dense_scalar";
    default: return "passthrough";
  }
}

namespace {

bool compatible(const schema::FieldKind& kind, const Extractor& e) {
  return (std::holds_alternative<schema::TextKind>(kind) && std::holds_alternative<TextVectors>(e)) ||
         (std::holds_alternative<schema::CategoricalKind>(kind) &&
          std::holds_alternative<EmbeddingExtractor>(e)) ||
         (std::holds_alternative<schema::ContinuousKind>(kind) &&
          std::holds_alternative<DenseScalar>(e)) ||
         (std::holds_alternative<schema::VideoFeatureKind>(kind) &&
          std::holds_alternative<Passthrough>(e));
}

}  // namespace

// --- construction -------------------------------------------------------------

DeepQoEModel build_model(schema::SchemaPtr schema, std::vector<BranchSpec> branches,
                         NetworkConfig config, std::uint64_t seed) {
  if (!schema) throw Error(Errc::BadSpec, "null schema");
  const auto& label = schema->label();
  if (const auto* head = std::get_if<SoftmaxHead>(&config.head)) {
    if (!label.is_classification()) {
      throw Error(Errc::HeadMismatch, "softmax head on a regression-labeled schema");
    }
    if (head->num_classes != label.num_classes()) {
      throw Error(Errc::HeadMismatch, "softmax head has " + std::to_string(head->num_classes) +
                                          " classes, label has " +
                                          std::to_string(label.num_classes()));
    }
  } else if (label.is_classification()) {
    throw Error(Errc::HeadMismatch, "linear head on a classification-labeled schema");
  }
  if (config.hidden.empty()) throw Error(Errc::InvalidConfig, "need at least one hidden layer");
  for (std::size_t h : config.hidden) {
    if (h == 0) throw Error(Errc::InvalidConfig, "hidden layer of width 0");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
    throw Error(Errc::InvalidConfig, "dropout rate must lie in [0, 1)");
  }

  const auto& fields = schema->fields();
  std::vector<std::optional<BranchSpec>> by_field(fields.size());
  for (auto& b : branches) {
    auto idx = schema->find(b.field);
    if (!idx) throw Error(Errc::IncompatibleExtractor, "branch for unknown field '" + b.field + "'");
    if (by_field[*idx]) throw Error(Errc::IncompatibleExtractor, "two branches for '" + b.field + "'");
    if (!compatible(fields[*idx].kind, b.extractor)) {
      throw Error(Errc::IncompatibleExtractor,
                  std::string(extractor_name(b.extractor)) + " extractor on " +
                      std::string(schema::kind_name(fields[*idx].kind)) + " field '" + b.field + "'");
    }
    if (const auto* t = std::get_if<TextVectors>(&b.extractor); t && !t->table) {
      throw Error(Errc::IncompatibleExtractor, "text branch '" + b.field + "' has no word vectors");
    }
    if (const auto* e = std::get_if<EmbeddingExtractor>(&b.extractor); e && e->dim == 0) {
      throw Error(Errc::IncompatibleExtractor, "embedding dim 0 for '" + b.field + "'");
    }
    if (b.projection && *b.projection == 0) {
      throw Error(Errc::IncompatibleExtractor, "projection width 0 for '" + b.field + "'");
    }
    by_field[*idx] = std::move(b);
  }

  DeepQoEModel m;
  m.schema_ = schema;
  m.config_ = config;
  Rng rng(seed);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (!by_field[i]) {
      throw Error(Errc::IncompatibleExtractor, "no branch for field '" + fields[i].name + "'");
    }
    const BranchSpec& spec = *by_field[i];
    const std::string prefix = "branch." + spec.field;
    DeepQoEModel::Branch br;
    br.field_index = i;
    if (const auto* t = std::get_if<TextVectors>(&spec.extractor)) {
      br.width = t->table->dim();
    } else if (const auto* e = std::get_if<EmbeddingExtractor>(&spec.extractor)) {
      const auto vocab = std::get<schema::CategoricalKind>(fields[i].kind).vocab.size();
      br.embedding = diff::make_embedding(prefix + ".embedding", vocab, e->dim, rng);
      br.width = e->dim;
    } else if (std::holds_alternative<DenseScalar>(spec.extractor)) {
      br.scalar = diff::make_dense(prefix + ".scalar", 1, 1, diff::Activation::Identity, rng);
      br.width = 1;
    } else {
      br.width = std::get<schema::VideoFeatureKind>(fields[i].kind).dim;
    }
    if (spec.projection) {
      Tensor w(br.width, *spec.projection);
      diff::glorot_uniform(w, rng);
      br.projection = diff::Param(prefix + ".projection", std::move(w));
      br.width = *spec.projection;
    }
    m.fused_width_ += br.width;
    m.specs_.push_back(spec);
    m.branches_.push_back(std::move(br));
  }

  std::size_t in = m.fused_width_;
  for (std::size_t h = 0; h < config.hidden.size(); ++h) {
    m.hidden_.push_back(diff::make_dense("hidden." + std::to_string(h), in, config.hidden[h],
                                         diff::Activation::ReLU, rng));
    in = config.hidden[h];
  }
  const std::size_t out = std::holds_alternative<SoftmaxHead>(config.head)
                              ? std::get<SoftmaxHead>(config.head).num_classes
                              : 1;
  m.head_ = diff::make_dense("head", in, out, diff::Activation::Identity, rng);
  return m;
}

// --- normalization ------------------------------------------------------------

bool DeepQoEModel::has_norm_stats() const {
  for (const auto& spec : specs_) {
    if (std::holds_alternative<DenseScalar>(spec.extractor) && !norm_.count(spec.field)) return false;
  }
  return true;
}

void DeepQoEModel::set_norm_stats(std::map<std::string, schema::NormStats> stats) {
  for (const auto& [name, s] : stats) {
    const auto idx = schema_->index_of(name);
    if (!std::holds_alternative<schema::ContinuousKind>(schema_->fields()[idx].kind)) {
      throw Error(Errc::SchemaViolation, "norm stats for non-continuous field '" + name + "'");
    }
  }
  norm_ = std::move(stats);
}

void DeepQoEModel::fit_norm_stats(const Dataset& dataset) {
  std::map<std::string, schema::NormStats> stats;
  for (const auto& spec : specs_) {
    if (std::holds_alternative<DenseScalar>(spec.extractor)) {
      stats.emplace(spec.field, schema::compute_norm_stats(dataset, spec.field));
    }
  }
  norm_ = std::move(stats);
}

// --- parameters ---------------------------------------------------------------

std::vector<diff::Param*> DeepQoEModel::params() {
  std::vector<diff::Param*> out;
  for (auto& b : branches_) {
    if (b.embedding) out.push_back(&b.embedding->table);
    if (b.scalar) {
      out.push_back(&b.scalar->weight);
      out.push_back(&b.scalar->bias);
    }
    if (b.projection) out.push_back(&*b.projection);
  }
  for (auto& h : hidden_) {
    out.push_back(&h.weight);
    out.push_back(&h.bias);
  }
  out.push_back(&head_.weight);
  out.push_back(&head_.bias);
  return out;
}

std::vector<const diff::Param*> DeepQoEModel::params() const {
  auto mutable_params = const_cast<DeepQoEModel*>(this)->params();
  return {mutable_params.begin(), mutable_params.end()};
}

std::size_t DeepQoEModel::param_count() const {
  std::size_t n = 0;
  for (const auto* p : params()) n += p->value.size();
  return n;
}

// --- forward ------------------------------------------------------------------

template <typename Self>
std::pair<Var, Var> DeepQoEModel::graph_impl(Self& self, Tape& tape,
                                             std::span<const Record> batch, bool training,
                                             Rng* rng) {
  const auto& schema = *self.schema_;
  if (batch.empty()) throw Error(Errc::PreconditionViolation, "empty batch");
  for (const auto& r : batch) schema::validate_record(r, schema);
  const std::size_t m = batch.size();

  std::vector<Var> parts;
  parts.reserve(self.branches_.size());
  for (std::size_t b = 0; b < self.branches_.size(); ++b) {
    auto& br = self.branches_[b];
    const BranchSpec& spec = self.specs_[b];
    const std::size_t fi = br.field_index;
    Var v;
    if (const auto* text = std::get_if<TextVectors>(&spec.extractor)) {
      Tensor x(m, text->table->dim());
      for (std::size_t i = 0; i < m; ++i) {
        const auto vec = wordvec::embed_text(std::get<std::string>(batch[i].values[fi]), *text->table);
        std::copy(vec.begin(), vec.end(), x.data().begin() + static_cast<std::ptrdiff_t>(i * x.cols()));
      }
      v = tape.constant(std::move(x));
    } else if (std::holds_alternative<EmbeddingExtractor>(spec.extractor)) {
      std::vector<std::size_t> idx(m);
      for (std::size_t i = 0; i < m; ++i) idx[i] = std::get<std::size_t>(batch[i].values[fi]);
      v = diff::embedding_forward(tape, idx, *br.embedding);
    } else if (std::holds_alternative<DenseScalar>(spec.extractor)) {
      auto it = self.norm_.find(spec.field);
      if (it == self.norm_.end()) {
        throw Error(Errc::PreconditionViolation,
                    "no normalization statistics for '" + spec.field + "'");
      }
      Tensor x(m, 1);
      for (std::size_t i = 0; i < m; ++i) {
        x[i] = schema::normalize(std::get<double>(batch[i].values[fi]), it->second);
      }
      v = diff::dense_forward(tape, tape.constant(std::move(x)), *br.scalar);
    } else {
      const auto& first = std::get<std::vector<double>>(batch[0].values[fi]);
      Tensor x(m, first.size());
      for (std::size_t i = 0; i < m; ++i) {
        const auto& vec = std::get<std::vector<double>>(batch[i].values[fi]);
        std::copy(vec.begin(), vec.end(), x.data().begin() + static_cast<std::ptrdiff_t>(i * x.cols()));
      }
      v = tape.constant(std::move(x));
    }
    if (br.projection) v = diff::matmul(tape, v, tape.param(*br.projection));
    parts.push_back(v);
  }

  Rng unused(0);
  Rng& drop_rng = rng != nullptr ? *rng : unused;
  Var s = diff::concat_cols(tape, parts);
  for (auto& layer : self.hidden_) {
    s = diff::dense_forward(tape, s, layer);
    s = diff::dropout(tape, s, self.config_.dropout, drop_rng, training);
  }
  Var head = diff::dense_forward(tape, s, self.head_);
  if (std::holds_alternative<SoftmaxHead>(self.config_.head)) head = diff::softmax(tape, head);
  return {head, s};
}

std::pair<Var, Var> DeepQoEModel::graph(Tape& tape, std::span<const Record> batch, bool training,
                                        Rng& rng) {
  return graph_impl(*this, tape, batch, training, &rng);
}

std::pair<Var, Var> DeepQoEModel::graph(Tape& tape, std::span<const Record> batch) const {
  return graph_impl(*this, tape, batch, false, nullptr);
}

Var DeepQoEModel::loss(Tape& tape, std::span<const Record> batch, bool training, Rng& rng) {
  auto [head, rep] = graph(tape, batch, training, rng);
  if (is_classifier()) {
    std::vector<std::size_t> labels(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = schema::class_of(batch[i]);
    return diff::cross_entropy(tape, head, labels);
  }
  Tensor target(batch.size(), 1);
  for (std::size_t i = 0; i < batch.size(); ++i) target[i] = schema::score_of(batch[i]);
  return diff::mse(tape, head, tape.constant(std::move(target)));
}

ForwardOutput forward(DeepQoEModel& model, std::span<const Record> batch, bool training, Rng& rng) {
  Tape tape;
  auto [head, rep] = model.graph(tape, batch, training, rng);
  return {tape.value(head), tape.value(rep)};
}

ForwardOutput forward(const DeepQoEModel& model, std::span<const Record> batch) {
  Tape tape;
  auto [head, rep] = model.graph(tape, batch);
  return {tape.value(head), tape.value(rep)};
}

// --- training -----------------------------------------------------------------

TrainReport train(DeepQoEModel& model, const Dataset& dataset, const TrainConfig& config) {
  if (dataset.empty()) throw Error(Errc::EmptyDataset, "cannot train on an empty dataset");
  if (config.epochs == 0) throw Error(Errc::PreconditionViolation, "epochs must be >= 1");
  if (config.batch_size == 0 || config.batch_size > dataset.size()) {
    throw Error(Errc::PreconditionViolation,
                "batch size must lie in [1, " + std::to_string(dataset.size()) + "]");
  }
  if (!(*dataset.schema == model.schema())) {
    throw Error(Errc::SchemaViolation, "dataset schema differs from the model schema");
  }
  if (!model.has_norm_stats()) model.fit_norm_stats(dataset);

  const auto start = std::chrono::steady_clock::now();
  diff::Optimizer optimizer(config.optimizer);
  const auto params = model.params();
  for (auto* p : params) p->zero_grad();
  const Rng base(config.seed);
  const std::size_t n = dataset.size();

  TrainReport report;
  std::vector<Record> batch;
  batch.reserve(config.batch_size);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    if (config.shuffle) order = base.split(2 * epoch).permutation(n);
    Rng drop_rng = base.split(2 * epoch + 1);

    double total = 0.0;
    for (std::size_t startIdx = 0; startIdx < n; startIdx += config.batch_size) {
      const std::size_t end = std::min(n, startIdx + config.batch_size);
      batch.clear();
      for (std::size_t i = startIdx; i < end; ++i) batch.push_back(dataset.records[order[i]]);
      Tape tape;
      Var loss = model.loss(tape, batch, true, drop_rng);
      tape.backward(loss);
      optimizer.step(params);
      total += tape.value(loss)[0] * static_cast<double>(batch.size());
    }
    report.epoch_loss.push_back(total / static_cast<double>(n));
    if (config.on_epoch) config.on_epoch(epoch, report.epoch_loss.back());
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.checksum = param_checksum(model);
  return report;
}

// --- inference ----------------------------------------------------------------

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::Empty, "argmax of nothing");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::pair<std::size_t, std::vector<double>> predict_class(const DeepQoEModel& model,
                                                          const Record& record) {
  if (!model.is_classifier()) throw Error(Errc::WrongHead, "model has a regression head");
  auto out = forward(model, std::span<const Record>(&record, 1));
  auto probs = out.head.row_vector(0);
  return {argmax(probs), std::move(probs)};
}

double predict_score(const DeepQoEModel& model, const Record& record) {
  if (model.is_classifier()) throw Error(Errc::WrongHead, "model has a classification head");
  return forward(model, std::span<const Record>(&record, 1)).head[0];
}

std::vector<double> extract_representation(const DeepQoEModel& model, const Record& record) {
  return forward(model, std::span<const Record>(&record, 1)).representation.row_vector(0);
}

std::string param_checksum(const DeepQoEModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto* p : model.params()) {
    for (double v : p->value.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xFFU;
        h *= 0x100000001b3ULL;
      }
    }
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace deepqoe::model
