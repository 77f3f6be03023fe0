#pragma once

// Reverse-mode differentiation over small dense 64-bit tensors.
//
// A Tape records every operation applied to its Vars; Tape::backward walks the
// record in reverse and accumulates gradients into the Params that were bound
// with Tape::param(Param&). Params bound through a const reference are frozen:
// they contribute values but never receive gradients.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "deepqoe/rng.hpp"

namespace deepqoe::diff {

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor row(std::vector<double> values);
  static Tensor column(std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool same_shape(const Tensor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row_span(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  std::vector<double> row_vector(std::size_t r) const;

  void fill(double value);
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_string(const Tensor& t);

// Learnable tensor with its accumulated gradient. The id survives copies so a
// copied model maps onto the same optimizer state slots.
struct Param {
  Param() = default;
  Param(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;
  std::uint64_t id = 0;

  void zero_grad() { grad.fill(0.0); }
};

class Tape;

// Handle to a node on a Tape.
struct Var {
  std::size_t index = static_cast<std::size_t>(-1);
  const Tape* tape = nullptr;
};

class Tape {
 public:
  // allow_dropout=false turns any stochastic dropout on this tape into a
  // precondition error (used by the gradient checker).
  explicit Tape(bool allow_dropout = true) : allow_dropout_(allow_dropout) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(Param& p);
  Var param(const Param& p);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  bool allows_dropout() const noexcept { return allow_dropout_; }

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be 1x1. Gradients are
  // added (not assigned) to bound Params.
  void backward(Var loss);

  // Low-level hook used by the ops below.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn, const char* op);
  Tensor& grad_ref(std::size_t index) { return nodes_[index].grad; }
  const Tensor& value_at(std::size_t index) const { return nodes_[index].value; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Param* param = nullptr;
  };

  std::size_t check(Var v) const;

  std::vector<Node> nodes_;
  bool allow_dropout_;
};

// --- differentiable ops -----------------------------------------------------

Var matmul(Tape& t, Var a, Var b);
Var add_row_bias(Tape& t, Var x, Var bias);
Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var x, double factor);
Var sum(Tape& t, Var x);
Var relu(Tape& t, Var x);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var gather_rows(Tape& t, Var table, std::span<const std::size_t> indices);
Var dropout(Tape& t, Var x, double rate, Rng& rng, bool training);
Var softmax(Tape& t, Var z);
Var cross_entropy(Tape& t, Var probs, std::span<const std::size_t> labels);
Var mse(Tape& t, Var pred, Var target);

// --- plain kernels (no recording) -------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax(const Tensor& z);
double cross_entropy(const Tensor& probs, std::span<const std::size_t> labels);
double mse(const Tensor& pred, const Tensor& target);

inline constexpr double kProbabilityFloor = 1e-12;

// --- layers -------------------------------------------------------------------

enum class Activation { Identity, ReLU };

struct DenseLayer {
  Param weight;  // in x out
  Param bias;    // 1 x out
  Activation activation = Activation::Identity;

  std::size_t in() const { return weight.value.rows(); }
  std::size_t out() const { return weight.value.cols(); }
};

DenseLayer make_dense(const std::string& name, std::size_t in, std::size_t out,
                      Activation activation, Rng& rng);
void glorot_uniform(Tensor& w, Rng& rng);

Var dense_forward(Tape& t, Var x, DenseLayer& layer);
Var dense_forward(Tape& t, Var x, const DenseLayer& layer);
Tensor dense_forward(const Tensor& x, const DenseLayer& layer);

struct EmbeddingTable {
  Param table;  // vocab x dim

  std::size_t vocab() const { return table.value.rows(); }
  std::size_t dim() const { return table.value.cols(); }
};

EmbeddingTable make_embedding(const std::string& name, std::size_t vocab, std::size_t dim,
                              Rng& rng);
Var embedding_forward(Tape& t, std::span<const std::size_t> indices, EmbeddingTable& table);
Var embedding_forward(Tape& t, std::span<const std::size_t> indices,
                      const EmbeddingTable& table);
Tensor embedding_forward(std::size_t index, const EmbeddingTable& table);

struct DropoutLayer {
  explicit DropoutLayer(double rate = 0.0);
  double rate;
};

Var dropout_forward(Tape& t, Var x, const DropoutLayer& layer, Rng& rng, bool training);
Tensor dropout_forward(const Tensor& x, const DropoutLayer& layer, Rng& rng, bool training);

// --- optimizers ---------------------------------------------------------------

struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

using OptimizerSpec = std::variant<SgdConfig, AdamConfig>;

class Optimizer {
 public:
  explicit Optimizer(OptimizerSpec spec);

  const OptimizerSpec& spec() const noexcept { return spec_; }
  // Applies one update from the accumulated grads, then zeroes them.
  void step(std::span<Param* const> params);

 private:
  struct Slot {
    Tensor first;
    Tensor second;
    std::uint64_t steps = 0;
  };

  OptimizerSpec spec_;
  std::unordered_map<std::uint64_t, Slot> slots_;
};

// --- verification -------------------------------------------------------------

struct GradCheckOptions {
  double epsilon = 1e-5;
  // 0 checks every coordinate; otherwise a seeded sample of this many.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// loss_fn builds a scalar loss on the supplied tape. Tapes handed to it reject
// stochastic dropout.
GradCheckResult grad_check(const std::function<Var(Tape&)>& loss_fn,
                           std::span<Param* const> params, const GradCheckOptions& options = {});

}  // namespace deepqoe::diff
