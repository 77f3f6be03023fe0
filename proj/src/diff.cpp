#include "deepqoe/diff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "deepqoe/error.hpp"

namespace deepqoe::diff {

namespace {

std::atomic<std::uint64_t> g_next_param_id{1};

void require_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) {
    throw Error(Errc::NonFinite, std::string(op) + " produced a non-finite value");
  }
}

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::ShapeMismatch, what);
}

void add_into(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

// --- Tensor -------------------------------------------------------------------

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_shape(data_.size() == rows * cols,
                "tensor data length " + std::to_string(data_.size()) + " does not match " +
                    std::to_string(rows) + "x" + std::to_string(cols));
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(1, n, std::move(values));
}

Tensor Tensor::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(n, 1, std::move(values));
}

std::vector<double> Tensor::row_vector(std::size_t r) const {
  auto s = row_span(r);
  return {s.begin(), s.end()};
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string shape_string(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

Param::Param(std::string name_, Tensor value_)
    : name(std::move(name_)),
      value(std::move(value_)),
      grad(value.rows(), value.cols()),
      id(g_next_param_id.fetch_add(1)) {}

// --- Tape ---------------------------------------------------------------------

std::size_t Tape::check(Var v) const {
  if (v.tape != this || v.index >= nodes_.size()) {
    throw Error(Errc::GraphNotRecorded, "variable does not belong to this tape");
  }
  return v.index;
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn, const char* op) {
  require_finite(value, op);
  Node node;
  node.grad = Tensor(value.rows(), value.cols());
  node.value = std::move(value);
  node.parents = std::move(parents);
  node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1, this};
}

Var Tape::constant(Tensor value) { return record(std::move(value), {}, nullptr, "constant"); }

Var Tape::param(Param& p) {
  Var v = record(p.value, {}, nullptr, "param");
  nodes_[v.index].param = &p;
  return v;
}

Var Tape::param(const Param& p) { return record(p.value, {}, nullptr, "param"); }

const Tensor& Tape::value(Var v) const { return nodes_[check(v)].value; }
const Tensor& Tape::grad(Var v) const { return nodes_[check(v)].grad; }

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw Error(Errc::GraphNotRecorded, "tape is empty");
  const std::size_t root = check(loss);
  require_shape(nodes_[root].value.rows() == 1 && nodes_[root].value.cols() == 1,
                "backward requires a 1x1 loss, got " + shape_string(nodes_[root].value));
  for (auto& n : nodes_) n.grad.fill(0.0);
  nodes_[root].grad[0] = 1.0;
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      if (!n.param->grad.same_shape(n.param->value)) {
        n.param->grad = Tensor(n.param->value.rows(), n.param->value.cols());
      }
      add_into(n.param->grad, n.grad);
    }
  }
}

// --- plain kernels ------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_shape(a.cols() == b.rows(),
                "matmul " + shape_string(a) + " by " + shape_string(b));
  Tensor c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Tensor softmax(const Tensor& z) {
  if (z.cols() < 2) throw Error(Errc::ShapeMismatch, "softmax needs at least 2 columns");
  Tensor y(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row_span(i);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) {
      y(i, j) = std::exp(z(i, j) - peak);
      total += y(i, j);
    }
    for (std::size_t j = 0; j < z.cols(); ++j) y(i, j) /= total;
  }
  return y;
}

double cross_entropy(const Tensor& probs, std::span<const std::size_t> labels) {
  require_shape(probs.rows() == labels.size() && probs.rows() > 0,
                "cross_entropy: " + shape_string(probs) + " probs vs " +
                    std::to_string(labels.size()) + " labels");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= probs.cols()) {
      throw Error(Errc::IndexOutOfRange, "cross_entropy label " + std::to_string(labels[i]));
    }
    total -= std::log(std::max(probs(i, labels[i]), kProbabilityFloor));
  }
  return total / static_cast<double>(labels.size());
}

double mse(const Tensor& pred, const Tensor& target) {
  require_shape(pred.same_shape(target) && pred.rows() > 0,
                "mse: " + shape_string(pred) + " vs " + shape_string(target));
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = target[i] - pred[i];
    total += r * r;
  }
  return total / static_cast<double>(pred.rows());
}

// --- differentiable ops -------------------------------------------------------

Var matmul(Tape& t, Var a, Var b) {
  Tensor out = matmul(t.value(a), t.value(b));
  const std::size_t ia = a.index, ib = b.index;
  return t.record(std::move(out), {ia, ib},
                  [ia, ib](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_ref(self);
                    const Tensor& av = tp.value_at(ia);
                    const Tensor& bv = tp.value_at(ib);
                    Tensor& ga = tp.grad_ref(ia);
                    Tensor& gb = tp.grad_ref(ib);
                    for (std::size_t i = 0; i < av.rows(); ++i) {
                      for (std::size_t k = 0; k < av.cols(); ++k) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < bv.cols(); ++j) {
                          acc += g(i, j) * bv(k, j);
                          gb(k, j) += av(i, k) * g(i, j);
                        }
                        ga(i, k) += acc;
                      }
                    }
                  },
                  "matmul");
}

Var add_row_bias(Tape& t, Var x, Var bias) {
  const Tensor& xv = t.value(x);
  const Tensor& bv = t.value(bias);
  require_shape(bv.rows() == 1 && bv.cols() == xv.cols(),
                "bias " + shape_string(bv) + " for input " + shape_string(xv));
  Tensor out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bv[j];
  }
  const std::size_t ix = x.index, ib = bias.index;
  return t.record(std::move(out), {ix, ib},
                  [ix, ib](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_ref(self);
                    add_into(tp.grad_ref(ix), g);
                    Tensor& gb = tp.grad_ref(ib);
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      for (std::size_t j = 0; j < g.cols(); ++j) gb[j] += g(i, j);
                    }
                  },
                  "add_row_bias");
}

Var add(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_shape(av.same_shape(bv), "add " + shape_string(av) + " and " + shape_string(bv));
  Tensor out = av;
  add_into(out, bv);
  const std::size_t ia = a.index, ib = b.index;
  return t.record(std::move(out), {ia, ib},
                  [ia, ib](Tape& tp, std::size_t self) {
                    add_into(tp.grad_ref(ia), tp.grad_ref(self));
                    add_into(tp.grad_ref(ib), tp.grad_ref(self));
                  },
                  "add");
}

Var scale(Tape& t, Var x, double factor) {
  Tensor out = t.value(x);
  for (auto& v : out.data()) v *= factor;
  const std::size_t ix = x.index;
  return t.record(std::move(out), {ix},
                  [ix, factor](Tape& tp, std::size_t self) {
                    Tensor& gx = tp.grad_ref(ix);
                    const Tensor& g = tp.grad_ref(self);
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
                  },
                  "scale");
}

Var sum(Tape& t, Var x) {
  auto d = t.value(x).data();
  Tensor out(1, 1, std::accumulate(d.begin(), d.end(), 0.0));
  const std::size_t ix = x.index;
  return t.record(std::move(out), {ix},
                  [ix](Tape& tp, std::size_t self) {
                    const double g = tp.grad_ref(self)[0];
                    for (auto& v : tp.grad_ref(ix).data()) v += g;
                  },
                  "sum");
}

Var relu(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  const std::size_t ix = x.index;
  return t.record(std::move(out), {ix},
                  [ix](Tape& tp, std::size_t self) {
                    const Tensor& xv = tp.value_at(ix);
                    const Tensor& g = tp.grad_ref(self);
                    Tensor& gx = tp.grad_ref(ix);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                      if (xv[i] > 0.0) gx[i] += g[i];
                    }
                  },
                  "relu");
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw Error(Errc::ShapeMismatch, "concat of zero tensors");
  const std::size_t rows = t.value(parts[0]).rows();
  std::size_t cols = 0;
  std::vector<std::size_t> parents;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    require_shape(v.rows() == rows, "concat row mismatch: " + shape_string(v));
    cols += v.cols();
    parents.push_back(p.index);
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, offset + j) = v(i, j);
    }
    offset += v.cols();
  }
  return t.record(std::move(out), parents,
                  [parents](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_ref(self);
                    std::size_t off = 0;
                    for (std::size_t p : parents) {
                      Tensor& gp = tp.grad_ref(p);
                      for (std::size_t i = 0; i < gp.rows(); ++i) {
                        for (std::size_t j = 0; j < gp.cols(); ++j) gp(i, j) += g(i, off + j);
                      }
                      off += gp.cols();
                    }
                  },
                  "concat_cols");
}

Var gather_rows(Tape& t, Var table, std::span<const std::size_t> indices) {
  const Tensor& tv = t.value(table);
  Tensor out(indices.size(), tv.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= tv.rows()) {
      throw Error(Errc::IndexOutOfRange, "row " + std::to_string(indices[i]) + " of a " +
                                             std::to_string(tv.rows()) + "-row table");
    }
    for (std::size_t j = 0; j < tv.cols(); ++j) out(i, j) = tv(indices[i], j);
  }
  const std::size_t it = table.index;
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return t.record(std::move(out), {it},
                  [it, idx = std::move(idx)](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_ref(self);
                    Tensor& gt = tp.grad_ref(it);
                    for (std::size_t i = 0; i < idx.size(); ++i) {
                      for (std::size_t j = 0; j < g.cols(); ++j) gt(idx[i], j) += g(i, j);
                    }
                  },
                  "gather_rows");
}

Var dropout(Tape& t, Var x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(Errc::PreconditionViolation, "dropout rate must lie in [0, 1)");
  }
  if (!training || rate == 0.0) return x;
  if (!t.allows_dropout()) {
    throw Error(Errc::PreconditionViolation, "stochastic dropout on a deterministic tape");
  }
  const Tensor& xv = t.value(x);
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor mask(xv.rows(), xv.cols());
  for (auto& m : mask.data()) m = rng.bernoulli(rate) ? 0.0 : keep_scale;
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const std::size_t ix = x.index;
  return t.record(std::move(out), {ix},
                  [ix, mask = std::move(mask)](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_ref(self);
                    Tensor& gx = tp.grad_ref(ix);
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += mask[i] * g[i];
                  },
                  "dropout");
}

Var softmax(Tape& t, Var z) {
  Tensor out = softmax(t.value(z));
  const std::size_t iz = z.index;
  return t.record(std::move(out), {iz},
                  [iz](Tape& tp, std::size_t self) {
                    const Tensor& y = tp.value_at(self);
                    const Tensor& g = tp.grad_ref(self);
                    Tensor& gz = tp.grad_ref(iz);
                    for (std::size_t i = 0; i < y.rows(); ++i) {
                      double dot = 0.0;
                      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
                      for (std::size_t j = 0; j < y.cols(); ++j) {
                        gz(i, j) += y(i, j) * (g(i, j) - dot);
                      }
                    }
                  },
                  "softmax");
}

Var cross_entropy(Tape& t, Var probs, std::span<const std::size_t> labels) {
  const double loss = cross_entropy(t.value(probs), labels);
  const std::size_t ip = probs.index;
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return t.record(Tensor(1, 1, loss), {ip},
                  [ip, lab = std::move(lab)](Tape& tp, std::size_t self) {
                    const double g = tp.grad_ref(self)[0];
                    const Tensor& p = tp.value_at(ip);
                    Tensor& gp = tp.grad_ref(ip);
                    const double m = static_cast<double>(lab.size());
                    for (std::size_t i = 0; i < lab.size(); ++i) {
                      const double pi = p(i, lab[i]);
                      if (pi > kProbabilityFloor) gp(i, lab[i]) -= g / (m * pi);
                    }
                  },
                  "cross_entropy");
}

Var mse(Tape& t, Var pred, Var target) {
  const double loss = mse(t.value(pred), t.value(target));
  const std::size_t ip = pred.index, it = target.index;
  return t.record(Tensor(1, 1, loss), {ip, it},
                  [ip, it](Tape& tp, std::size_t self) {
                    const double g = tp.grad_ref(self)[0];
                    const Tensor& p = tp.value_at(ip);
                    const Tensor& y = tp.value_at(it);
                    Tensor& gp = tp.grad_ref(ip);
                    Tensor& gy = tp.grad_ref(it);
                    const double m = static_cast<double>(p.rows());
                    for (std::size_t i = 0; i < p.size(); ++i) {
                      const double d = 2.0 * (p[i] - y[i]) / m * g;
                      gp[i] += d;
                      gy[i] -= d;
                    }
                  },
                  "mse");
}

// --- layers -------------------------------------------------------------------

void glorot_uniform(Tensor& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (auto& v : w.data()) v = rng.uniform(-limit, limit);
}

DenseLayer make_dense(const std::string& name, std::size_t in, std::size_t out,
                      Activation activation, Rng& rng) {
  Tensor w(in, out);
  glorot_uniform(w, rng);
  return DenseLayer{Param(name + ".W", std::move(w)), Param(name + ".b", Tensor(1, out)),
                    activation};
}

namespace {
template <typename Layer>
Var dense_forward_impl(Tape& t, Var x, Layer& layer) {
  require_shape(t.value(x).cols() == layer.in(),
                "dense input " + shape_string(t.value(x)) + " into " +
                    std::to_string(layer.in()) + "->" + std::to_string(layer.out()) + " layer");
  Var y = add_row_bias(t, matmul(t, x, t.param(layer.weight)), t.param(layer.bias));
  return layer.activation == Activation::ReLU ? relu(t, y) : y;
}
}  // namespace

Var dense_forward(Tape& t, Var x, DenseLayer& layer) { return dense_forward_impl(t, x, layer); }
Var dense_forward(Tape& t, Var x, const DenseLayer& layer) {
  return dense_forward_impl(t, x, layer);
}

Tensor dense_forward(const Tensor& x, const DenseLayer& layer) {
  Tape t;
  return t.value(dense_forward(t, t.constant(x), layer));
}

EmbeddingTable make_embedding(const std::string& name, std::size_t vocab, std::size_t dim,
                              Rng& rng) {
  Tensor table(vocab, dim);
  for (auto& v : table.data()) v = rng.uniform(-0.05, 0.05);
  return EmbeddingTable{Param(name, std::move(table))};
}

Var embedding_forward(Tape& t, std::span<const std::size_t> indices, EmbeddingTable& table) {
  return gather_rows(t, t.param(table.table), indices);
}

Var embedding_forward(Tape& t, std::span<const std::size_t> indices,
                      const EmbeddingTable& table) {
  return gather_rows(t, t.param(table.table), indices);
}

Tensor embedding_forward(std::size_t index, const EmbeddingTable& table) {
  Tape t;
  const std::size_t idx[] = {index};
  return t.value(embedding_forward(t, idx, table));
}

DropoutLayer::DropoutLayer(double rate_) : rate(rate_) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(Errc::InvalidConfig, "dropout rate must lie in [0, 1)");
  }
}

Var dropout_forward(Tape& t, Var x, const DropoutLayer& layer, Rng& rng, bool training) {
  return dropout(t, x, layer.rate, rng, training);
}

Tensor dropout_forward(const Tensor& x, const DropoutLayer& layer, Rng& rng, bool training) {
  Tape t;
  return t.value(dropout(t, t.constant(x), layer.rate, rng, training));
}

// --- optimizers ---------------------------------------------------------------

Optimizer::Optimizer(OptimizerSpec spec) : spec_(spec) {
  if (const auto* sgd = std::get_if<SgdConfig>(&spec_)) {
    if (!(sgd->lr > 0.0) || !(sgd->momentum >= 0.0 && sgd->momentum < 1.0)) {
      throw Error(Errc::InvalidConfig, "SGD needs lr > 0 and momentum in [0, 1)");
    }
  } else {
    const auto& adam = std::get<AdamConfig>(spec_);
    if (!(adam.lr > 0.0) || !(adam.beta1 > 0.0 && adam.beta1 < 1.0) ||
        !(adam.beta2 > 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0)) {
      throw Error(Errc::InvalidConfig, "Adam needs lr > 0, betas in (0, 1), epsilon > 0");
    }
  }
}

void Optimizer::step(std::span<Param* const> params) {
  for (Param* p : params) {
    Slot& slot = slots_[p->id];
    if (!slot.first.same_shape(p->value)) {
      slot.first = Tensor(p->value.rows(), p->value.cols());
      slot.second = Tensor(p->value.rows(), p->value.cols());
    }
    ++slot.steps;
    auto w = p->value.data();
    auto g = p->grad.data();
    auto m = slot.first.data();
    if (const auto* sgd = std::get_if<SgdConfig>(&spec_)) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = sgd->momentum * m[i] - sgd->lr * g[i];
        w[i] += m[i];
      }
    } else {
      const auto& a = std::get<AdamConfig>(spec_);
      auto v = slot.second.data();
      const double t = static_cast<double>(slot.steps);
      const double c1 = 1.0 - std::pow(a.beta1, t);
      const double c2 = 1.0 - std::pow(a.beta2, t);
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * g[i];
        v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * g[i] * g[i];
        w[i] -= a.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + a.epsilon);
      }
    }
    require_finite(p->value, "optimizer step");
    p->zero_grad();
  }
}

// --- gradient check -----------------------------------------------------------

GradCheckResult grad_check(const std::function<Var(Tape&)>& loss_fn,
                           std::span<Param* const> params, const GradCheckOptions& options) {
  for (Param* p : params) p->grad = Tensor(p->value.rows(), p->value.cols());
  {
    Tape tape(false);
    tape.backward(loss_fn(tape));
  }
  auto evaluate = [&loss_fn]() {
    Tape tape(false);
    return tape.value(loss_fn(tape))[0];
  };

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    for (std::size_t i = 0; i < params[pi]->value.size(); ++i) coords.emplace_back(pi, i);
  }
  if (options.max_coords != 0 && coords.size() > options.max_coords) {
    Rng rng(options.seed);
    rng.shuffle(coords);
    coords.resize(options.max_coords);
  }

  GradCheckResult result;
  const double eps = options.epsilon;
  for (auto [pi, i] : coords) {
    Param& p = *params[pi];
    const double saved = p.value[i];
    p.value[i] = saved + eps;
    const double up = evaluate();
    p.value[i] = saved - eps;
    const double down = evaluate();
    p.value[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double analytic = p.grad[i];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    const double rel = std::abs(analytic - numeric) / denom;
    if (rel > result.max_rel_error || result.coords_checked == 0) {
      result.max_rel_error = rel;
      result.worst_param = p.name;
      result.worst_index = i;
      result.worst_analytic = analytic;
      result.worst_numeric = numeric;
    }
    ++result.coords_checked;
  }
  for (Param* p : params) p->zero_grad();
  return result;
}

}  // namespace deepqoe::diff
