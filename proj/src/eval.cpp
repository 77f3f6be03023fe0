#include "deepqoe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <ostream>
#include <sstream>

#include "deepqoe/error.hpp"
#include "deepqoe/json_io.hpp"

namespace deepqoe::eval {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : k_(num_classes), counts_(num_classes * num_classes, 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= k_ || predicted >= k_) throw Error(Errc::IndexOutOfRange, "class index outside matrix");
  ++counts_[truth * k_ + predicted];
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < k_; ++i) t += at(i, i);
  return t;
}

namespace {
void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(Errc::LengthMismatch, std::to_string(a) + " predictions vs " + std::to_string(b) + " truths");
  }
}
}  // namespace

ConfusionMatrix confusion_matrix(std::span<const std::size_t> preds,
                                 std::span<const std::size_t> truth, std::size_t num_classes) {
  check_lengths(preds.size(), truth.size());
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) cm.add(truth[i], preds[i]);
  return cm;
}

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm) {
  std::vector<ClassMetrics> out(cm.num_classes());
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t o = 0; o < cm.num_classes(); ++o) {
      predicted += cm.at(o, c);
      actual += cm.at(c, o);
    }
    const double hit = static_cast<double>(cm.at(c, c));
    if (predicted == 0) {
      out[c].precision_undefined = true;
    } else {
      out[c].precision = hit / static_cast<double>(predicted);
    }
    if (actual == 0) {
      out[c].recall_undefined = true;
    } else {
      out[c].recall = hit / static_cast<double>(actual);
    }
  }
  return out;
}

double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> truth) {
  check_lengths(preds.size(), truth.size());
  if (preds.empty()) throw Error(Errc::Empty, "accuracy of zero predictions");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double mse_metric(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred.size(), truth.size());
  if (pred.empty()) throw Error(Errc::Empty, "mse of zero predictions");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = truth[i] - pred[i];
    total += r * r;
  }
  return total / static_cast<double>(pred.size());
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share ranks i+1..j+1
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size());
  const std::size_t n = x.size();
  if (n < 2) throw Error(Errc::ConstantInput, "correlation needs at least 2 points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(Errc::ConstantInput, "correlation of a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double srocc(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred.size(), truth.size());
  const auto rp = fractional_ranks(pred);
  const auto rt = fractional_ranks(truth);
  return pearson(rp, rt);
}

MetricsReport evaluate(const model::DeepQoEModel& model, const schema::Dataset& dataset) {
  if (dataset.empty()) throw Error(Errc::Empty, "nothing to evaluate");
  MetricsReport report;
  report.n = dataset.size();
  const auto start = std::chrono::steady_clock::now();
  const auto out = model::forward(model, dataset.records);
  if (model.is_classifier()) {
    std::vector<std::size_t> preds(dataset.size()), truth(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      preds[i] = model::argmax(out.head.row_span(i));
      truth[i] = schema::class_of(dataset.records[i]);
    }
    report.accuracy = accuracy(preds, truth);
    report.confusion = confusion_matrix(preds, truth, model.output_width());
    report.per_class = per_class_metrics(*report.confusion);
  } else {
    std::vector<double> pred(dataset.size()), truth(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      pred[i] = out.head[i];
      truth[i] = schema::score_of(dataset.records[i]);
    }
    report.mse = mse_metric(pred, truth);
    try {
      report.srocc = srocc(pred, truth);
    } catch (const Error& e) {
      if (e.code() != Errc::ConstantInput) throw;
    }
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::uint64_t fold_seed(std::uint64_t base_seed, const std::string& group) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : group) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return Rng(base_seed).split(h).seed();
}

std::vector<FoldResult> run_leave_one_group_out(const schema::Dataset& dataset,
                                                const std::vector<model::BranchSpec>& branches,
                                                const model::NetworkConfig& network,
                                                const model::TrainConfig& train_config,
                                                bool parallel) {
  const auto folds = schema::leave_one_group_out(dataset);
  auto run_fold = [&](const schema::Fold& fold) {
    const std::uint64_t seed = fold_seed(train_config.seed, fold.group);
    auto model = model::build_model(dataset.schema, branches, network, seed);
    model::TrainConfig cfg = train_config;
    cfg.seed = Rng(seed).split(1).seed();
    cfg.on_epoch = nullptr;
    FoldResult result;
    result.group = fold.group;
    result.train_size = fold.train.size();
    const double seconds = time_training([&] { model::train(model, fold.train, cfg); });
    result.metrics = evaluate(model, fold.test);
    result.metrics.seconds = seconds;
    for (const auto& r : fold.test.records) result.tested_ids.push_back(r.id);
    return result;
  };

  std::vector<FoldResult> results;
  if (parallel) {
    std::vector<std::future<FoldResult>> pending;
    for (const auto& fold : folds) {
      pending.push_back(std::async(std::launch::async, run_fold, std::cref(fold)));
    }
    for (auto& f : pending) results.push_back(f.get());
  } else {
    for (const auto& fold : folds) results.push_back(run_fold(fold));
  }
  return results;
}

std::map<std::string, Aggregate> repeat_study(const Protocol& protocol, std::size_t repeats,
                                              std::uint64_t base_seed) {
  if (repeats == 0) throw Error(Errc::PreconditionViolation, "repeats must be >= 1");
  const Rng base(base_seed);
  std::map<std::string, std::vector<double>> samples;
  for (std::size_t r = 0; r < repeats; ++r) {
    for (const auto& [name, value] : protocol(base.split(r).seed())) samples[name].push_back(value);
  }
  std::map<std::string, Aggregate> out;
  for (const auto& [name, values] : samples) {
    Aggregate a;
    a.count = values.size();
    a.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(a.count);
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(a.count));
    out[name] = a;
  }
  return out;
}

// --- reports ------------------------------------------------------------------

std::string format_metric(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << std::fixed << v;
  return ss.str();
}

std::string format_seconds(double seconds) {
  std::ostringstream ss;
  ss.precision(2);
  ss << std::fixed << seconds;
  return ss.str();
}

void write_metrics_tsv(std::ostream& out, const MetricsReport& r) {
  out << "n\t" << r.n << '\n';
  if (r.accuracy) out << "accuracy\t" << format_metric(*r.accuracy) << '\n';
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    out << "precision_" << c << '\t' << format_metric(r.per_class[c].precision)
        << (r.per_class[c].precision_undefined ? "\tundefined" : "") << '\n';
    out << "recall_" << c << '\t' << format_metric(r.per_class[c].recall)
        << (r.per_class[c].recall_undefined ? "\tundefined" : "") << '\n';
  }
  if (r.mse) out << "mse\t" << format_metric(*r.mse) << '\n';
  if (r.srocc) out << "srocc\t" << format_metric(*r.srocc) << '\n';
}

void write_confusion_tsv(std::ostream& out, const ConfusionMatrix& cm,
                         const std::vector<std::string>& labels) {
  auto label = [&](std::size_t i) { return i < labels.size() ? labels[i] : std::to_string(i); };
  out << "truth\\predicted";
  for (std::size_t c = 0; c < cm.num_classes(); ++c) out << '\t' << label(c);
  out << '\n';
  for (std::size_t t = 0; t < cm.num_classes(); ++t) {
    out << label(t);
    for (std::size_t p = 0; p < cm.num_classes(); ++p) out << '\t' << cm.at(t, p);
    out << '\n';
  }
}

void write_fold_table(std::ostream& out, const std::vector<FoldResult>& folds) {
  const bool regression = !folds.empty() && folds.front().metrics.mse.has_value();
  out << "metric";
  for (const auto& f : folds) out << '\t' << f.group;
  out << '\n' << (regression ? "mse" : "accuracy");
  for (const auto& f : folds) {
    out << '\t' << format_metric(regression ? *f.metrics.mse : *f.metrics.accuracy);
  }
  out << '\n';
}

std::string summary_json(const MetricsReport& r) {
  json_io::json j;
  j["n"] = r.n;
  if (r.accuracy) j["accuracy"] = *r.accuracy;
  if (r.mse) j["mse"] = *r.mse;
  if (r.srocc) j["srocc"] = *r.srocc;
  if (r.confusion) {
    json_io::json rows = json_io::json::array();
    for (std::size_t t = 0; t < r.confusion->num_classes(); ++t) {
      std::vector<std::size_t> row;
      for (std::size_t p = 0; p < r.confusion->num_classes(); ++p) row.push_back(r.confusion->at(t, p));
      rows.push_back(row);
    }
    j["confusion"] = rows;
  }
  return j.dump(2);
}

}  // namespace deepqoe::eval
