#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deepqoe/model.hpp"

namespace deepqoe::eval {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes = 0);

  std::size_t num_classes() const noexcept { return k_; }
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }
  void add(std::size_t truth, std::size_t predicted);
  std::size_t total() const;
  std::size_t trace() const;

 private:
  std::size_t k_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> preds,
                                 std::span<const std::size_t> truth, std::size_t num_classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  // Set when no record was predicted (precision) or present (recall) for the
  // class; the corresponding value is reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm);

struct MetricsReport {
  std::size_t n = 0;
  std::optional<double> accuracy;
  std::optional<ConfusionMatrix> confusion;
  std::vector<ClassMetrics> per_class;
  std::optional<double> mse;
  std::optional<double> srocc;
  double seconds = 0.0;
};

double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> truth);
double mse_metric(std::span<const double> pred, std::span<const double> truth);

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> fractional_ranks(std::span<const double> values);
double pearson(std::span<const double> x, std::span<const double> y);
// Pearson correlation of the fractional ranks.
double srocc(std::span<const double> pred, std::span<const double> truth);

// Classification: accuracy, confusion, per-class precision/recall.
// Regression: mse, and srocc when both sides vary.
MetricsReport evaluate(const model::DeepQoEModel& model, const schema::Dataset& dataset);

struct FoldResult {
  std::string group;
  MetricsReport metrics;
  std::size_t train_size = 0;
  std::vector<std::string> tested_ids;
};

// Fresh model per fold; each fold's model and training seeds come from
// (train_config.seed, group value) so results do not depend on fold order.
std::vector<FoldResult> run_leave_one_group_out(const schema::Dataset& dataset,
                                                const std::vector<model::BranchSpec>& branches,
                                                const model::NetworkConfig& network,
                                                const model::TrainConfig& train_config,
                                                bool parallel = true);

std::uint64_t fold_seed(std::uint64_t base_seed, const std::string& group);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::size_t count = 0;
};

using Protocol = std::function<std::map<std::string, double>(std::uint64_t seed)>;

std::map<std::string, Aggregate> repeat_study(const Protocol& protocol, std::size_t repeats,
                                              std::uint64_t base_seed);

template <typename F>
double time_training(F&& fn) {
  const auto start = std::chrono::steady_clock::now();
  std::forward<F>(fn)();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- reports ------------------------------------------------------------------

// One `name<TAB>value` line per metric.
void write_metrics_tsv(std::ostream& out, const MetricsReport& report);
void write_confusion_tsv(std::ostream& out, const ConfusionMatrix& cm,
                         const std::vector<std::string>& class_labels);
// Header row of held-out groups, then one row of per-fold MSE (or accuracy).
void write_fold_table(std::ostream& out, const std::vector<FoldResult>& folds);
// JSON summary of a report.
std::string summary_json(const MetricsReport& report);

std::string format_metric(double v);
std::string format_seconds(double seconds);

}  // namespace deepqoe::eval
