#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deepqoe/schema.hpp"
#include "deepqoe/wordvec.hpp"

namespace deepqoe::baselines {

// --- per-title bitrate regression --------------------------------------------

struct TitleSample {
  std::string title;
  double bitrate = 0.0;
  double mos = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double predict(double bitrate) const { return intercept + slope * bitrate; }
};

// MOS = intercept + slope * bitrate, fitted independently per title.
struct PerTitleRegression {
  std::map<std::string, LinearFit> fits;
};

// Ordinary least squares per title; throws DegenerateTitle when a title has
// fewer than two distinct bitrates.
PerTitleRegression fit_per_title(std::span<const TitleSample> samples);

struct PerTitleEvaluation {
  std::map<std::string, double> mse;  // per title
  double mean_mse = 0.0;              // unweighted mean over titles
};

PerTitleEvaluation evaluate_per_title(const PerTitleRegression& model,
                                      std::span<const TitleSample> samples);

// --- k-nearest neighbours -------------------------------------------------------

class KnnClassifier {
 public:
  KnnClassifier(std::size_t k, std::vector<std::vector<double>> points, std::vector<std::size_t> labels);

  std::size_t k() const noexcept { return k_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return points_.size(); }

  // Majority vote among the k nearest (Euclidean) stored points. Distance
  // ties go to the lower stored index, vote ties to the smaller class.
  std::size_t predict(std::span<const double> query) const;

 private:
  std::size_t k_;
  std::size_t dim_;
  std::vector<std::vector<double>> points_;
  std::vector<std::size_t> labels_;
};

KnnClassifier knn_fit(std::vector<std::vector<double>> features, std::vector<std::size_t> labels,
                      std::size_t k);
std::size_t knn_predict(const KnnClassifier& clf, std::span<const double> query);

// --- untrained feature encoding -------------------------------------------------

// Text -> mean word vector, categorical -> one-hot, continuous -> min-max
// normalized scalar, video feature -> as is; concatenated in schema order.
// `tables` maps text field names to their word vectors, `norm` continuous
// field names to their statistics.
std::vector<double> raw_feature_encode(const schema::Record& record, const schema::DatasetSchema& schema,
                                       const std::map<std::string, schema::NormStats>& norm,
                                       const std::map<std::string, const wordvec::WordVectorTable*>& tables);

std::size_t raw_feature_width(const schema::DatasetSchema& schema,
                              const std::map<std::string, const wordvec::WordVectorTable*>& tables);

}  // namespace deepqoe::baselines
