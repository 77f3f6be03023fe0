#include "deepqoe/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "deepqoe/error.hpp"

namespace deepqoe::baselines {

PerTitleRegression fit_per_title(std::span<const TitleSample> samples) {
  std::map<std::string, std::vector<const TitleSample*>> by_title;
  for (const auto& s : samples) by_title[s.title].push_back(&s);
  PerTitleRegression model;
  for (const auto& [title, pts] : by_title) {
    std::set<double> distinct;
    for (const auto* p : pts) distinct.insert(p->bitrate);
    if (distinct.size() < 2) {
      throw Error(Errc::DegenerateTitle, "title '" + title + "' needs >= 2 distinct bitrates");
    }
    const double n = static_cast<double>(pts.size());
    double mx = 0.0, my = 0.0;
    for (const auto* p : pts) {
      mx += p->bitrate;
      my += p->mos;
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto* p : pts) {
      sxy += (p->bitrate - mx) * (p->mos - my);
      sxx += (p->bitrate - mx) * (p->bitrate - mx);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    model.fits.emplace(title, fit);
  }
  return model;
}

PerTitleEvaluation evaluate_per_title(const PerTitleRegression& model,
                                      std::span<const TitleSample> samples) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& s : samples) {
    auto it = model.fits.find(s.title);
    if (it == model.fits.end()) throw Error(Errc::UnknownTitle, "no fit for title '" + s.title + "'");
    const double r = s.mos - it->second.predict(s.bitrate);
    acc[s.title].first += r * r;
    acc[s.title].second += 1;
  }
  if (acc.empty()) throw Error(Errc::Empty, "no samples to evaluate");
  PerTitleEvaluation out;
  for (const auto& [title, sum_count] : acc) {
    const double m = sum_count.first / static_cast<double>(sum_count.second);
    out.mse[title] = m;
    out.mean_mse += m;
  }
  out.mean_mse /= static_cast<double>(out.mse.size());
  return out;
}

KnnClassifier::KnnClassifier(std::size_t k, std::vector<std::vector<double>> points,
                             std::vector<std::size_t> labels)
    : k_(k), dim_(0), points_(std::move(points)), labels_(std::move(labels)) {
  if (points_.size() != labels_.size()) {
    throw Error(Errc::LengthMismatch, "feature and label counts differ");
  }
  if (k_ == 0 || k_ % 2 == 0) throw Error(Errc::InvalidConfig, "k must be a positive odd number");
  if (points_.size() < k_) {
    throw Error(Errc::TooFewPoints, std::to_string(points_.size()) + " points for k=" + std::to_string(k_));
  }
  dim_ = points_.front().size();
  for (const auto& p : points_) {
    if (p.size() != dim_) throw Error(Errc::DimMismatch, "stored points differ in dimension");
  }
}

std::size_t KnnClassifier::predict(std::span<const double> query) const {
  if (query.size() != dim_) {
    throw Error(Errc::DimMismatch, "query has dim " + std::to_string(query.size()) + ", stored points " +
                                       std::to_string(dim_));
  }
  std::vector<std::pair<double, std::size_t>> dist(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double diff = points_[i][j] - query[j];
      d += diff * diff;
    }
    dist[i] = {d, i};
  }
  // pair ordering breaks distance ties by stored index
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
  std::map<std::size_t, std::size_t> votes;
  for (std::size_t i = 0; i < k_; ++i) ++votes[labels_[dist[i].second]];
  std::size_t best = votes.begin()->first;
  std::size_t best_votes = 0;
  for (const auto& [cls, v] : votes) {
    if (v > best_votes) {
      best = cls;
      best_votes = v;
    }
  }
  return best;
}

KnnClassifier knn_fit(std::vector<std::vector<double>> features, std::vector<std::size_t> labels,
                      std::size_t k) {
  return KnnClassifier(k, std::move(features), std::move(labels));
}

std::size_t knn_predict(const KnnClassifier& clf, std::span<const double> query) {
  return clf.predict(query);
}

std::vector<double> raw_feature_encode(const schema::Record& record, const schema::DatasetSchema& schema,
                                       const std::map<std::string, schema::NormStats>& norm,
                                       const std::map<std::string, const wordvec::WordVectorTable*>& tables) {
  schema::validate_record(record, schema);
  std::vector<double> out;
  for (std::size_t i = 0; i < schema.fields().size(); ++i) {
    const auto& f = schema.fields()[i];
    const auto& v = record.values[i];
    if (std::holds_alternative<schema::TextKind>(f.kind)) {
      auto it = tables.find(f.name);
      if (it == tables.end() || it->second == nullptr) {
        throw Error(Errc::SchemaViolation, "no word vectors for text field '" + f.name + "'");
      }
      const auto vec = wordvec::embed_text(std::get<std::string>(v), *it->second);
      out.insert(out.end(), vec.begin(), vec.end());
    } else if (const auto* cat = std::get_if<schema::CategoricalKind>(&f.kind)) {
      const std::size_t base = out.size();
      out.resize(base + cat->vocab.size(), 0.0);
      out[base + std::get<std::size_t>(v)] = 1.0;
    } else if (std::holds_alternative<schema::ContinuousKind>(f.kind)) {
      auto it = norm.find(f.name);
      if (it == norm.end()) {
        throw Error(Errc::SchemaViolation, "no normalization statistics for '" + f.name + "'");
      }
      out.push_back(schema::normalize(std::get<double>(v), it->second));
    } else {
      const auto& vec = std::get<std::vector<double>>(v);
      out.insert(out.end(), vec.begin(), vec.end());
    }
  }
  return out;
}

std::size_t raw_feature_width(const schema::DatasetSchema& schema,
                              const std::map<std::string, const wordvec::WordVectorTable*>& tables) {
  std::size_t width = 0;
  for (const auto& f : schema.fields()) {
    if (std::holds_alternative<schema::TextKind>(f.kind)) {
      auto it = tables.find(f.name);
      if (it == tables.end() || it->second == nullptr) {
        throw Error(Errc::SchemaViolation, "no word vectors for text field '" + f.name + "'");
      }
      width += it->second->dim();
    } else if (const auto* cat = std::get_if<schema::CategoricalKind>(&f.kind)) {
      width += cat->vocab.size();
    } else if (std::holds_alternative<schema::ContinuousKind>(f.kind)) {
      width += 1;
    } else {
      width += std::get<schema::VideoFeatureKind>(f.kind).dim;
    }
  }
  return width;
}

}  // namespace deepqoe::baselines
