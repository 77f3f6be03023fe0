#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "deepqoe/error.hpp"
#include "deepqoe/model.hpp"
#include "deepqoe/schema.hpp"
#include "deepqoe/wordvec.hpp"

// Runs `expr` and checks it throws deepqoe::Error with the given code.
#define CHECK_ERRC(expr, errc)                                       \
  do {                                                               \
    bool dq_thrown_ = false;                                         \
    try {                                                            \
      (void)(expr);                                                  \
    } catch (const deepqoe::Error& dq_e_) {                          \
      dq_thrown_ = true;                                             \
      CHECK_MESSAGE(dq_e_.code() == (errc), std::string(dq_e_.what()));           \
    }                                                                \
    CHECK_MESSAGE(dq_thrown_, "expected " #errc " from " #expr);     \
  } while (0)

namespace testsupport {

inline std::shared_ptr<const deepqoe::wordvec::WordVectorTable> type_vectors(
    std::size_t dim = 50, std::uint64_t seed = 11) {
  return std::make_shared<const deepqoe::wordvec::WordVectorTable>(
      deepqoe::wordvec::make_random_table({"movie", "cartoon", "sport", "news"}, dim, seed));
}

// The small-dataset reference architecture: type 50 -> 5, resolution
// embedding 8, bitrate and age dense scalars, gender embedding 1.
inline std::vector<deepqoe::model::BranchSpec> reference_branches(
    std::shared_ptr<const deepqoe::wordvec::WordVectorTable> table, bool user_fields = true) {
  using namespace deepqoe::model;
  std::vector<BranchSpec> b;
  b.push_back({"type", TextVectors{std::move(table)}, 5});
  b.push_back({"resolution", EmbeddingExtractor{8}, std::nullopt});
  b.push_back({"bitrate", DenseScalar{}, std::nullopt});
  if (user_fields) {
    b.push_back({"age", DenseScalar{}, std::nullopt});
    b.push_back({"gender", EmbeddingExtractor{1}, std::nullopt});
  }
  return b;
}

// --- independent oracles ------------------------------------------------------

// Fractional rank by counting: 1 + #smaller + (#equal - 1) / 2. O(n^2), no sort.
inline std::vector<double> counting_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double smaller = 0, equal = 0;
    for (double v : x) {
      if (v < x[i]) smaller += 1;
      if (v == x[i]) equal += 1;
    }
    r[i] = 1.0 + smaller + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  long double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const long double mx = sx / n, my = sy / n;
  long double cxy = 0, cxx = 0, cyy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cxy += (x[i] - mx) * (y[i] - my);
    cxx += (x[i] - mx) * (x[i] - mx);
    cyy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(cxy / std::sqrt(cxx * cyy));
}

inline double srocc_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson_oracle(counting_ranks(a), counting_ranks(b));
}

// Tie-free closed form 1 - 6 sum d^2 / (n (n^2 - 1)).
inline double srocc_closed_form(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = counting_ranks(a), rb = counting_ranks(b);
  double d2 = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  const double n = static_cast<double>(a.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

// Normal equations [n Sx; Sx Sxx] [c; m] = [Sy; Sxy] solved by Cramer's rule.
struct LineOracle {
  double slope;
  double intercept;
};
inline LineOracle normal_equations(const std::vector<double>& x, const std::vector<double>& y) {
  long double n = static_cast<long double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double det = n * sxx - sx * sx;
  return {static_cast<double>((n * sxy - sx * sy) / det), static_cast<double>((sy * sxx - sx * sxy) / det)};
}

inline double line_mse(const std::vector<double>& x, const std::vector<double>& y, double slope,
                       double intercept) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    s += r * r;
  }
  return s / static_cast<double>(x.size());
}

}  // namespace testsupport
