#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "deepqoe/baselines.hpp"
#include "support.hpp"

using namespace deepqoe;
using namespace deepqoe::baselines;

TEST_CASE("fit_per_title") {
  const std::vector<TitleSample> line = {{"a", 1, 1}, {"a", 2, 2}, {"a", 3, 3}};
  const auto fit = fit_per_title(line);
  CHECK(fit.fits.at("a").slope == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(fit.fits.at("a").intercept) < 1e-15);
  CHECK(evaluate_per_title(fit, line).mean_mse < 1e-30);

  const std::vector<TitleSample> tri = {{"b", 0, 0}, {"b", 2, 2}, {"b", 1, 0}};
  const auto f2 = fit_per_title(tri).fits.at("b");
  const auto oracle = testsupport::normal_equations({0, 2, 1}, {0, 2, 0});
  CHECK(std::abs(f2.slope - 1.0) < 1e-9);
  CHECK(std::abs(f2.intercept + 1.0 / 3.0) < 1e-9);
  CHECK(std::abs(f2.slope - oracle.slope) < 1e-9);
  CHECK(std::abs(f2.intercept - oracle.intercept) < 1e-9);

  const std::vector<TitleSample> single = {{"c", 500, 3}, {"c", 500, 4}, {"d", 1, 1}, {"d", 2, 2}};
  try {
    fit_per_title(single);
    FAIL("expected DegenerateTitle");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateTitle);
    CHECK(std::string(e.what()).find("'c'") != std::string::npos);
  }
}

TEST_CASE("evaluate_per_title") {
  PerTitleRegression m;
  m.fits["x"] = {0.0, 0.0};
  m.fits["y"] = {0.0, 0.0};
  const std::vector<TitleSample> s = {{"x", 1, std::sqrt(2.0)}, {"y", 1, 2.0}};
  const auto e = evaluate_per_title(m, s);
  CHECK(e.mse.at("x") == doctest::Approx(2.0));
  CHECK(e.mse.at("y") == 4.0);
  CHECK(e.mean_mse == doctest::Approx(3.0));
  CHECK_ERRC(evaluate_per_title(m, std::vector<TitleSample>{{"z", 1, 1}}), Errc::UnknownTitle);
}

TEST_CASE("OLS residuals are orthogonal to the regressor and beat nearby lines") {
  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    std::vector<TitleSample> s;
    std::vector<double> x, y;
    for (int i = 0; i < 12; ++i) {
      const double br = rng.uniform(200, 2000);
      const double mos = 1 + 3 * (br - 200) / 1800 + rng.uniform(-0.5, 0.5);
      s.push_back({"t", br, mos});
      x.push_back(br);
      y.push_back(mos);
    }
    const auto f = fit_per_title(s).fits.at("t");
    double dot = 0, res_sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.predict(x[i]);
      dot += r * x[i];
      res_sum += r;
    }
    CHECK(std::abs(dot) < 1e-9 * 2000 * 12);
    CHECK(std::abs(res_sum) < 1e-9);
    const double best = testsupport::line_mse(x, y, f.slope, f.intercept);
    for (double ds : {-1e-4, 0.0, 1e-4}) {
      for (double di : {-0.05, 0.0, 0.05}) {
        CHECK(best <= testsupport::line_mse(x, y, f.slope + ds, f.intercept + di) + 1e-15);
      }
    }
  }
}

TEST_CASE("k-NN") {
  const std::vector<std::vector<double>> pts = {{0, 0}, {1, 0}, {0, 1}, {5, 5}, {6, 5}};
  const std::vector<std::size_t> labels = {0, 0, 1, 1, 1};
  const auto one = knn_fit(pts, labels, 1);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(knn_predict(one, pts[i]) == labels[i]);

  const auto three = knn_fit(pts, labels, 3);
  CHECK(knn_predict(three, std::vector<double>{0.2, 0.1}) == 0);  // neighbours A, A, B
  CHECK(knn_predict(three, std::vector<double>{5.5, 5}) == 1);

  // distance tie at equal range: the lower stored index wins the last slot
  const std::vector<std::vector<double>> line = {{-1}, {1}, {3}};
  CHECK(knn_predict(knn_fit(line, {4, 2, 2}, 1), std::vector<double>{0}) == 4);

  // three-way vote tie goes to the smallest class
  const std::vector<std::vector<double>> tri = {{1}, {2}, {3}};
  CHECK(knn_predict(knn_fit(tri, {7, 5, 6}, 3), std::vector<double>{2}) == 5);

  std::vector<std::vector<double>> wide(5, std::vector<double>(16, 0.0));
  const auto w = knn_fit(wide, {0, 0, 0, 1, 1}, 3);
  CHECK_ERRC(knn_predict(w, std::vector<double>(5, 0.0)), Errc::DimMismatch);
  CHECK_ERRC(knn_fit(pts, labels, 2), Errc::InvalidConfig);
  CHECK_ERRC(knn_fit(pts, labels, 7), Errc::TooFewPoints);
  CHECK_ERRC(knn_fit(pts, {0, 1}, 1), Errc::LengthMismatch);
}

TEST_CASE("raw_feature_encode") {
  schema::SyntheticSpec spec;
  const auto ds = schema::generate_synthetic(spec, 3);
  const auto table = testsupport::type_vectors(4);
  const std::map<std::string, const wordvec::WordVectorTable*> tables = {{"type", table.get()}};
  std::map<std::string, schema::NormStats> norm;
  for (const char* f : {"bitrate", "age"}) norm.emplace(f, schema::compute_norm_stats(ds, f));

  // type 4 + resolution 3 + bitrate 1 + age 1 + gender 2
  CHECK(raw_feature_width(*ds.schema, tables) == 11);
  for (const auto& r : ds.records) {
    const auto v = raw_feature_encode(r, *ds.schema, norm, tables);
    REQUIRE(v.size() == 11);
    const auto res = std::get<std::size_t>(r.values[1]);
    for (std::size_t k = 0; k < 3; ++k) CHECK(v[4 + k] == (k == res ? 1.0 : 0.0));
    CHECK(v[9] + v[10] == 1.0);
    CHECK(std::vector<double>(v.begin(), v.begin() + 4) ==
          wordvec::embed_text(std::get<std::string>(r.values[0]), *table));
  }
  schema::Record at_min = ds.records[0];
  at_min.values[2] = norm.at("bitrate").min;
  CHECK(raw_feature_encode(at_min, *ds.schema, norm, tables)[7] == 0.0);

  schema::Record bad = ds.records[0];
  bad.values.pop_back();
  CHECK_ERRC(raw_feature_encode(bad, *ds.schema, norm, tables), Errc::SchemaViolation);
}
