#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "deepqoe/model.hpp"
#include "deepqoe/schema.hpp"
#include "process.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::path(DEEPQOE_TEST_WORKDIR) / "cli";

using testsupport::count_lines;
using testsupport::slurp;
using testsupport::spit;

testsupport::Run run(const std::string& args) { return testsupport::run_program(DEEPQOE_CLI, args, kWork); }

std::string config_json(const std::string& head, const std::string& data, const std::string& out_dir,
                        int epochs = 5) {
  const bool linear = head == "linear";
  std::ostringstream j;
  j << R"({"schema": {"fields": [{"name": "type", "kind": "text"},
      {"name": "resolution", "kind": "categorical", "vocab": ["360P", "480P", "720P"]},
      {"name": "bitrate", "kind": "continuous"})";
  if (!linear) {
    j << R"(, {"name": "age", "kind": "continuous"},
      {"name": "gender", "kind": "categorical", "vocab": ["male", "female"]})";
  }
  j << "],";
  if (linear) {
    j << R"("label": {"column": "mos", "kind": "regression"}, "group_field": "type"},)";
  } else {
    j << R"("label": {"column": "score", "kind": "classification", "num_classes": 5, "base": 1}, "group_field": "type"},)";
  }
  j << R"("branches": [{"field": "type", "extractor": "text", "projection": 5},
      {"field": "resolution", "extractor": "embedding", "dim": 8},
      {"field": "bitrate", "extractor": "dense_scalar"})";
  if (!linear) {
    j << R"(, {"field": "age", "extractor": "dense_scalar"}, {"field": "gender", "extractor": "embedding", "dim": 1})";
  }
  j << "],";
  j << R"("network": {"hidden": [128, 32], "dropout": 0.5, "head": ")" << head << "\"";
  if (!linear) j << R"(, "num_classes": 5)";
  j << "},";
  j << R"("train": {"epochs": )" << epochs << R"(, "batch_size": 16, "seed": 3},)";
  j << R"("data": {"train": ")" << data << R"(", "test_fraction": 0.25, "split_seed": 1},)";
  j << R"("word_vectors": {"type": "vectors.txt"}, "output_dir": ")" << out_dir << "\"}";
  return j.str();
}

struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    spit(kWork / "cls_spec.json", R"({"n_records": 120})");
    spit(kWork / "reg_spec.json", R"({"n_records": 120, "task": "regression", "user_fields": false})");
    REQUIRE(run("synth --spec " + (kWork / "cls_spec.json").string() + " --seed 1 --out " +
                (kWork / "cls.csv").string() + " --vectors-out " + (kWork / "vectors.txt").string())
                .code == 0);
    REQUIRE(run("synth --spec " + (kWork / "reg_spec.json").string() + " --seed 2 --out " +
                (kWork / "reg.csv").string())
                .code == 0);
    spit(kWork / "cls.json", config_json("softmax", "cls.csv", "cls_out"));
    spit(kWork / "reg.json", config_json("linear", "reg.csv", "reg_out"));
  }
};

const Workspace& workspace() {
  static Workspace w;
  return w;
}

std::string p(const std::string& name) { return (kWork / name).string(); }

}  // namespace

TEST_CASE("synth") {
  workspace();
  spit(kWork / "s100.json", R"({"n_records": 100})");
  CHECK(run("synth --spec " + p("s100.json") + " --seed 42 --out " + p("a.csv")).code == 0);
  CHECK(count_lines(slurp(kWork / "a.csv")) == 101);
  CHECK(run("synth --spec " + p("s100.json") + " --seed 42 --out " + p("b.csv")).code == 0);
  CHECK(slurp(kWork / "a.csv") == slurp(kWork / "b.csv"));

  spit(kWork / "bad.json", R"({"n_records": "many"})");
  const auto bad = run("synth --spec " + p("bad.json") + " --out " + p("c.csv"));
  CHECK(bad.code == 2);
  CHECK_FALSE(bad.err.empty());
  spit(kWork / "bad2.json", R"({"types": ["a", "b"]})");
  CHECK(run("synth --spec " + p("bad2.json") + " --out " + p("c.csv")).code == 2);
}

TEST_CASE("label-jnd") {
  workspace();
  spit(kWork / "jnd.csv", "clip,qp,jnd1,jnd2,jnd3\na,10,20,30,40\nb,45,20,30,40\n");
  CHECK(run("label-jnd --in " + p("jnd.csv") + " --out " + p("jnd_out.csv")).code == 0);
  CHECK(slurp(kWork / "jnd_out.csv") ==
        "clip,qp,jnd1,jnd2,jnd3,qoe_class\na,10,20,30,40,excellent\nb,45,20,30,40,bad\n");
  CHECK(slurp(kWork / "jnd.csv") == "clip,qp,jnd1,jnd2,jnd3\na,10,20,30,40\nb,45,20,30,40\n");

  spit(kWork / "nojnd2.csv", "clip,qp,jnd1,jnd3\na,10,20,40\n");
  const auto r = run("label-jnd --in " + p("nojnd2.csv") + " --out " + p("x.csv"));
  CHECK(r.code == 2);
  CHECK(r.err.find("jnd2") != std::string::npos);
}

TEST_CASE("train, eval, predict, export-repr") {
  workspace();
  const auto trained = run("train --config " + p("cls.json"));
  REQUIRE(trained.code == 0);
  CHECK(trained.err.find("epoch 5/5") != std::string::npos);
  const fs::path ckpt = kWork / "cls_out" / "model.dqoe";
  REQUIRE(fs::exists(ckpt));
  CHECK(slurp(kWork / "cls_out" / "train_report.tsv").find("training_seconds\t") != std::string::npos);
  CHECK(count_lines(slurp(kWork / "cls_out" / "loss_curve.tsv")) == 6);
  {
    std::ifstream in(ckpt, std::ios::binary);
    const auto m = deepqoe::model::load_checkpoint(in);
    CHECK(m.fused_width() == 16);
  }

  SUBCASE("seeded training is byte-reproducible") {
    CHECK(run("train --config " + p("cls.json") + " --seed 7 --out-dir " + p("s7a")).code == 0);
    CHECK(run("train --config " + p("cls.json") + " --seed 7 --out-dir " + p("s7b")).code == 0);
    CHECK(slurp(kWork / "s7a" / "model.dqoe") == slurp(kWork / "s7b" / "model.dqoe"));
    CHECK(slurp(kWork / "s7a" / "loss_curve.tsv") == slurp(kWork / "s7b" / "loss_curve.tsv"));
    CHECK(slurp(kWork / "s7a" / "model.dqoe") != slurp(ckpt));
  }
  SUBCASE("head and label disagree") {
    std::string cfg = config_json("softmax", "reg.csv", "bad_out");
    const std::string label = R"("label": {"column": "score", "kind": "classification", "num_classes": 5, "base": 1})";
    const auto pos = cfg.find(label);
    REQUIRE(pos != std::string::npos);
    cfg.replace(pos, label.size(), R"("label": {"column": "mos", "kind": "regression"})");
    spit(kWork / "mismatch.json", cfg);
    const auto r = run("train --config " + p("mismatch.json"));
    CHECK(r.code == 2);
    CHECK(r.err.find("HeadMismatch") != std::string::npos);
  }
  SUBCASE("eval") {
    const auto r = run("eval --config " + p("cls.json") + " --checkpoint " + ckpt.string());
    REQUIRE(r.code == 0);
    const auto pos = r.out.find("accuracy\t");
    REQUIRE(pos != std::string::npos);
    const double acc = std::stod(r.out.substr(pos + 9));
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(fs::exists(kWork / "cls_out" / "metrics.tsv"));
    CHECK(fs::exists(kWork / "cls_out" / "confusion.tsv"));

    CHECK(run("eval --config " + p("cls.json") + " --checkpoint " + ckpt.string() + " --loo").code == 0);
    for (const char* g : {"cartoon", "movie", "news", "sport"}) {
      CHECK(fs::exists(kWork / "cls_out" / (std::string("fold_") + g + ".tsv")));
    }
    CHECK(slurp(kWork / "cls_out" / "folds.tsv").starts_with("metric\tcartoon\tmovie\tnews\tsport\n"));

    REQUIRE(run("train --config " + p("reg.json")).code == 0);
    const auto mismatch = run("eval --config " + p("cls.json") + " --checkpoint " + p("reg_out/model.dqoe"));
    CHECK(mismatch.code == 2);
    CHECK(mismatch.err.find("SchemaViolation") != std::string::npos);
  }
  SUBCASE("predict") {
    const auto r = run("predict --checkpoint " + ckpt.string() + " --in " + p("cls.csv"));
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "id\tclass\tp_1\tp_2\tp_3\tp_4\tp_5");
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
      std::istringstream cells(line);
      std::string id, cls, cell;
      cells >> id >> cls;
      double total = 0;
      while (cells >> cell) total += std::stod(cell);
      CHECK(std::abs(total - 1.0) < 1e-9);
      ++rows;
    }
    CHECK(rows == 120);

    spit(kWork / "empty.csv", "type,resolution,bitrate,age,gender\n");
    const auto empty = run("predict --checkpoint " + ckpt.string() + " --in " + p("empty.csv"));
    CHECK(empty.code == 0);
    CHECK(empty.out.empty());

    spit(kWork / "row5.csv",
         "type,resolution,bitrate,age,gender\nmovie,360P,500,20,male\nnews,480P,600,30,female\n"
         "sport,720P,700,40,male\ncartoon,360P,800,50,female\nmovie,1080P,900,60,male\n");
    const auto bad = run("predict --checkpoint " + ckpt.string() + " --in " + p("row5.csv"));
    CHECK(bad.code == 2);
    CHECK(bad.err.find("row 5") != std::string::npos);
  }
  SUBCASE("export-repr") {
    REQUIRE(run("export-repr --checkpoint " + ckpt.string() + " --in " + p("cls.csv") + " --out " + p("r1.tsv")).code == 0);
    REQUIRE(run("export-repr --checkpoint " + ckpt.string() + " --in " + p("cls.csv") + " --out " + p("r2.tsv")).code == 0);
    const std::string a = slurp(kWork / "r1.tsv");
    CHECK(a == slurp(kWork / "r2.tsv"));
    std::istringstream lines(a);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
      const auto tab = line.find('\t');
      REQUIRE(tab != std::string::npos);
      std::istringstream cells(line.substr(tab + 1));
      double v;
      std::size_t width = 0;
      while (cells >> v) ++width;
      CHECK(width == 32);
      ++rows;
    }
    CHECK(rows == 120);

    const auto t = run("transfer --checkpoint " + ckpt.string() + " --train " + p("cls.csv") + " --test " + p("cls.csv"));
    CHECK(t.code == 0);
    CHECK(t.out.find("representation_accuracy\t") != std::string::npos);
  }
}

TEST_CASE("gradcheck") {
  workspace();
  {
    std::ifstream in(fs::path(DEEPQOE_CONFIG_DIR) / "reference_classification.json");
    auto j = nlohmann::json::parse(in);
    j["word_vectors"]["type"] = p("vectors.txt");
    j["data"]["train"] = p("cls.csv");
    spit(kWork / "reference.json", j.dump());
    const auto r = run("gradcheck --config " + p("reference.json"));
    CHECK_MESSAGE(r.code == 0, r.out << r.err);
    const auto pos = r.out.find("max_rel_error\t");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(r.out.substr(pos + 14)) < 1e-4);
  }
  for (const char* cfg : {"cls.json", "reg.json"}) {
    const auto r = run(std::string("gradcheck --config ") + p(cfg));
    const auto pos = r.out.find("max_rel_error\t");
    REQUIRE(pos != std::string::npos);
    const double err = std::stod(r.out.substr(pos + 14));
    CHECK(r.code == (err < 1e-4 ? 0 : 3));
    CHECK(err < 1e-3);
    CHECK(r.out.find("coords_checked\t") != std::string::npos);
    CHECK(run(std::string("gradcheck --config ") + p(cfg) + " --tol 1e-3").code == 0);
  }
  CHECK(run("gradcheck --config " + p("cls.json") + " --with-dropout").code == 2);
  CHECK(run("gradcheck --config " + p("cls.json") + " --tol 1e-30").code == 3);
  CHECK(run("gradcheck --config " + p("missing.json")).code == 2);
}

TEST_CASE("baseline") {
  workspace();
  spit(kWork / "titles.csv", "title,bitrate,mos\na,1,1\na,2,2\na,3,3\nb,0,0\nb,2,2\nb,1,0\n");
  const auto r = run("baseline --in " + p("titles.csv"));
  CHECK(r.code == 0);
  CHECK(r.out.find("a\t1\t0\t0.000000\n") != std::string::npos);
  spit(kWork / "flat.csv", "title,bitrate,mos\na,1,1\na,1,2\n");
  CHECK(run("baseline --in " + p("flat.csv")).code == 2);
}
