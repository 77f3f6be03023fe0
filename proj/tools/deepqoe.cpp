// deepqoe command line: data preparation, training, evaluation, prediction,
// representation export and gradient verification.
//
// Exit codes: 0 success, 2 configuration or input error, 3 runtime failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "deepqoe/baselines.hpp"
#include "deepqoe/error.hpp"
#include "deepqoe/eval.hpp"
#include "deepqoe/json_io.hpp"
#include "deepqoe/model.hpp"
#include "run_config.hpp"

namespace dq = deepqoe;
namespace fs = std::filesystem;
using dq::Errc;
using dq::Error;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::NonFinite:
    case Errc::GraphNotRecorded:
      return kExitRuntime;
    default:
      return kExitInput;
  }
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + p.string() + "'");
  return in;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write '" + p.string() + "'");
  return out;
}

std::string file_safe(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return out;
}

dq::model::DeepQoEModel read_checkpoint(const fs::path& p) {
  std::ifstream in = open_in(p);
  return dq::model::load_checkpoint(in);
}

std::optional<dq::schema::VideoFeatureTable> features_from(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return dq::cli::load_features(fs::path(path));
}

// Schema-free CSV: header plus rows of cells.
struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw Error(Errc::MissingColumn, "column '" + name + "' not in header");
  }
};

RawCsv read_raw_csv(const fs::path& p) {
  std::ifstream in = open_in(p);
  RawCsv csv;
  std::string line;
  auto next = [&]() {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next()) throw Error(Errc::MissingColumn, "'" + p.string() + "' has no header row");
  csv.header = dq::schema::split_line(line, ',');
  std::size_t row = 0;
  while (next()) {
    if (line.empty()) continue;
    ++row;
    auto cells = dq::schema::split_line(line, ',');
    if (cells.size() != csv.header.size()) {
      throw Error(Errc::UnparsableValue, "wrong number of cells", row, "*");
    }
    csv.rows.push_back(std::move(cells));
  }
  return csv;
}

double real_cell(const RawCsv& csv, std::size_t row, std::size_t col) {
  auto v = dq::schema::parse_real(csv.rows[row][col]);
  if (!v) throw Error(Errc::UnparsableValue, "'" + csv.rows[row][col] + "' is not a real", row + 1, csv.header[col]);
  return *v;
}

void print_tsv_file(const fs::path& p, const std::string& content) {
  open_out(p) << content;
  std::cout << content;
}

// --- synth ----------------------------------------------------------------------

struct SynthArgs {
  std::string spec, out, vectors_out, schema_out;
  std::uint64_t seed = 0;
  std::size_t vector_dim = 50;
};

int cmd_synth(const SynthArgs& a) {
  std::ifstream in = open_in(a.spec);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadSpec, std::string("spec is not valid JSON: ") + e.what());
  }
  dq::schema::SyntheticSpec spec;
  try {
    spec = dq::json_io::synthetic_from_json(j);
  } catch (const Error& e) {
    throw Error(Errc::BadSpec, e.what());
  }
  const auto ds = dq::schema::generate_synthetic(spec, a.seed);
  {
    auto out = open_out(a.out);
    dq::schema::write_dataset(out, ds);
  }
  if (!a.vectors_out.empty()) {
    auto out = open_out(a.vectors_out);
    dq::wordvec::write_word_vectors(out, dq::wordvec::make_random_table(spec.types, a.vector_dim, a.seed));
  }
  if (!a.schema_out.empty()) {
    open_out(a.schema_out) << dq::json_io::schema_to_json(*ds.schema).dump(2) << "\n";
  }
  std::cout << "records\t" << ds.size() << "\n";
  return 0;
}

// --- label-jnd -------------------------------------------------------------------

int cmd_label_jnd(const std::string& in_path, const std::string& out_path) {
  const RawCsv csv = read_raw_csv(in_path);
  const std::size_t qp = csv.column("qp"), j1 = csv.column("jnd1"), j2 = csv.column("jnd2"),
                    j3 = csv.column("jnd3");
  std::optional<std::size_t> existing;
  for (std::size_t i = 0; i < csv.header.size(); ++i) {
    if (csv.header[i] == "qoe_class") existing = i;
  }

  std::ostringstream out;
  auto write_row = [&](const std::vector<std::string>& cells, const std::string& label) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << (existing && *existing == i ? label : cells[i]);
    }
    if (!existing) out << ',' << label;
    out << '\n';
  };
  write_row(csv.header, "qoe_class");
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const double a = real_cell(csv, r, j1), b = real_cell(csv, r, j2), c = real_cell(csv, r, j3);
    if (!(a < b && b < c)) throw Error(Errc::UnparsableValue, "JND points not increasing", r + 1, "jnd1");
    const auto cls = dq::schema::jnd_to_class(real_cell(csv, r, qp), dq::schema::JndAnnotation(a, b, c));
    write_row(csv.rows[r], std::string(dq::schema::qoe_class_name(cls)));
  }
  open_out(out_path) << out.str();
  std::cout << "records\t" << csv.rows.size() << "\n";
  return 0;
}

// --- train -----------------------------------------------------------------------

struct TrainArgs {
  std::string config, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
};

int cmd_train(const TrainArgs& a) {
  auto cfg = dq::cli::load_run_config(a.config);
  if (a.seed) {
    cfg.train.seed = *a.seed;
    cfg.model_seed = *a.seed;
  }
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (!a.out_dir.empty()) {
    const fs::path name = cfg.checkpoint.filename();
    cfg.output_dir = a.out_dir;
    cfg.checkpoint = cfg.output_dir / name;
  }

  auto [train, test] = dq::cli::load_split(cfg);
  auto branches = dq::cli::prune_text_tables(cfg.branches, *cfg.schema, {&train, &test});
  auto m = dq::model::build_model(cfg.schema, std::move(branches), cfg.network, cfg.init_seed());

  auto tc = cfg.train;
  tc.on_epoch = [&](std::size_t e, double loss) {
    std::cerr << "epoch " << (e + 1) << "/" << tc.epochs << " loss " << dq::eval::format_metric(loss) << "\n";
  };
  const auto report = dq::model::train(m, train, tc);

  {
    auto out = open_out(cfg.checkpoint);
    dq::model::save_checkpoint(m, out);
    if (!out.flush()) throw Error(Errc::Io, "failed writing '" + cfg.checkpoint.string() + "'");
  }
  {
    auto out = open_out(cfg.output_dir / "loss_curve.tsv");
    out << "epoch\tloss\n";
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
      out << (e + 1) << '\t' << dq::schema::format_real(report.epoch_loss[e]) << '\n';
    }
  }
  std::ostringstream summary;
  summary << "n_train\t" << train.size() << "\n"
          << "n_test\t" << test.size() << "\n"
          << "split\t" << (cfg.data.test ? "file" : "random seed=" + std::to_string(cfg.data.split_seed)) << "\n"
          << "epochs\t" << tc.epochs << "\n"
          << "final_loss\t" << dq::eval::format_metric(report.epoch_loss.back()) << "\n"
          << "checksum\t" << report.checksum << "\n"
          << "training_seconds\t" << dq::eval::format_seconds(report.seconds) << "\n";
  print_tsv_file(cfg.output_dir / "train_report.tsv", summary.str());
  return 0;
}

// --- eval ------------------------------------------------------------------------

int cmd_eval(const std::string& config, const std::string& checkpoint, bool loo) {
  const auto cfg = dq::cli::load_run_config(config);
  const auto m = read_checkpoint(checkpoint);
  if (!(m.schema() == *cfg.schema)) {
    throw Error(Errc::SchemaViolation, "checkpoint schema differs from the config schema");
  }

  if (!loo) {
    const auto test = dq::cli::load_split(cfg).second;
    dq::eval::MetricsReport report;
    report.seconds = dq::eval::time_training([&] { report = dq::eval::evaluate(m, test); });
    std::ostringstream tsv;
    dq::eval::write_metrics_tsv(tsv, report);
    print_tsv_file(cfg.output_dir / "metrics.tsv", tsv.str());
    if (report.confusion) {
      const auto& label = std::get<dq::schema::ClassificationLabel>(cfg.schema->label().kind);
      std::vector<std::string> names = label.class_names;
      if (names.empty()) {
        for (std::size_t k = 0; k < label.num_classes; ++k) names.push_back(std::to_string(static_cast<long>(k) + label.base));
      }
      auto out = open_out(cfg.output_dir / "confusion.tsv");
      dq::eval::write_confusion_tsv(out, *report.confusion, names);
    }
    open_out(cfg.output_dir / "summary.json") << dq::eval::summary_json(report) << "\n";
    return 0;
  }

  const auto all = dq::cli::load_all(cfg);
  const auto branches = dq::cli::prune_text_tables(cfg.branches, *cfg.schema, {&all});
  auto tc = cfg.train;
  tc.seed = cfg.init_seed();
  const auto folds = dq::eval::run_leave_one_group_out(all, branches, cfg.network, tc);
  for (const auto& f : folds) {
    auto out = open_out(cfg.output_dir / ("fold_" + file_safe(f.group) + ".tsv"));
    out << "group\t" << f.group << "\n" << "n_train\t" << f.train_size << "\n";
    dq::eval::write_metrics_tsv(out, f.metrics);
    out << "training_seconds\t" << dq::eval::format_seconds(f.metrics.seconds) << "\n";
  }
  std::ostringstream table;
  dq::eval::write_fold_table(table, folds);
  print_tsv_file(cfg.output_dir / "folds.tsv", table.str());
  return 0;
}

// --- predict / export-repr ----------------------------------------------------------

dq::schema::Dataset read_inputs(const dq::model::DeepQoEModel& m, const std::string& in,
                                const std::string& features) {
  const auto table = features_from(features);
  return dq::cli::read_dataset(in, m.schema_ptr(), table ? &*table : nullptr, false);
}

int cmd_predict(const std::string& checkpoint, const std::string& in, const std::string& features,
                const std::string& out_path) {
  const auto m = read_checkpoint(checkpoint);
  const auto ds = read_inputs(m, in, features);
  std::ostringstream out;
  if (ds.empty()) {
    // no records, no output
  } else if (m.is_classifier()) {
    const auto& label = std::get<dq::schema::ClassificationLabel>(m.schema().label().kind);
    auto name = [&](std::size_t k) {
      return label.class_names.empty() ? std::to_string(static_cast<long>(k) + label.base) : label.class_names[k];
    };
    out << "id\tclass";
    for (std::size_t k = 0; k < label.num_classes; ++k) out << "\tp_" << name(k);
    out << '\n';
    for (const auto& r : ds.records) {
      const auto [cls, probs] = dq::model::predict_class(m, r);
      out << r.id << '\t' << name(cls);
      for (double p : probs) out << '\t' << dq::schema::format_real(p);
      out << '\n';
    }
  } else {
    out << "id\tscore\n";
    for (const auto& r : ds.records) {
      out << r.id << '\t' << dq::schema::format_real(dq::model::predict_score(m, r)) << '\n';
    }
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    open_out(out_path) << out.str();
  }
  return 0;
}

int cmd_export_repr(const std::string& checkpoint, const std::string& in, const std::string& features,
                    const std::string& out_path) {
  const auto m = read_checkpoint(checkpoint);
  const auto ds = read_inputs(m, in, features);
  auto out = open_out(out_path);
  for (const auto& r : ds.records) {
    out << r.id << '\t';
    const auto rep = dq::model::extract_representation(m, r);
    for (std::size_t i = 0; i < rep.size(); ++i) out << (i ? " " : "") << dq::schema::format_real(rep[i]);
    out << '\n';
  }
  std::cout << "records\t" << ds.size() << "\nwidth\t" << m.representation_width() << "\n";
  return 0;
}

// --- gradcheck ---------------------------------------------------------------------

std::vector<dq::schema::Record> random_records(const dq::schema::DatasetSchema& schema,
                                               const std::vector<dq::model::BranchSpec>& branches,
                                               std::size_t n, dq::Rng& rng) {
  std::map<std::string, std::vector<std::string>> tokens;
  for (const auto& b : branches) {
    if (const auto* t = std::get_if<dq::model::TextVectors>(&b.extractor)) {
      for (const auto& [tok, vec] : t->table->entries()) tokens[b.field].push_back(tok);
    }
  }
  std::vector<dq::schema::Record> out;
  for (std::size_t i = 0; i < n; ++i) {
    dq::schema::Record r;
    r.id = "g" + std::to_string(i + 1);
    for (const auto& f : schema.fields()) {
      if (std::holds_alternative<dq::schema::TextKind>(f.kind)) {
        const auto& pool = tokens[f.name];
        r.values.emplace_back(pool.empty() ? std::string("unknown") : pool[rng.below(pool.size())]);
      } else if (const auto* cat = std::get_if<dq::schema::CategoricalKind>(&f.kind)) {
        r.values.emplace_back(static_cast<std::size_t>(rng.below(cat->vocab.size())));
      } else if (std::holds_alternative<dq::schema::ContinuousKind>(f.kind)) {
        r.values.emplace_back(rng.uniform());
      } else {
        std::vector<double> v(std::get<dq::schema::VideoFeatureKind>(f.kind).dim);
        for (auto& x : v) x = rng.uniform(-1, 1);
        r.values.emplace_back(std::move(v));
      }
    }
    if (schema.label().is_classification()) {
      r.label = static_cast<std::size_t>(rng.below(schema.label().num_classes()));
    } else {
      r.label = rng.uniform(1, 5);
    }
    out.push_back(std::move(r));
  }
  return out;
}

struct GradArgs {
  std::string config;
  double tol = 1e-4;
  bool with_dropout = false;
  std::uint64_t seed = 0;
};

int cmd_gradcheck(const GradArgs& a) {
  const auto cfg = dq::cli::load_run_config(a.config);
  auto m = dq::model::build_model(cfg.schema, cfg.branches, cfg.network, cfg.init_seed());
  dq::Rng rng(a.seed);
  dq::schema::Dataset batch{cfg.schema, random_records(*cfg.schema, cfg.branches, 16, rng)};
  m.fit_norm_stats(batch);
  auto params = m.params();
  dq::Rng drop(a.seed + 1);
  dq::diff::GradCheckResult r;
  const double seconds = dq::eval::time_training([&] {
    r = dq::diff::grad_check(
        [&](dq::diff::Tape& t) { return m.loss(t, batch.records, a.with_dropout, drop); }, params);
  });
  std::cout << "max_rel_error\t" << r.max_rel_error << "\n"
            << "coords_checked\t" << r.coords_checked << "\n"
            << "worst\t" << r.worst_param << "[" << r.worst_index << "]\n"
            << "worst_analytic\t" << r.worst_analytic << "\n"
            << "worst_numeric\t" << r.worst_numeric << "\n"
            << "tolerance\t" << a.tol << "\n"
            << "seconds\t" << dq::eval::format_seconds(seconds) << "\n";
  if (r.max_rel_error < a.tol) return 0;
  std::cerr << "gradient check failed: " << r.max_rel_error << " >= " << a.tol << "\n";
  return kExitRuntime;
}

// --- baseline ------------------------------------------------------------------------

struct BaselineArgs {
  std::string in, test, title_col = "title", bitrate_col = "bitrate", mos_col = "mos";
};

std::vector<dq::baselines::TitleSample> title_samples(const std::string& path, const BaselineArgs& a) {
  const RawCsv csv = read_raw_csv(path);
  const std::size_t t = csv.column(a.title_col), b = csv.column(a.bitrate_col), m = csv.column(a.mos_col);
  std::vector<dq::baselines::TitleSample> out;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    out.push_back({csv.rows[r][t], real_cell(csv, r, b), real_cell(csv, r, m)});
  }
  return out;
}

int cmd_baseline(const BaselineArgs& a) {
  const auto train = title_samples(a.in, a);
  const auto fit = dq::baselines::fit_per_title(train);
  const auto eval = dq::baselines::evaluate_per_title(fit, a.test.empty() ? train : title_samples(a.test, a));
  std::cout << "title\tslope\tintercept\tmse\n";
  for (const auto& [title, mse] : eval.mse) {
    const auto& f = fit.fits.at(title);
    std::cout << title << '\t' << dq::schema::format_real(f.slope) << '\t'
              << dq::schema::format_real(f.intercept) << '\t' << dq::eval::format_metric(mse) << '\n';
  }
  std::cout << "mean\t\t\t" << dq::eval::format_metric(eval.mean_mse) << '\n';
  return 0;
}

// --- transfer ------------------------------------------------------------------------

struct TransferArgs {
  std::string checkpoint, train, test, features;
  std::size_t k = 5;
};

int cmd_transfer(const TransferArgs& a) {
  const auto m = read_checkpoint(a.checkpoint);
  if (!m.is_classifier()) throw Error(Errc::WrongHead, "transfer needs a classification checkpoint");
  const auto table = features_from(a.features);
  const auto* fp = table ? &*table : nullptr;
  const auto train = dq::cli::read_dataset(a.train, m.schema_ptr(), fp);
  const auto test = dq::cli::read_dataset(a.test, m.schema_ptr(), fp);

  std::map<std::string, const dq::wordvec::WordVectorTable*> tables;
  for (const auto& b : m.branch_specs()) {
    if (const auto* t = std::get_if<dq::model::TextVectors>(&b.extractor)) tables[b.field] = t->table.get();
  }
  std::map<std::string, dq::schema::NormStats> norm = m.norm_stats();
  for (const auto& f : m.schema().fields()) {
    if (std::holds_alternative<dq::schema::ContinuousKind>(f.kind) && !norm.contains(f.name)) {
      norm.emplace(f.name, dq::schema::compute_norm_stats(train, f.name));
    }
  }

  auto accuracy_with = [&](auto encode) {
    std::vector<std::vector<double>> xs;
    std::vector<std::size_t> ys;
    for (const auto& r : train.records) {
      xs.push_back(encode(r));
      ys.push_back(dq::schema::class_of(r));
    }
    const auto knn = dq::baselines::knn_fit(std::move(xs), std::move(ys), a.k);
    std::vector<std::size_t> preds, truth;
    for (const auto& r : test.records) {
      preds.push_back(dq::baselines::knn_predict(knn, encode(r)));
      truth.push_back(dq::schema::class_of(r));
    }
    return dq::eval::accuracy(preds, truth);
  };
  const double repr = accuracy_with([&](const auto& r) { return dq::model::extract_representation(m, r); });
  const double raw = accuracy_with(
      [&](const auto& r) { return dq::baselines::raw_feature_encode(r, m.schema(), norm, tables); });
  std::cout << "k\t" << a.k << "\n"
            << "representation_accuracy\t" << dq::eval::format_metric(repr) << "\n"
            << "raw_accuracy\t" << dq::eval::format_metric(raw) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DeepQoE: multimodal video QoE prediction"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
  s->add_option("--spec", synth.spec, "Synthetic spec (JSON)")->required();
  s->add_option("--seed", synth.seed, "Generator seed");
  s->add_option("--out", synth.out, "Output CSV")->required();
  s->add_option("--vectors-out", synth.vectors_out, "Also write random word vectors for the type tokens");
  s->add_option("--vector-dim", synth.vector_dim, "Dimension of --vectors-out");
  s->add_option("--schema-out", synth.schema_out, "Also write the dataset schema (JSON)");

  std::string jnd_in, jnd_out;
  auto* lj = app.add_subcommand("label-jnd", "Append qoe_class derived from qp and jnd1..3");
  lj->add_option("--in", jnd_in)->required();
  lj->add_option("--out", jnd_out)->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model and write a checkpoint");
  t->add_option("--config", tr.config, "Run config (JSON)")->required();
  t->add_option("--seed", tr.seed, "Override model and training seeds");
  t->add_option("--epochs", tr.epochs, "Override epochs");
  t->add_option("--out-dir", tr.out_dir, "Override output directory");

  std::string ev_config, ev_ckpt;
  bool ev_loo = false;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint, or run leave-one-group-out");
  e->add_option("--config", ev_config)->required();
  e->add_option("--checkpoint", ev_ckpt)->required();
  e->add_flag("--loo", ev_loo, "Leave-one-group-out over the config's group field");

  std::string pr_ckpt, pr_in, pr_features, pr_out;
  auto* p = app.add_subcommand("predict", "Per-record predictions as TSV");
  p->add_option("--checkpoint", pr_ckpt)->required();
  p->add_option("--in", pr_in)->required();
  p->add_option("--features", pr_features, "Video-feature file for clip ids");
  p->add_option("--out", pr_out, "Write here instead of stdout");

  std::string ex_ckpt, ex_in, ex_features, ex_out;
  auto* x = app.add_subcommand("export-repr", "Export last-hidden-layer representations");
  x->add_option("--checkpoint", ex_ckpt)->required();
  x->add_option("--in", ex_in)->required();
  x->add_option("--out", ex_out)->required();
  x->add_option("--features", ex_features, "Video-feature file for clip ids");

  GradArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Compare backprop against central differences");
  g->add_option("--config", gc.config)->required();
  g->add_option("--tol", gc.tol, "Pass threshold on max relative error");
  g->add_option("--seed", gc.seed, "Seed of the 16-record batch");
  g->add_flag("--with-dropout", gc.with_dropout, "Keep dropout active (rejected)");

  BaselineArgs bl;
  auto* b = app.add_subcommand("baseline", "Per-title bitrate->MOS linear regression");
  b->add_option("--in", bl.in, "Training CSV")->required();
  b->add_option("--test", bl.test, "Evaluation CSV (default: training CSV)");
  b->add_option("--title-col", bl.title_col);
  b->add_option("--bitrate-col", bl.bitrate_col);
  b->add_option("--mos-col", bl.mos_col);

  TransferArgs tf;
  auto* f = app.add_subcommand("transfer", "k-NN on representations vs raw features");
  f->add_option("--checkpoint", tf.checkpoint)->required();
  f->add_option("--train", tf.train)->required();
  f->add_option("--test", tf.test)->required();
  f->add_option("--k", tf.k, "Odd neighbour count");
  f->add_option("--features", tf.features, "Video-feature file for clip ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*lj) return cmd_label_jnd(jnd_in, jnd_out);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev_config, ev_ckpt, ev_loo);
    if (*p) return cmd_predict(pr_ckpt, pr_in, pr_features, pr_out);
    if (*x) return cmd_export_repr(ex_ckpt, ex_in, ex_features, ex_out);
    if (*g) return cmd_gradcheck(gc);
    if (*b) return cmd_baseline(bl);
    if (*f) return cmd_transfer(tf);
  } catch (const Error& err) {
    std::cerr << "deepqoe: " << err.what() << "\n";
    return exit_code_for(err.code());
  } catch (const std::exception& err) {
    std::cerr << "deepqoe: " << err.what() << "\n";
    return kExitRuntime;
  }
  return kExitInput;
}
