// Checkpoint layout:
//   8 bytes   magic "DQOEv001"
//   4 bytes   header length, little-endian
//   N bytes   UTF-8 JSON header: schema, branches, network, norm stats,
//             word-vector token lists, tensor manifest
//   payload   every manifest tensor as little-endian float64, row-major,
//             in manifest order

#include <cstring>
#include <istream>
#include <ostream>

#include "deepqoe/error.hpp"
#include "deepqoe/json_io.hpp"
#include "deepqoe/model.hpp"

namespace deepqoe::model {

using json_io::json;

namespace {

constexpr std::size_t kMagicSize = 8;
constexpr std::string_view kMagicFamily = "DQOEv";

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
  out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFFU);
  out.write(b, 8);
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

struct NamedTensor {
  std::string name;
  const Tensor* tensor;
};

[[noreturn]] void corrupt(const std::string& what) { throw Error(Errc::CorruptPayload, what); }

}  // namespace

void save_checkpoint(const DeepQoEModel& model, std::ostream& out) {
  std::vector<std::pair<std::string, Tensor>> extras;

  json header;
  header["schema"] = json_io::schema_to_json(model.schema());
  json branches = json::array();
  for (const auto& b : model.branch_specs()) branches.push_back(json_io::branch_to_json(b));
  header["branches"] = branches;
  header["network"] = json_io::network_to_json(model.network());

  json norm_fields = json::array();
  for (const auto& [field, stats] : model.norm_stats()) {
    norm_fields.push_back(field);
    extras.emplace_back("norm." + field, Tensor::row({stats.min, stats.max}));
  }
  header["norm_stats"] = norm_fields;

  json word_vectors = json::object();
  for (const auto& b : model.branch_specs()) {
    const auto* text = std::get_if<TextVectors>(&b.extractor);
    if (!text) continue;
    const auto& table = *text->table;
    json tokens = json::array();
    std::vector<double> flat;
    for (const auto& [token, vec] : table.entries()) {
      tokens.push_back(token);
      flat.insert(flat.end(), vec.begin(), vec.end());
    }
    word_vectors[b.field] = json{{"dim", table.dim()}, {"tokens", tokens}};
    extras.emplace_back("wordvec." + b.field, Tensor(table.size(), table.dim(), std::move(flat)));
  }
  header["word_vectors"] = word_vectors;

  std::vector<NamedTensor> manifest;
  for (const auto* p : model.params()) manifest.push_back({p->name, &p->value});
  for (const auto& [name, t] : extras) manifest.push_back({name, &t});
  json tensors = json::array();
  for (const auto& nt : manifest) {
    tensors.push_back(json{{"name", nt.name}, {"rows", nt.tensor->rows()}, {"cols", nt.tensor->cols()}});
  }
  header["tensors"] = tensors;

  const std::string text = header.dump();
  out.write(kCheckpointMagic, kMagicSize);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& nt : manifest) {
    for (double v : nt.tensor->data()) put_f64(out, v);
  }
  if (!out) throw Error(Errc::Io, "failed writing checkpoint");
}

DeepQoEModel load_checkpoint(std::istream& in) {
  char magic[kMagicSize];
  in.read(magic, kMagicSize);
  if (in.gcount() != static_cast<std::streamsize>(kMagicSize)) {
    throw Error(Errc::BadMagic, "file too short for a checkpoint");
  }
  const std::string_view got(magic, kMagicSize);
  if (got != std::string_view(kCheckpointMagic, kMagicSize)) {
    if (got.substr(0, kMagicFamily.size()) == kMagicFamily) {
      throw Error(Errc::VersionUnsupported, "checkpoint version '" + std::string(got.substr(5)) + "'");
    }
    throw Error(Errc::BadMagic, "not a DeepQoE checkpoint");
  }

  unsigned char len_bytes[4];
  in.read(reinterpret_cast<char*>(len_bytes), 4);
  if (in.gcount() != 4) corrupt("truncated header length");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(len_bytes[i]) << (8 * i);
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (static_cast<std::uint32_t>(in.gcount()) != len) corrupt("truncated header");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    corrupt(std::string("header is not valid JSON: ") + e.what());
  }

  try {
    struct Entry {
      std::string name;
      std::size_t rows, cols;
    };
    std::vector<Entry> manifest;
    std::size_t total = 0;
    for (const auto& t : header.at("tensors")) {
      Entry e{t.at("name").get<std::string>(), t.at("rows").get<std::size_t>(),
              t.at("cols").get<std::size_t>()};
      total += e.rows * e.cols;
      if (total > (std::size_t{1} << 31)) corrupt("manifest declares an implausible payload size");
      manifest.push_back(std::move(e));
    }

    std::vector<unsigned char> payload(total * 8);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::size_t>(in.gcount()) != payload.size()) corrupt("truncated payload");
    if (in.peek() != std::char_traits<char>::eof()) corrupt("trailing bytes after payload");

    std::map<std::string, Tensor> tensors;
    std::size_t offset = 0;
    for (const auto& e : manifest) {
      std::vector<double> data(e.rows * e.cols);
      for (auto& v : data) {
        v = get_f64(payload.data() + offset);
        offset += 8;
      }
      if (!tensors.emplace(e.name, Tensor(e.rows, e.cols, std::move(data))).second) {
        corrupt("duplicate tensor '" + e.name + "'");
      }
    }
    auto take = [&](const std::string& name) -> Tensor& {
      auto it = tensors.find(name);
      if (it == tensors.end()) corrupt("missing tensor '" + name + "'");
      return it->second;
    };

    auto schema = std::make_shared<const schema::DatasetSchema>(
        json_io::schema_from_json(header.at("schema")));
    std::vector<BranchSpec> branches;
    for (const auto& jb : header.at("branches")) {
      BranchSpec b = json_io::branch_from_json(jb);
      if (auto* text_branch = std::get_if<TextVectors>(&b.extractor)) {
        const auto& jw = header.at("word_vectors").at(b.field);
        const auto dim = jw.at("dim").get<std::size_t>();
        const auto tokens = jw.at("tokens").get<std::vector<std::string>>();
        const Tensor& flat = take("wordvec." + b.field);
        if (flat.rows() != tokens.size() || flat.cols() != dim) {
          corrupt("word-vector tensor shape for '" + b.field + "'");
        }
        std::map<std::string, std::vector<double>> entries;
        for (std::size_t i = 0; i < tokens.size(); ++i) entries[tokens[i]] = flat.row_vector(i);
        text_branch->table =
            std::make_shared<const wordvec::WordVectorTable>(dim, std::move(entries));
      }
      branches.push_back(std::move(b));
    }
    DeepQoEModel model = build_model(schema, std::move(branches),
                                     json_io::network_from_json(header.at("network")), 0);

    for (auto* p : model.params()) {
      Tensor& t = take(p->name);
      if (!t.same_shape(p->value)) {
        corrupt("tensor '" + p->name + "' is " + diff::shape_string(t) + ", model expects " +
                diff::shape_string(p->value));
      }
      p->value = std::move(t);
    }
    std::map<std::string, schema::NormStats> norm;
    for (const auto& jf : header.at("norm_stats")) {
      const auto field = jf.get<std::string>();
      const Tensor& t = take("norm." + field);
      if (t.rows() != 1 || t.cols() != 2) corrupt("norm tensor shape for '" + field + "'");
      norm.emplace(field, schema::NormStats(field, t[0], t[1]));
    }
    model.set_norm_stats(std::move(norm));
    return model;
  } catch (const json::exception& e) {
    corrupt(std::string("header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::CorruptPayload) throw;
    corrupt(e.what());
  }
}

}  // namespace deepqoe::model
