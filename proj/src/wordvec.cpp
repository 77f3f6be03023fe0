#include "deepqoe/wordvec.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

#include "deepqoe/error.hpp"
#include "deepqoe/rng.hpp"
#include "deepqoe/schema.hpp"

namespace deepqoe::wordvec {

WordVectorTable::WordVectorTable(std::size_t dim, std::map<std::string, std::vector<double>> entries)
    : dim_(dim), entries_(std::move(entries)) {
  if (dim_ == 0) throw Error(Errc::InconsistentDim, "word vectors need dim >= 1");
  for (const auto& [token, v] : entries_) {
    if (token.empty() || token.find_first_of(" \t\r\n") != std::string::npos ||
        token != to_lower(token)) {
      throw Error(Errc::MalformedLine, "token '" + token + "' is not a lowercase word");
    }
    if (v.size() != dim_) throw Error(Errc::InconsistentDim, "token '" + token + "' has wrong length");
  }
}

WordVectorTable::WordVectorTable(const WordVectorTable& other)
    : dim_(other.dim_), entries_(other.entries_), oov_warnings_(other.oov_warnings()) {}

WordVectorTable& WordVectorTable::operator=(const WordVectorTable& other) {
  dim_ = other.dim_;
  entries_ = other.entries_;
  oov_warnings_.store(other.oov_warnings());
  return *this;
}

const std::vector<double>* WordVectorTable::find(std::string_view token) const {
  auto it = entries_.find(std::string(token));
  return it == entries_.end() ? nullptr : &it->second;
}

WordVectorTable WordVectorTable::restricted_to(const std::vector<std::string>& tokens) const {
  std::map<std::string, std::vector<double>> kept;
  for (const auto& t : tokens) {
    if (const auto* v = find(t)) kept.emplace(t, *v);
  }
  return WordVectorTable(dim_, std::move(kept));
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) out.push_back(to_lower(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) out.push_back(to_lower(current));
  return out;
}

WordVectorTable load_word_vectors(std::istream& in) {
  std::map<std::string, std::vector<double>> entries;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto parts = schema::split_line(line, ' ');
    if (parts.size() < 2 || parts[0].empty()) {
      throw Error(Errc::MalformedLine, "word-vector line " + std::to_string(line_no), line_no, "");
    }
    std::vector<double> vec;
    vec.reserve(parts.size() - 1);
    for (std::size_t i = 1; i < parts.size(); ++i) {
      auto v = schema::parse_real(parts[i]);
      if (!v || parts[i].empty()) {
        throw Error(Errc::MalformedLine, "word-vector line " + std::to_string(line_no) +
                                             ": bad number '" + parts[i] + "'",
                    line_no, "");
      }
      vec.push_back(*v);
    }
    if (dim == 0) {
      dim = vec.size();
    } else if (vec.size() != dim) {
      throw Error(Errc::InconsistentDim, "word-vector line " + std::to_string(line_no) + " has " +
                                             std::to_string(vec.size()) + " values, expected " +
                                             std::to_string(dim),
                  line_no, "");
    }
    entries[to_lower(parts[0])] = std::move(vec);
  }
  if (line_no == 0) throw Error(Errc::EmptyFile, "word-vector source is empty");
  return WordVectorTable(dim, std::move(entries));
}

void write_word_vectors(std::ostream& out, const WordVectorTable& table) {
  for (const auto& [token, v] : table.entries()) {
    out << token;
    for (double x : v) out << ' ' << schema::format_real(x);
    out << '\n';
  }
}

EmbedResult embed_text_detailed(std::string_view text, const WordVectorTable& table) {
  EmbedResult r;
  r.vector.assign(table.dim(), 0.0);
  for (const auto& tok : tokenize(text)) {
    const auto* v = table.find(tok);
    if (v == nullptr) continue;
    for (std::size_t i = 0; i < v->size(); ++i) r.vector[i] += (*v)[i];
    ++r.tokens_found;
  }
  if (r.tokens_found == 0) {
    table.note_oov();
    return r;
  }
  for (auto& x : r.vector) x /= static_cast<double>(r.tokens_found);
  return r;
}

std::vector<double> embed_text(std::string_view text, const WordVectorTable& table) {
  return embed_text_detailed(text, table).vector;
}

WordVectorTable make_random_table(const std::vector<std::string>& tokens, std::size_t dim,
                                  std::uint64_t seed) {
  Rng rng(seed);
  std::map<std::string, std::vector<double>> entries;
  for (const auto& t : tokens) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    entries[to_lower(t)] = std::move(v);
  }
  return WordVectorTable(dim, std::move(entries));
}

}  // namespace deepqoe::wordvec
