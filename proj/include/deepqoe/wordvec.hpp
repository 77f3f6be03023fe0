#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace deepqoe::wordvec {

// Immutable token -> vector map in the plain word-vector text format
// (`token f1 f2 ... fD`, one entry per line). Tokens are stored lowercased.
class WordVectorTable {
 public:
  WordVectorTable(std::size_t dim, std::map<std::string, std::vector<double>> entries);
  WordVectorTable(const WordVectorTable& other);
  WordVectorTable& operator=(const WordVectorTable& other);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<double>* find(std::string_view token) const;
  const std::map<std::string, std::vector<double>>& entries() const noexcept { return entries_; }

  // Subtable holding only the listed tokens that exist here.
  WordVectorTable restricted_to(const std::vector<std::string>& tokens) const;

  // Number of embed_text calls that found no in-vocabulary token.
  std::uint64_t oov_warnings() const noexcept { return oov_warnings_.load(); }
  void note_oov() const noexcept { oov_warnings_.fetch_add(1, std::memory_order_relaxed); }

  friend bool operator==(const WordVectorTable& a, const WordVectorTable& b) {
    return a.dim_ == b.dim_ && a.entries_ == b.entries_;
  }

 private:
  std::size_t dim_;
  std::map<std::string, std::vector<double>> entries_;
  mutable std::atomic<std::uint64_t> oov_warnings_{0};
};

WordVectorTable load_word_vectors(std::istream& in);
void write_word_vectors(std::ostream& out, const WordVectorTable& table);

std::string to_lower(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);

struct EmbedResult {
  std::vector<double> vector;
  std::size_t tokens_found = 0;
  bool all_oov() const noexcept { return tokens_found == 0; }
};

// Mean of the vectors of the in-vocabulary tokens of the lowercased,
// whitespace-tokenized text; all-OOV text yields the zero vector and bumps
// the table's warning counter.
EmbedResult embed_text_detailed(std::string_view text, const WordVectorTable& table);
std::vector<double> embed_text(std::string_view text, const WordVectorTable& table);

// Random unit-scale vectors for a token list (synthetic-data runs).
WordVectorTable make_random_table(const std::vector<std::string>& tokens, std::size_t dim,
                                  std::uint64_t seed);

}  // namespace deepqoe::wordvec
