#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <thread>

#include "deepqoe/wordvec.hpp"
#include "support.hpp"

using namespace deepqoe;
using namespace deepqoe::wordvec;

namespace {

WordVectorTable load(const std::string& text) {
  std::istringstream in(text);
  return load_word_vectors(in);
}

}  // namespace

TEST_CASE("load_word_vectors") {
  const WordVectorTable t = load("movie 0.1 0.2 0.3\nnews 1 2 3\n");
  CHECK(t.dim() == 3);
  CHECK(t.size() == 2);
  CHECK(*t.find("news") == std::vector<double>{1, 2, 3});

  CHECK_ERRC(load("movie 0.1 0.2 0.3\nnews 1 2 3 4\n"), Errc::InconsistentDim);
  CHECK(*load("movie 0.1 0.2 0.3\nmovie 1 1 1\n").find("movie") == std::vector<double>{1, 1, 1});
  CHECK_ERRC(load(""), Errc::EmptyFile);
  CHECK_ERRC(load("movie 0.1 zz 0.3\n"), Errc::MalformedLine);
  CHECK_ERRC(load("movie\n"), Errc::MalformedLine);
  CHECK(load("Movie 1 2\n").find("movie") != nullptr);
}

TEST_CASE("line numbers are reported") {
  try {
    load("a 1 2\nb 1 2\nc 1\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InconsistentDim);
    CHECK(e.row() == std::optional<std::size_t>(3));
  }
}

TEST_CASE("write then load is lossless") {
  const WordVectorTable t = make_random_table({"movie", "cartoon", "sport", "news"}, 50, 3);
  std::ostringstream out;
  write_word_vectors(out, t);
  std::istringstream in(out.str());
  CHECK(load_word_vectors(in) == t);
}

TEST_CASE("embed_text") {
  const WordVectorTable t = load("a 0 2\nb 2 0\nc 4 4\n");
  CHECK(embed_text("a", t) == std::vector<double>{0, 2});
  CHECK(embed_text("a b", t) == std::vector<double>{1, 1});
  CHECK(embed_text("  A \t B  zzz", t) == std::vector<double>{1, 1});

  CHECK(t.oov_warnings() == 0);
  CHECK(embed_text("zzz qqq", t) == std::vector<double>{0, 0});
  CHECK(t.oov_warnings() == 1);
  CHECK(embed_text("", t) == std::vector<double>{0, 0});
  CHECK(t.oov_warnings() == 2);
  CHECK(embed_text_detailed("a zzz c", t).tokens_found == 2);
}

TEST_CASE("embed_text is case and order insensitive") {
  const WordVectorTable t = make_random_table({"live", "sport", "news", "late", "night"}, 16, 5);
  std::vector<std::string> words = {"live", "sport", "news", "late", "night", "oov"};
  const auto base = embed_text("live sport news late night oov", t);
  CHECK(base.size() == 16);
  CHECK(embed_text("LIVE Sport NEWS late NiGhT oov", t) == base);
  std::sort(words.begin(), words.end());
  do {
    std::string text;
    for (const auto& w : words) text += w + " ";
    const auto v = embed_text(text, t);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(v[i] - base[i]) < 1e-15);
  } while (std::next_permutation(words.begin(), words.end()));
}

TEST_CASE("the warning counter is safe under concurrent readers") {
  const WordVectorTable t = load("a 1\n");
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&] {
      for (int k = 0; k < 1000; ++k) embed_text("zzz", t);
    });
  }
  for (auto& th : threads) th.join();
  CHECK(t.oov_warnings() == 4000);
}

TEST_CASE("restricted_to keeps only the listed known tokens") {
  const WordVectorTable t = load("a 1\nb 2\nc 3\n");
  const WordVectorTable r = t.restricted_to({"a", "c", "zzz"});
  CHECK(r.size() == 2);
  CHECK(r.find("b") == nullptr);
  CHECK(*r.find("c") == std::vector<double>{3});
}
