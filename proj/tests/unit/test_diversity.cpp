#include <doctest.h>

#include "phrasecraft/error.hpp"
#include "phrasecraft/evalsuite.hpp"

using namespace phrasecraft;

namespace {

Embeddings make(const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  Embeddings e;
  e.matrix = Matrix(0, rows.front().second.size());
  for (const auto& [s, v] : rows) {
    e.vocab.add(s);
    e.matrix.append_row(v);
  }
  return e;
}

}  // namespace

TEST_CASE("lexically identical neighbours") {
  const auto e = make({{"hot dog", {1, 0}}, {"Hot Dog", {1, 0.1}}, {"HOT  DOG", {1, 0.2}}});
  const std::vector<Phrase> q{Phrase::from_text("hot dog")};
  DiversityOptions opt;
  opt.k = 2;
  const auto r = diversity_report(q, e, opt);
  CHECK(r.pct_new_tokens == 0.0);
  CHECK(r.lcs_precision == doctest::Approx(100.0));
  CHECK(r.avg_levenshtein == 0.0);
  CHECK(r.queries_used == 1);
}

TEST_CASE("token-disjoint neighbours") {
  const auto e = make({{"hot dog", {1, 0}}, {"cold cat", {1, 0.1}}, {"red sky blue", {1, 0.2}}});
  const std::vector<Phrase> q{Phrase::from_text("hot dog")};
  DiversityOptions opt;
  opt.k = 2;
  const auto r = diversity_report(q, e, opt);
  CHECK(r.lcs_precision == 0.0);
  CHECK(r.pct_new_tokens == doctest::Approx(5.0 / 2.0));
  CHECK(r.avg_levenshtein == doctest::Approx((2.0 + 3.0) / 2.0));
}

TEST_CASE("queries off the vocabulary use token means or are skipped") {
  const auto e = make({{"hot", {1, 0}}, {"dog", {0, 1}}, {"hot dog stand", {1, 1}}, {"cat", {-1, 0}}});
  const std::vector<Phrase> q{Phrase::from_text("hot dog"), Phrase::from_text("zzz")};
  DiversityOptions opt;
  opt.k = 1;
  const auto r = diversity_report(q, e, opt);
  CHECK(r.queries_used == 1);
  CHECK(r.queries_skipped == 1);
  CHECK(r.lcs_precision == doctest::Approx(100.0 * 2 / 3));
  const std::vector<Phrase> none{Phrase::from_text("zzz")};
  CHECK_THROWS_AS(diversity_report(none, e, opt), DataError);
  CHECK_THROWS_AS(diversity_report(std::span<const Phrase>{}, e, opt), InvalidArgument);
}

TEST_CASE("threaded and serial reports agree") {
  Rng rng(2);
  Embeddings e;
  e.matrix = Matrix(0, 4);
  std::vector<Phrase> queries;
  for (int i = 0; i < 60; ++i) {
    const std::string s = "w" + std::to_string(i % 7) + " v" + std::to_string(i);
    e.vocab.add(s);
    std::vector<double> v(4);
    for (auto& x : v) x = rng.normal(0, 1);
    e.matrix.append_row(v);
    if (i % 3 == 0) queries.push_back(Phrase::from_text(s));
  }
  DiversityOptions serial;
  DiversityOptions threaded;
  threaded.threads = 4;
  const auto a = diversity_report(queries, e, serial);
  const auto b = diversity_report(queries, e, threaded);
  CHECK(a.pct_new_tokens == b.pct_new_tokens);
  CHECK(a.lcs_precision == b.lcs_precision);
  CHECK(a.avg_levenshtein == b.avg_levenshtein);
}
