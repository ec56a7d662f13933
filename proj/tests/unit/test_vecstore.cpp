#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phrasecraft/error.hpp"
#include "phrasecraft/numcore.hpp"
#include "phrasecraft/vecstore.hpp"
#include "test_support.hpp"

using namespace phrasecraft;

namespace {

Embeddings random_embeddings(std::size_t n, std::size_t d, Rng& rng) {
  Embeddings e;
  e.matrix = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    e.vocab.add("w" + std::to_string(i) + (i % 3 == 0 ? " phrase" : ""));
    for (auto& v : e.matrix.row(i)) v = rng.normal(0.0, 1.0);
  }
  return e;
}

}  // namespace

TEST_CASE("vocab invariants") {
  Vocab v;
  CHECK(v.add("pulls the trigger") == 0);
  CHECK(v.add("dog") == 1);
  CHECK(v.find("dog") == 1u);
  CHECK_FALSE(v.find("cat").has_value());
  CHECK_THROWS_AS(v.add("dog"), InvalidArgument);
  CHECK_THROWS_AS(v.add(""), InvalidArgument);
  CHECK_THROWS_AS(v.add("a\tb"), InvalidArgument);
  CHECK_THROWS_AS(v.add("a\nb"), InvalidArgument);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.find(v.at(i)) == i);
}

TEST_CASE("pvec-text: header and rows") {
  testing::TempDir dir;
  testing::write_text(dir / "a.pvec", "2 3\nfoo\t1 2 3\nbar baz\t4 5 6\n");
  const auto e = load_vectors(dir / "a.pvec");
  CHECK(e.size() == 2);
  CHECK(e.dim() == 3);
  CHECK(e.vocab.at(1) == "bar baz");
  CHECK(e.matrix(1, 2) == 6.0);
}

TEST_CASE("pvec-text: short row is a parse error at its line") {
  testing::TempDir dir;
  testing::write_text(dir / "a.pvec", "2 3\nfoo\t1 2 3\nbar\t4 5\n");
  try {
    load_vectors(dir / "a.pvec", VectorFormat::PvecText);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("pvec-text: duplicates, non-finite values and bad counts are rejected") {
  testing::TempDir dir;
  testing::write_text(dir / "dup.pvec", "2 1\nfoo\t1\nfoo\t2\n");
  CHECK_THROWS_AS(load_vectors(dir / "dup.pvec", VectorFormat::PvecText), ParseError);
  testing::write_text(dir / "nan.pvec", "1 1\nfoo\tnan\n");
  CHECK_THROWS_AS(load_vectors(dir / "nan.pvec", VectorFormat::PvecText), ParseError);
  testing::write_text(dir / "count.pvec", "3 1\nfoo\t1\n");
  CHECK_THROWS_AS(load_vectors(dir / "count.pvec", VectorFormat::PvecText), ParseError);
  testing::write_text(dir / "notab.pvec", "1 2\nfoo 1 2\n");
  CHECK_THROWS_AS(load_vectors(dir / "notab.pvec", VectorFormat::PvecText), ParseError);
}

TEST_CASE("round trips") {
  testing::TempDir dir;
  Rng rng(3);
  const auto e = random_embeddings(40, 7, rng);
  save_vectors(e, dir / "a.bin", VectorFormat::PvecBin);
  save_vectors(e, dir / "a.txt", VectorFormat::PvecText);
  const auto b = load_vectors(dir / "a.bin");
  const auto t = load_vectors(dir / "a.txt");
  CHECK(b.vocab.entries() == e.vocab.entries());
  CHECK(t.vocab.entries() == e.vocab.entries());
  for (std::size_t i = 0; i < e.matrix.size(); ++i) {
    CHECK(b.matrix.flat()[i] == static_cast<double>(static_cast<float>(e.matrix.flat()[i])));
    CHECK(std::abs(t.matrix.flat()[i] - e.matrix.flat()[i]) <= 1e-6);
  }
  // A binary file reloaded and saved again is byte-identical.
  save_vectors(b, dir / "b.bin", VectorFormat::PvecBin);
  CHECK(testing::read_text(dir / "a.bin") == testing::read_text(dir / "b.bin"));
  CHECK(load_vectors(dir / "b.bin").matrix == b.matrix);
}

TEST_CASE("save: empty vocab, phrases with spaces, binary magic") {
  testing::TempDir dir;
  Embeddings empty;
  empty.matrix = Matrix(0, 4);
  save_vectors(empty, dir / "e.pvec", VectorFormat::PvecText);
  CHECK(testing::read_text(dir / "e.pvec") == "0 4\n");
  CHECK(load_vectors(dir / "e.pvec").size() == 0);

  Embeddings e;
  e.vocab.add("pulls the trigger");
  e.matrix = Matrix(1, 2, 0.5);
  save_vectors(e, dir / "p.pvec", VectorFormat::PvecText);
  CHECK(testing::read_text(dir / "p.pvec") == "1 2\npulls the trigger\t0.5 0.5\n");
  save_vectors(e, dir / "p.bin", VectorFormat::PvecBin);
  CHECK(testing::read_text(dir / "p.bin").substr(0, 4) == "PVB1");
  CHECK(detect_vector_format(dir / "p.bin") == VectorFormat::PvecBin);
  CHECK(detect_vector_format(dir / "p.pvec") == VectorFormat::PvecText);
  CHECK_THROWS_AS(save_vectors(e, dir / "missing" / "x.pvec", VectorFormat::PvecText), IoError);
}

TEST_CASE("binary layout is little-endian count, dim, then length-prefixed entries") {
  testing::TempDir dir;
  Embeddings e;
  e.vocab.add("ab");
  e.matrix = Matrix(1, 1, 1.0);
  save_vectors(e, dir / "x.bin", VectorFormat::PvecBin);
  const std::string bytes = testing::read_text(dir / "x.bin");
  const std::string expected("PVB1\x01\x00\x00\x00\x01\x00\x00\x00\x02\x00"
                             "ab\x00\x00\x80\x3f",
                             20);
  CHECK(bytes == expected);
  testing::write_text(dir / "trail.bin", expected + "x");
  CHECK_THROWS_AS(load_vectors(dir / "trail.bin"), ParseError);
  testing::write_text(dir / "short.bin", expected.substr(0, 17));
  CHECK_THROWS_AS(load_vectors(dir / "short.bin"), ParseError);
}

TEST_CASE("glove import") {
  testing::TempDir dir;
  testing::write_text(dir / "g.txt", "the 0.1 0.2\ncat 1 2\nthe 9 9\n");
  const auto e = load_vectors(dir / "g.txt");
  CHECK(e.size() == 2);
  CHECK(e.matrix(0, 0) == 0.1);
  testing::write_text(dir / "w2v.txt", "2 2\nthe 0.1 0.2\ncat 1 2\n");
  CHECK(load_vectors(dir / "w2v.txt", VectorFormat::Glove).size() == 2);
}

TEST_CASE("cosine") {
  const std::vector<double> a{1, 0}, b{1, 1}, c{0, 1}, z{0, 0};
  CHECK(cosine(a, a) == doctest::Approx(1.0));
  CHECK(cosine(a, c) == 0.0);
  CHECK(cosine(a, b) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(cosine(a, z) == 0.0);
  const std::vector<double> three{1, 2, 3};
  CHECK_THROWS_AS(cosine(a, three), InvalidArgument);
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x(5), y(5);
    for (auto& v : x) v = rng.normal(0, 1);
    for (auto& v : y) v = rng.normal(0, 1);
    const double s = cosine(x, y);
    CHECK(s >= -1.0 - 1e-12);
    CHECK(s <= 1.0 + 1e-12);
  }
}

TEST_CASE("nearest neighbours: identity matrix and exclusion") {
  Embeddings e;
  e.matrix = Matrix::identity(3);
  for (const char* w : {"a", "b", "c"}) e.vocab.add(w);
  const std::vector<double> q{0, 1, 0};
  const auto nn = nearest_neighbors(q, e, 1);
  REQUIRE(nn.hits.size() == 1);
  CHECK(nn.hits[0].surface == "b");
  CHECK(nn.hits[0].score == doctest::Approx(1.0));
  const auto ex = nearest_neighbors(q, e, 3, Metric::Cosine, std::string_view("b"));
  CHECK(ex.hits.size() == 2);
  for (const auto& h : ex.hits) CHECK(h.surface != "b");
  CHECK(nearest_neighbors(q, e, 10).hits.size() == 3);
}

TEST_CASE("nearest neighbours equal a full sort") {
  Rng rng(11);
  const auto e = random_embeddings(50, 8, rng);
  for (Metric metric : {Metric::Cosine, Metric::L2}) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> q(8);
      for (auto& v : q) v = rng.normal(0, 1);
      const std::size_t k = 1 + rng.index(12);
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t i = 0; i < e.size(); ++i) {
        const auto row = e.matrix.row(i);
        if (metric == Metric::Cosine) {
          double ab = 0, aa = 0, bb = 0;
          for (std::size_t j = 0; j < 8; ++j) {
            ab += q[j] * row[j];
            aa += q[j] * q[j];
            bb += row[j] * row[j];
          }
          all.emplace_back(-ab / std::sqrt(aa * bb), i);
        } else {
          double s = 0;
          for (std::size_t j = 0; j < 8; ++j) s += (q[j] - row[j]) * (q[j] - row[j]);
          all.emplace_back(std::sqrt(s), i);
        }
      }
      std::sort(all.begin(), all.end());
      const auto nn = nearest_neighbors(q, e, k, metric);
      REQUIRE(nn.hits.size() == k);
      for (std::size_t r = 0; r < k; ++r) CHECK(nn.hits[r].id == all[r].second);
    }
  }
}
