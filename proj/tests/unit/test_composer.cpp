#include <doctest.h>

#include <cmath>

#include "phrasecraft/composer.hpp"
#include "phrasecraft/error.hpp"
#include "test_support.hpp"

using namespace phrasecraft;

namespace {

ComposerModel small_model(std::size_t d, Rng& rng, bool projection) {
  ComposerModel m;
  for (const char* w : {"a", "b", "c", "d", "e"}) m.token_vocab.add(w);
  m.token_table = Matrix(5, d);
  for (auto& v : m.token_table.flat()) v = rng.normal(0, 1);
  if (projection) {
    m.add_projection(rng, 0.3);
    m.nonlinearity = Nonlinearity::Tanh;
  }
  return m;
}

std::vector<double> row_of(const ComposerModel& m, std::size_t i) {
  const auto r = m.token_table.row(i);
  return {r.begin(), r.end()};
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on whitespace") {
  CHECK(tokenize("  Pulls THE\ttrigger\n") == std::vector<std::string>{"pulls", "the", "trigger"});
  CHECK(tokenize("").empty());
  CHECK(Phrase::from_text("Hot Dog").tokens == std::vector<std::string>{"hot", "dog"});
  CHECK(tokenize("a [MASK] B") == std::vector<std::string>{"a", "[MASK]", "b"});
}

TEST_CASE("embed_phrase is a mean of token rows") {
  Rng rng(1);
  const auto m = small_model(4, rng, false);
  CHECK(embed_phrase(m, Phrase::from_text("b")) == row_of(m, 1));
  const auto two = embed_phrase(m, Phrase::from_text("a c"));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(two[i] == doctest::Approx((m.token_table(0, i) + m.token_table(2, i)) / 2));
  }
  CHECK(embed_phrase(m, Phrase::from_text("a a")) == embed_phrase(m, Phrase::from_text("a")));
}

TEST_CASE("pooling ignores order and is homogeneous") {
  Rng rng(2);
  auto m = small_model(3, rng, false);
  const auto fwd = embed_phrase(m, Phrase::from_text("a b c"));
  const auto rev = embed_phrase(m, Phrase::from_text("c b a"));
  for (std::size_t i = 0; i < 3; ++i) CHECK(fwd[i] == doctest::Approx(rev[i]).epsilon(1e-14));
  for (auto& v : m.token_table.flat()) v *= 2.5;
  const auto scaled = embed_phrase(m, Phrase::from_text("a b c"));
  for (std::size_t i = 0; i < 3; ++i) CHECK(scaled[i] == doctest::Approx(2.5 * fwd[i]));
}

TEST_CASE("unknown tokens") {
  Rng rng(3);
  auto m = small_model(3, rng, false);
  bool oov = false;
  CHECK(embed_phrase(m, Phrase::from_text("a zzz"), &oov) == row_of(m, 0));
  CHECK_FALSE(oov);
  const auto none = embed_phrase(m, Phrase::from_text("zzz yyy"), &oov);
  CHECK(oov);
  CHECK(none == std::vector<double>(3, 0.0));
  m.oov_policy = OovPolicy::Zero;
  const auto half = embed_phrase(m, Phrase::from_text("a zzz"), &oov);
  for (std::size_t i = 0; i < 3; ++i) CHECK(half[i] == doctest::Approx(m.token_table(0, i) / 2));
}

TEST_CASE("embed_document truncates") {
  Rng rng(4);
  const auto m = small_model(3, rng, true);
  const std::vector<std::string> shortdoc{"a", "b", "c"};
  CHECK(embed_document(m, shortdoc) == embed_tokens(m, shortdoc));
  const std::vector<std::string> same(7, "d");
  const auto dv = embed_document(m, same);
  const auto one = embed_tokens(m, std::vector<std::string>{"d"});
  for (std::size_t i = 0; i < 3; ++i) CHECK(dv[i] == doctest::Approx(one[i]).epsilon(1e-14));
  std::vector<std::string> longdoc;
  for (int i = 0; i < 200; ++i) longdoc.push_back(i < 120 ? "a" : "e");
  CHECK(embed_document(m, longdoc) ==
        embed_tokens(m, std::span<const std::string>(longdoc).first(120)));
}

TEST_CASE("backward without projection spreads upstream over tokens") {
  Rng rng(5);
  const auto m = small_model(3, rng, false);
  const std::vector<double> up{1.0, -2.0, 0.5};
  const auto g = composer_backward(m, Phrase::from_text("a b a d"), up);
  REQUIRE(g.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(g.rows.at(0)[i] == doctest::Approx(2 * up[i] / 4));
    CHECK(g.rows.at(1)[i] == doctest::Approx(up[i] / 4));
    CHECK(g.rows.at(3)[i] == doctest::Approx(up[i] / 4));
  }
  const std::vector<double> zero(3, 0.0);
  CHECK(composer_backward(m, Phrase::from_text("a b"), zero).is_zero());
}

TEST_CASE("backward matches finite differences") {
  for (bool projection : {false, true}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(100 + seed);
      auto m = small_model(6, rng, projection);
      const Phrase p = Phrase::from_text("a c e c");
      std::vector<double> up(6);
      for (auto& v : up) v = rng.normal(0, 1);
      std::vector<double> analytic(m.parameter_count(), 0.0);
      composer_backward(m, p, up).accumulate_into(analytic, m);
      const auto params = m.parameters();
      const LossFn loss = [&](std::span<const double> flat) {
        ComposerModel copy = m;
        copy.set_parameters(flat);
        const auto v = embed_phrase(copy, p);
        double s = 0;
        for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * up[i];
        return s;
      };
      CHECK(finite_diff_check(loss, params, analytic) < 1e-4);
    }
  }
}

TEST_CASE("checkpoints round-trip exactly") {
  testing::TempDir dir;
  Rng rng(6);
  auto m = small_model(4, rng, true);
  m.oov_policy = OovPolicy::Zero;
  save_composer(m, dir / "ckpt");
  const auto back = load_composer(dir / "ckpt");
  CHECK(back.token_vocab.entries() == m.token_vocab.entries());
  CHECK(back.parameters() == m.parameters());
  CHECK(back.nonlinearity == Nonlinearity::Tanh);
  CHECK(back.oov_policy == OovPolicy::Zero);
  CHECK_THROWS(load_composer(dir / "missing"));
}

TEST_CASE("policy names") {
  CHECK(parse_oov_policy("zero-vector") == OovPolicy::Zero);
  CHECK(parse_oov_policy("skip") == OovPolicy::Skip);
  CHECK(parse_nonlinearity("tanh") == Nonlinearity::Tanh);
  CHECK_THROWS_AS(parse_oov_policy("drop"), InvalidArgument);
}
