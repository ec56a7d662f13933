#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "phrasecraft/error.hpp"
#include "phrasecraft/evalsuite.hpp"

using namespace phrasecraft;

namespace {

using Seq = std::vector<std::string>;

std::size_t lev_recursive(const Seq& a, std::size_t i, const Seq& b, std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  if (a[i] == b[j]) return lev_recursive(a, i + 1, b, j + 1);
  return 1 + std::min({lev_recursive(a, i + 1, b, j), lev_recursive(a, i, b, j + 1),
                       lev_recursive(a, i + 1, b, j + 1)});
}

Seq random_seq(Rng& rng, std::size_t max_len, std::size_t alphabet) {
  Seq s(rng.index(max_len + 1));
  for (auto& t : s) t = std::string(1, static_cast<char>('a' + rng.index(alphabet)));
  return s;
}

}  // namespace

TEST_CASE("levenshtein basics") {
  const Seq a{"x", "y", "z"};
  CHECK(levenshtein(a, a) == 0);
  CHECK(levenshtein(Seq{}, a) == 3);
  CHECK(levenshtein_chars("kitten", "sitting") == 3);
  const Seq k{"k", "i", "t", "t", "e", "n"}, s{"s", "i", "t", "t", "i", "n", "g"};
  CHECK(lev_recursive(k, 0, s, 0) == 3);
}

TEST_CASE("levenshtein is a metric") {
  Rng rng(1);
  for (int i = 0; i < 400; ++i) {
    const Seq a = random_seq(rng, 6, 3), b = random_seq(rng, 6, 3), c = random_seq(rng, 6, 3);
    CHECK(levenshtein(a, b) == levenshtein(b, a));
    CHECK((levenshtein(a, b) == 0) == (a == b));
    CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
    CHECK(levenshtein(a, b) == lev_recursive(a, 0, b, 0));
  }
}

TEST_CASE("longest common substring") {
  CHECK(longest_common_substring(Seq{"a", "b"}, Seq{"c", "d"}) == 0);
  CHECK(longest_common_substring(Seq{"b", "c"}, Seq{"a", "b", "c", "d"}) == 2);
  CHECK(longest_common_substring(Seq{}, Seq{"a"}) == 0);
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    const Seq a = random_seq(rng, 8, 3), b = random_seq(rng, 8, 3);
    std::size_t best = 0;
    for (std::size_t s = 0; s < a.size(); ++s)
      for (std::size_t e = s + 1; e <= a.size(); ++e)
        if (std::search(b.begin(), b.end(), a.begin() + s, a.begin() + e) != b.end())
          best = std::max(best, e - s);
    CHECK(longest_common_substring(a, b) == best);
  }
}

TEST_CASE("pearson") {
  const std::vector<double> x{1, 2, 3, 4, 7};
  std::vector<double> y, z;
  for (double v : x) {
    y.push_back(2 * v + 3);
    z.push_back(-v);
  }
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(pearson(x, z) == doctest::Approx(-1.0));
  CHECK(pearson(x, x) == doctest::Approx(1.0));
  const std::vector<double> flat(5, 1.0);
  CHECK_THROWS_AS(pearson(x, flat), NumericError);
  const std::vector<double> shorter{1, 2};
  CHECK_THROWS_AS(pearson(x, shorter), InvalidArgument);

  Rng rng(3);
  std::vector<double> a(20), b(20);
  for (auto& v : a) v = rng.normal(0, 1);
  for (std::size_t i = 0; i < 20; ++i) b[i] = 0.4 * a[i] + rng.normal(0, 1);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    ma += a[i] / 20;
    mb += b[i] / 20;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  CHECK(std::abs(pearson(a, b) - sab / std::sqrt(saa * sbb)) < 1e-12);
}

TEST_CASE("spearman uses average ranks") {
  const std::vector<double> x{1, 2, 3, 4}, y{10, 20, 20, 40};
  // ranks of y: 1, 2.5, 2.5, 4
  const std::vector<double> rx{1, 2, 3, 4}, ry{1, 2.5, 2.5, 4};
  CHECK(spearman(x, y) == doctest::Approx(pearson(rx, ry)));
  const std::vector<double> cubic{1, 8, 27, 64};
  CHECK(spearman(x, cubic) == doctest::Approx(1.0));
}
