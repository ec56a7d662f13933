#include <doctest.h>

#include <map>
#include <set>

#include "phrasecraft/evalsuite.hpp"

using namespace phrasecraft;

namespace {

PairItem pair(const std::string& a, const std::string& b, bool pos) {
  return {Phrase::from_text(a), Phrase::from_text(b), pos};
}

// Recomputes both constraints from scratch.
bool constraints_hold(const std::vector<PairItem>& kept) {
  std::map<std::size_t, int> balance;
  std::set<std::string> pos_types, neg_types;
  for (const auto& p : kept) {
    std::multiset<std::string> a(p.a.tokens.begin(), p.a.tokens.end());
    std::size_t count = 0;
    std::set<std::string> types;
    for (const auto& t : p.b.tokens) {
      auto it = a.find(t);
      if (it != a.end()) {
        a.erase(it);
        ++count;
        types.insert(t);
      }
    }
    balance[count] += p.positive ? 1 : -1;
    (p.positive ? pos_types : neg_types).insert(types.begin(), types.end());
  }
  for (const auto& [count, b] : balance) {
    if (b != 0) return false;
  }
  return pos_types == neg_types;
}

}  // namespace

TEST_CASE("unmatchable overlaps give an empty result with a warning") {
  const std::vector<PairItem> in{pair("a b", "a c", true), pair("d e", "d f", true),
                                 pair("g h", "i j", false), pair("k l", "m n", false)};
  std::vector<std::string> warnings;
  CHECK(filter_ppdb(in, &warnings).empty());
  CHECK(warnings.size() == 1);
}

TEST_CASE("shared overlap token keeps both pairs") {
  const std::vector<PairItem> in{pair("global affairs", "world affairs", true),
                                 pair("world affairs", "domestic affairs", false)};
  const auto out = filter_ppdb(in);
  CHECK(out.size() == 2);
}

TEST_CASE("overlap on a token seen in only one class is removed") {
  const std::vector<PairItem> in{pair("global affairs", "world affairs", true),
                                 pair("big house", "big home", false)};
  CHECK(filter_ppdb(in).empty());
}

TEST_CASE("output passes the checker on random corpora") {
  Rng rng(12);
  const std::vector<std::string> words{"a", "b", "c", "d", "e", "f"};
  for (int corpus = 0; corpus < 200; ++corpus) {
    std::vector<PairItem> in;
    const std::size_t n = 2 + rng.index(30);
    for (std::size_t i = 0; i < n; ++i) {
      std::string a, b;
      for (std::size_t k = 0, len = 1 + rng.index(3); k < len; ++k) a += words[rng.index(6)] + " ";
      for (std::size_t k = 0, len = 1 + rng.index(3); k < len; ++k) b += words[rng.index(6)] + " ";
      in.push_back(pair(a, b, rng.index(2) == 1));
    }
    const auto out = filter_ppdb(in);
    CHECK(constraints_hold(out));
    // Output preserves input order.
    std::size_t cursor = 0;
    for (const auto& p : out) {
      while (cursor < in.size() && in[cursor].a.tokens != p.a.tokens) ++cursor;
      CHECK(cursor < in.size());
    }
  }
}
