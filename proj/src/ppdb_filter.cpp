#include <algorithm>
#include <map>
#include <set>

#include "phrasecraft/evalsuite.hpp"

namespace phrasecraft {

namespace {

struct Overlap {
  std::size_t count = 0;           // multiset intersection size
  std::set<std::string> types;     // token types shared by a and b
};

Overlap overlap_of(const PairItem& p) {
  std::map<std::string, std::size_t> a_counts;
  for (const auto& t : p.a.tokens) ++a_counts[t];
  Overlap o;
  for (const auto& t : p.b.tokens) {
    auto it = a_counts.find(t);
    if (it != a_counts.end() && it->second > 0) {
      --it->second;
      ++o.count;
      o.types.insert(t);
    }
  }
  return o;
}

}  // namespace

std::vector<PairItem> filter_ppdb(std::span<const PairItem> pairs,
                                  std::vector<std::string>* warnings) {
  std::vector<Overlap> overlaps;
  overlaps.reserve(pairs.size());
  for (const auto& p : pairs) overlaps.push_back(overlap_of(p));
  std::vector<bool> alive(pairs.size(), true);

  bool changed = true;
  while (changed) {
    changed = false;

    // Token coverage: an overlapping type must overlap in the other class too.
    std::set<std::string> pos_types, neg_types;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!alive[i]) continue;
      auto& dst = pairs[i].positive ? pos_types : neg_types;
      dst.insert(overlaps[i].types.begin(), overlaps[i].types.end());
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!alive[i]) continue;
      const auto& other = pairs[i].positive ? neg_types : pos_types;
      for (const auto& t : overlaps[i].types) {
        if (!other.contains(t)) {
          alive[i] = false;
          changed = true;
          break;
        }
      }
    }

    // Count matching, highest overlap first: keep the earliest min(#pos, #neg)
    // pairs of each class at every overlap count.
    std::map<std::size_t, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>,
             std::greater<>>
        by_count;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!alive[i]) continue;
      auto& bucket = by_count[overlaps[i].count];
      (pairs[i].positive ? bucket.first : bucket.second).push_back(i);
    }
    for (auto& [count, bucket] : by_count) {
      auto& [pos, neg] = bucket;
      const std::size_t keep = std::min(pos.size(), neg.size());
      for (auto* side : {&pos, &neg}) {
        for (std::size_t k = keep; k < side->size(); ++k) {
          alive[(*side)[k]] = false;
          changed = true;
        }
      }
    }
  }

  std::vector<PairItem> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (alive[i]) out.push_back(pairs[i]);
  }
  if (out.empty() && warnings) {
    warnings->push_back("filter_ppdb: no pairs could be matched; result is empty");
  }
  return out;
}

}  // namespace phrasecraft
