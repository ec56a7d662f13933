#include <algorithm>
#include <vector>

#include "phrasecraft/evalsuite.hpp"

namespace phrasecraft {

namespace {

template <typename Seq>
std::size_t edit_distance(const Seq& a, const Seq& b) {
  const std::size_t m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

std::size_t levenshtein(std::span<const std::string> a, std::span<const std::string> b) {
  return edit_distance(a, b);
}

std::size_t levenshtein_chars(std::string_view a, std::string_view b) { return edit_distance(a, b); }

std::size_t longest_common_substring(std::span<const std::string> a,
                                     std::span<const std::string> b) {
  // run[j] = length of the common run ending at a[i-1], b[j-1]
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

}  // namespace phrasecraft
