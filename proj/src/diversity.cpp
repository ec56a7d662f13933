#include <array>
#include <algorithm>
#include <set>
#include <thread>

#include "phrasecraft/error.hpp"
#include "phrasecraft/evalsuite.hpp"

namespace phrasecraft {

namespace {

struct QueryStats {
  bool used = false;
  double new_token_ratio = 0.0;
  double lcs_sum = 0.0;
  double lev_sum = 0.0;
  std::size_t pairs = 0;
};

std::optional<std::vector<double>> query_vector(const Phrase& q, const Embeddings& emb,
                                                std::optional<std::string>& own_surface) {
  std::string joined;
  for (const auto& t : q.tokens) joined += (joined.empty() ? "" : " ") + t;
  for (const std::string* s : std::array<const std::string*, 2>{&q.surface, &joined}) {
    if (const auto row = emb.lookup(*s)) {
      own_surface = *s;
      return std::vector<double>(row->begin(), row->end());
    }
  }
  std::vector<double> mean(emb.dim(), 0.0);
  std::size_t n = 0;
  for (const auto& t : q.tokens) {
    if (const auto row = emb.lookup(t)) {
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*row)[i];
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  for (double& v : mean) v /= static_cast<double>(n);
  return mean;
}

QueryStats score_query(const Phrase& q, const Embeddings& emb, const DiversityOptions& opt) {
  QueryStats s;
  if (q.tokens.empty()) return s;
  std::optional<std::string> own;
  const auto vec = query_vector(q, emb, own);
  if (!vec) return s;
  const auto nn = nearest_neighbors(*vec, emb, opt.k, opt.metric,
                                    own ? std::optional<std::string_view>(*own) : std::nullopt,
                                    q.surface);
  const std::set<std::string> query_types(q.tokens.begin(), q.tokens.end());
  std::set<std::string> fresh;
  for (const auto& hit : nn.hits) {
    const auto toks = tokenize(hit.surface);
    for (const auto& t : toks) {
      if (!query_types.contains(t)) fresh.insert(t);
    }
    const double lcs = static_cast<double>(longest_common_substring(q.tokens, toks));
    const std::size_t denom = opt.lcs_side == LcsSide::Neighbor ? toks.size() : q.tokens.size();
    s.lcs_sum += denom ? 100.0 * lcs / static_cast<double>(denom) : 0.0;
    s.lev_sum += static_cast<double>(opt.character_levenshtein
                                         ? levenshtein_chars(q.surface, hit.surface)
                                         : levenshtein(q.tokens, toks));
    ++s.pairs;
  }
  s.new_token_ratio = static_cast<double>(fresh.size()) / static_cast<double>(q.tokens.size());
  s.used = true;
  return s;
}

}  // namespace

DiversityReport diversity_report(std::span<const Phrase> queries, const Embeddings& embeddings,
                                 const DiversityOptions& options) {
  if (queries.empty()) throw InvalidArgument("diversity_report: no queries");
  if (options.k == 0) throw InvalidArgument("diversity_report: k must be >= 1");
  std::vector<QueryStats> stats(queries.size());
  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, queries.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) {
      stats[i] = score_query(queries[i], embeddings, options);
    }
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < queries.size(); i += workers) {
          stats[i] = score_query(queries[i], embeddings, options);
        }
      });
    }
  }

  DiversityReport r;
  r.k = options.k;
  double new_sum = 0.0, lcs_sum = 0.0, lev_sum = 0.0;
  std::size_t pairs = 0;
  for (const auto& s : stats) {
    if (!s.used) {
      ++r.queries_skipped;
      continue;
    }
    ++r.queries_used;
    new_sum += s.new_token_ratio;
    lcs_sum += s.lcs_sum;
    lev_sum += s.lev_sum;
    pairs += s.pairs;
  }
  if (r.queries_used == 0) throw DataError("diversity_report: no query could be embedded");
  r.pct_new_tokens = new_sum / static_cast<double>(r.queries_used);
  if (pairs > 0) {
    r.lcs_precision = lcs_sum / static_cast<double>(pairs);
    r.avg_levenshtein = lev_sum / static_cast<double>(pairs);
  }
  return r;
}

}  // namespace phrasecraft
