#include <charconv>
#include <fstream>

#include "phrasecraft/error.hpp"
#include "phrasecraft/evalsuite.hpp"
#include "tsv.hpp"

namespace phrasecraft {

namespace {

double parse_score(const std::string& text, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("malformed score '" + text + "'", line);
  }
  return v;
}

Phrase field(const std::string& text, std::size_t line) {
  Phrase p = Phrase::from_text(text);
  if (p.empty()) throw ParseError("empty phrase field", line);
  return p;
}

}  // namespace

std::vector<TurneyItem> load_turney(const std::filesystem::path& path, Rng& rng) {
  std::vector<TurneyItem> items;
  detail::for_each_tsv_row(path, 6, [&](const std::vector<std::string>& c, std::size_t line) {
    std::vector<std::size_t> order = {0, 1, 2, 3, 4};
    rng.shuffle(order);
    TurneyItem item;
    item.query = field(c[0], line);
    for (std::size_t slot = 0; slot < 5; ++slot) {
      item.candidates[slot] = field(c[1 + order[slot]], line);
      if (order[slot] == 0) item.gold_index = slot;
    }
    items.push_back(std::move(item));
  });
  return items;
}

std::vector<BirdItem> load_bird(const std::filesystem::path& path) {
  std::vector<BirdItem> items;
  detail::for_each_tsv_row(path, 3, [&](const std::vector<std::string>& c, std::size_t line) {
    const double score = parse_score(c[2], line);
    if (!(score >= 0.0 && score <= 1.0)) throw ParseError("score outside [0, 1]", line);
    items.push_back({field(c[0], line), field(c[1], line), score});
  });
  return items;
}

std::vector<PairItem> load_pairs(const std::filesystem::path& path) {
  std::vector<PairItem> items;
  detail::for_each_tsv_row(path, 3, [&](const std::vector<std::string>& c, std::size_t line) {
    if (c[2] != "0" && c[2] != "1") throw ParseError("label must be 0 or 1", line);
    items.push_back({field(c[0], line), field(c[1], line), c[2] == "1"});
  });
  return items;
}

void save_pairs(std::span<const PairItem> pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& p : pairs) {
    out << p.a.surface << '\t' << p.b.surface << '\t' << (p.positive ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

double eval_turney(std::span<const TurneyItem> items, const PhraseEmbedder& embed, Metric metric) {
  if (items.empty()) throw InvalidArgument("eval_turney: no items");
  std::size_t correct = 0;
  for (const auto& item : items) {
    const auto q = embed(item.query);
    std::size_t best = 0;
    double best_sim = 0.0;
    for (std::size_t i = 0; i < item.candidates.size(); ++i) {
      const double s = similarity(q, embed(item.candidates[i]), metric);
      if (i == 0 || s > best_sim) {
        best = i;
        best_sim = s;
      }
    }
    correct += best == item.gold_index;
  }
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

std::vector<double> bird_similarities(std::span<const BirdItem> items, const PhraseEmbedder& embed,
                                      Metric metric) {
  std::vector<double> sims;
  sims.reserve(items.size());
  for (const auto& item : items) sims.push_back(similarity(embed(item.a), embed(item.b), metric));
  return sims;
}

double eval_bird(std::span<const BirdItem> items, const PhraseEmbedder& embed, Metric metric,
                 Correlation kind) {
  const auto sims = bird_similarities(items, embed, metric);
  std::vector<double> scores;
  scores.reserve(items.size());
  for (const auto& item : items) scores.push_back(item.score);
  return kind == Correlation::Pearson ? pearson(sims, scores) : spearman(sims, scores);
}

}  // namespace phrasecraft
