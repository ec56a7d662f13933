#include "phrasecraft/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "phrasecraft/error.hpp"
#include "tsv.hpp"

namespace phrasecraft {

namespace {

std::optional<std::size_t> find_run(std::span<const std::string> haystack,
                                    std::span<const std::string> needle) {
  if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + static_cast<std::ptrdiff_t>(i))) {
      return i;
    }
  }
  return std::nullopt;
}

std::string join(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Phrase nonempty_phrase(const std::string& text, std::size_t line_no, const char* what) {
  Phrase p = Phrase::from_text(text);
  if (p.empty()) throw ParseError(std::string("empty ") + what, line_no);
  return p;
}

}  // namespace

void ContextTriplet::validate() const {
  if (anchor.empty()) throw DataError("context triplet: empty anchor");
  const auto masks = std::count(positive_context.begin(), positive_context.end(), kMaskToken);
  if (masks != 1) {
    throw DataError("context triplet: positive context must contain exactly one " +
                    std::string(kMaskToken) + " (found " + std::to_string(masks) + ")");
  }
  if (negative_context.empty()) throw DataError("context triplet: empty negative context");
  if (positive_context.size() > kDefaultMaxLen || negative_context.size() > kDefaultMaxLen) {
    throw DataError("context triplet: contexts must be at most " +
                    std::to_string(kDefaultMaxLen) + " tokens");
  }
}

StopwordSet StopwordSet::english() {
  return StopwordSet({
      "a",       "about",   "above",  "after",   "again",    "against", "all",     "am",
      "an",      "and",     "any",    "are",     "as",       "at",      "be",      "because",
      "been",    "before",  "being",  "below",   "between",  "both",    "but",     "by",
      "can",     "could",   "did",    "do",      "does",     "doing",   "down",    "during",
      "each",    "few",     "for",    "from",    "further",  "had",     "has",     "have",
      "having",  "he",      "her",    "here",    "hers",     "herself", "him",     "himself",
      "his",     "how",     "i",      "if",      "in",       "into",    "is",      "it",
      "its",     "itself",  "just",   "me",      "more",     "most",    "my",      "myself",
      "no",      "nor",     "not",    "now",     "of",       "off",     "on",      "once",
      "only",    "or",      "other",  "our",     "ours",     "ourselves", "out",   "over",
      "own",     "same",    "she",    "should",  "so",       "some",    "such",    "than",
      "that",    "the",     "their",  "theirs",  "them",     "themselves", "then", "there",
      "these",   "they",    "this",   "those",   "through",  "to",      "too",     "under",
      "until",   "up",      "very",   "was",     "we",       "were",    "what",    "when",
      "where",   "which",   "while",  "who",     "whom",     "why",     "will",    "with",
      "would",   "you",     "your",   "yours",   "yourself", "yourselves",
  });
}

StopwordSet StopwordSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& tok : tokenize(line)) words.insert(std::move(tok));
  }
  if (words.empty()) throw DataError("stopword file " + path.string() + " is empty");
  return StopwordSet(std::move(words));
}

Phrase corrupt_phrase(const Phrase& phrase, const Vocab& vocab, const StopwordSet& stopwords,
                      Rng& rng, bool force) {
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < phrase.tokens.size(); ++i) {
    if (!stopwords.contains(phrase.tokens[i])) positions.push_back(i);
  }
  if (positions.empty()) {
    if (!force || phrase.tokens.empty()) {
      throw DataError("cannot corrupt '" + phrase.surface + "': no non-stopword token");
    }
    for (std::size_t i = 0; i < phrase.tokens.size(); ++i) positions.push_back(i);
  }
  const std::size_t pos = positions[rng.index(positions.size())];
  const std::string& original = phrase.tokens[pos];
  const bool original_in_vocab = vocab.contains(original);
  if (vocab.size() == 0 || (vocab.size() == 1 && original_in_vocab)) {
    throw DataError("cannot corrupt '" + phrase.surface + "': vocabulary has no replacement");
  }
  std::string replacement;
  do {
    replacement = vocab.at(rng.index(vocab.size()));
  } while (replacement == original);

  Phrase out = phrase;
  out.tokens[pos] = replacement;
  out.surface = join(out.tokens);
  return out;
}

std::vector<std::string> mask_context(std::span<const std::string> context, const Phrase& phrase) {
  const auto at = find_run(context, phrase.tokens);
  if (!at) throw DataError("phrase '" + phrase.surface + "' does not occur in context");
  std::vector<std::string> out;
  out.reserve(context.size() - phrase.tokens.size() + 1);
  out.insert(out.end(), context.begin(), context.begin() + static_cast<std::ptrdiff_t>(*at));
  out.emplace_back(kMaskToken);
  out.insert(out.end(), context.begin() + static_cast<std::ptrdiff_t>(*at + phrase.tokens.size()),
             context.end());
  return out;
}

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
    throw InvalidArgument("triplet_loss: dimension mismatch");
  }
  if (!(margin >= 0.0)) throw InvalidArgument("triplet_loss: margin must be >= 0");
  return std::max(0.0, margin - l2_distance(anchor, negative) + l2_distance(anchor, positive));
}

TripletGradient triplet_loss_backward(std::span<const double> anchor,
                                      std::span<const double> positive,
                                      std::span<const double> negative, double margin) {
  const std::size_t d = anchor.size();
  TripletGradient g{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0),
                    std::vector<double>(d, 0.0)};
  if (triplet_loss(anchor, positive, negative, margin) <= 0.0) return g;
  const double dpos = l2_distance(anchor, positive);
  const double dneg = l2_distance(anchor, negative);
  for (std::size_t i = 0; i < d; ++i) {
    // d|p - q| / dp = (p - q) / |p - q|
    const double upos = dpos > 0.0 ? (anchor[i] - positive[i]) / dpos : 0.0;
    const double uneg = dneg > 0.0 ? (anchor[i] - negative[i]) / dneg : 0.0;
    g.anchor[i] = upos - uneg;
    g.positive[i] = -upos;
    g.negative[i] = uneg;
  }
  return g;
}

std::vector<PhraseTriplet> make_raw_negative_triplets(
    const std::vector<std::pair<Phrase, Phrase>>& paraphrases, const Vocab& vocab,
    const StopwordSet& stopwords, Rng& rng, bool force, std::size_t* skipped) {
  std::vector<PhraseTriplet> out;
  std::size_t dropped = 0;
  for (const auto& [anchor, positive] : paraphrases) {
    try {
      Phrase neg = corrupt_phrase(anchor, vocab, stopwords, rng, force);
      out.push_back({anchor, positive, std::move(neg)});
    } catch (const DataError&) {
      ++dropped;
    }
  }
  if (skipped) *skipped = dropped;
  return out;
}

std::vector<ContextTriplet> make_context_triplets(const std::vector<PhraseInContext>& records,
                                                  Rng& rng, std::size_t* skipped) {
  std::vector<std::vector<std::string>> masked(records.size());
  std::vector<bool> usable(records.size(), false);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.phrase.empty() || !find_run(r.context, r.phrase.tokens)) continue;
    auto m = mask_context(r.context, r.phrase);
    if (m.size() > kDefaultMaxLen) {
      const std::size_t at = static_cast<std::size_t>(
          std::find(m.begin(), m.end(), kMaskToken) - m.begin());
      const std::size_t half = kDefaultMaxLen / 2;
      const std::size_t start = std::min(at > half ? at - half : 0, m.size() - kDefaultMaxLen);
      m = std::vector<std::string>(m.begin() + static_cast<std::ptrdiff_t>(start),
                                   m.begin() + static_cast<std::ptrdiff_t>(start + kDefaultMaxLen));
    }
    masked[i] = std::move(m);
    usable[i] = true;
  }

  std::vector<ContextTriplet> out;
  std::size_t dropped = 0;
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!usable[i]) {
      ++dropped;
      continue;
    }
    eligible.clear();
    for (std::size_t j = 0; j < records.size(); ++j) {
      if (j == i || !usable[j]) continue;
      if (find_run(masked[j], records[i].phrase.tokens)) continue;
      eligible.push_back(j);
    }
    if (eligible.empty()) {
      ++dropped;
      continue;
    }
    const std::size_t j = eligible[rng.index(eligible.size())];
    out.push_back({records[i].phrase, masked[i], masked[j]});
  }
  if (skipped) *skipped = dropped;
  return out;
}

std::vector<PhraseTriplet> load_phrase_triplets(const std::filesystem::path& path) {
  std::vector<PhraseTriplet> out;
  detail::for_each_tsv_row(path, 3, [&](const std::vector<std::string>& c, std::size_t line) {
    out.push_back({nonempty_phrase(c[0], line, "anchor"), nonempty_phrase(c[1], line, "positive"),
                   nonempty_phrase(c[2], line, "negative")});
  });
  return out;
}

std::vector<std::pair<Phrase, Phrase>> load_paraphrase_pairs(const std::filesystem::path& path) {
  std::vector<std::pair<Phrase, Phrase>> out;
  detail::for_each_tsv_row(path, 2, [&](const std::vector<std::string>& c, std::size_t line) {
    out.emplace_back(nonempty_phrase(c[0], line, "anchor"),
                     nonempty_phrase(c[1], line, "positive"));
  });
  return out;
}

std::vector<ContextTriplet> load_context_triplets(const std::filesystem::path& path) {
  std::vector<ContextTriplet> out;
  detail::for_each_tsv_row(path, 3, [&](const std::vector<std::string>& c, std::size_t line) {
    ContextTriplet t{nonempty_phrase(c[0], line, "anchor"), {}, {}};
    // Contexts keep the literal mask token; tokenize() would lowercase it.
    std::istringstream pos(c[1]);
    std::istringstream neg(c[2]);
    for (std::string tok; pos >> tok;) {
      t.positive_context.push_back(tok == kMaskToken ? tok : tokenize(tok).front());
    }
    for (std::string tok; neg >> tok;) {
      t.negative_context.push_back(tok == kMaskToken ? tok : tokenize(tok).front());
    }
    try {
      t.validate();
    } catch (const DataError& e) {
      throw ParseError(e.what(), line);
    }
    out.push_back(std::move(t));
  });
  return out;
}

void save_phrase_triplets(const std::vector<PhraseTriplet>& triplets,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : triplets) {
    out << join(t.anchor.tokens) << '\t' << join(t.positive.tokens) << '\t'
        << join(t.negative.tokens) << '\n';
  }
}

void save_context_triplets(const std::vector<ContextTriplet>& triplets,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : triplets) {
    out << join(t.anchor.tokens) << '\t' << join(t.positive_context) << '\t'
        << join(t.negative_context) << '\n';
  }
}

double phrase_triplet_loss(const ComposerModel& model, const PhraseTriplet& t, double margin) {
  return triplet_loss(embed_phrase(model, t.anchor), embed_phrase(model, t.positive),
                      embed_phrase(model, t.negative), margin);
}

double context_triplet_loss(const ComposerModel& model, const ContextTriplet& t, double margin) {
  return triplet_loss(embed_phrase(model, t.anchor), embed_document(model, t.positive_context),
                      embed_document(model, t.negative_context), margin);
}

double satisfied_fraction(const ComposerModel& model, std::span<const PhraseTriplet> phrases,
                          std::span<const ContextTriplet> contexts, double margin) {
  const std::size_t total = phrases.size() + contexts.size();
  if (total == 0) return 0.0;
  std::size_t ok = 0;
  for (const auto& t : phrases) ok += phrase_triplet_loss(model, t, margin) == 0.0;
  for (const auto& t : contexts) ok += context_triplet_loss(model, t, margin) == 0.0;
  return static_cast<double>(ok) / static_cast<double>(total);
}

namespace {

struct Batch {
  int pool;  // 0 phrase, 1 context
  std::vector<std::size_t> items;
};

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  }
  return out;
}

std::size_t batch_count(std::size_t n, std::size_t batch_size) {
  return (n + batch_size - 1) / batch_size;
}

std::vector<Batch> epoch_schedule(std::size_t n_phrase, std::size_t n_context,
                                  std::size_t batch_size, BatchSchedule schedule, Rng& rng) {
  auto pb = make_batches(n_phrase, batch_size, rng);
  auto cb = make_batches(n_context, batch_size, rng);
  std::vector<Batch> out;
  out.reserve(pb.size() + cb.size());
  std::size_t i = 0, j = 0;
  while (i < pb.size() || j < cb.size()) {
    bool take_phrase;
    if (j >= cb.size()) {
      take_phrase = true;
    } else if (i >= pb.size()) {
      take_phrase = false;
    } else if (schedule == BatchSchedule::Sequential) {
      take_phrase = true;
    } else {
      // Compare progress fractions (i + 1/2) / |P| and (j + 1/2) / |C|.
      take_phrase = (2 * i + 1) * cb.size() <= (2 * j + 1) * pb.size();
    }
    if (take_phrase) {
      out.push_back({0, std::move(pb[i++])});
    } else {
      out.push_back({1, std::move(cb[j++])});
    }
  }
  return out;
}

void add_scaled(ComposerGradient& total, const ComposerModel& model,
                std::span<const std::string> tokens, std::span<const double> upstream,
                double scale) {
  std::vector<double> g(upstream.begin(), upstream.end());
  for (double& v : g) v *= scale;
  composer_backward(model, tokens, g, total);
}

}  // namespace

TrainingHistory train_contrastive(ComposerModel& model, std::span<const PhraseTriplet> phrases,
                                  std::span<const ContextTriplet> contexts, const TrainConfig& cfg,
                                  Rng& rng, BatchSchedule schedule) {
  cfg.validate();
  model.validate();
  if (phrases.empty() && contexts.empty()) {
    throw InvalidArgument("train_contrastive: need at least one triplet");
  }
  TrainingHistory history;
  const std::size_t per_epoch =
      batch_count(phrases.size(), cfg.batch_size) + batch_count(contexts.size(), cfg.batch_size);
  history.total_steps = per_epoch * cfg.epochs;
  if (cfg.epochs == 0) return history;

  std::vector<double> params = model.parameters();
  OptimState state = OptimState::for_size(params.size());
  std::vector<double> grad(params.size());
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches =
        epoch_schedule(phrases.size(), contexts.size(), cfg.batch_size, schedule, rng);
    double epoch_loss = 0.0;
    for (const auto& batch : batches) {
      ComposerGradient record;
      double loss_sum = 0.0;
      std::size_t satisfied = 0;
      const double scale = 1.0 / static_cast<double>(batch.items.size());
      for (std::size_t idx : batch.items) {
        std::vector<double> a, p, n;
        std::span<const std::string> ta, tp, tn;
        if (batch.pool == 0) {
          const auto& t = phrases[idx];
          ta = t.anchor.tokens;
          tp = t.positive.tokens;
          tn = t.negative.tokens;
          a = embed_tokens(model, ta);
          p = embed_tokens(model, tp);
          n = embed_tokens(model, tn);
        } else {
          const auto& t = contexts[idx];
          ta = t.anchor.tokens;
          tp = std::span<const std::string>(t.positive_context)
                   .first(std::min(kDefaultMaxLen, t.positive_context.size()));
          tn = std::span<const std::string>(t.negative_context)
                   .first(std::min(kDefaultMaxLen, t.negative_context.size()));
          a = embed_tokens(model, ta);
          p = embed_tokens(model, tp);
          n = embed_tokens(model, tn);
        }
        const double loss = triplet_loss(a, p, n, cfg.margin);
        if (!std::isfinite(loss)) {
          const auto& anchor = batch.pool == 0 ? phrases[idx].anchor : contexts[idx].anchor;
          throw NumericError("non-finite loss in batch " + std::to_string(history.batch_loss.size()) +
                             " for triplet " + std::to_string(idx) + " (anchor '" +
                             anchor.surface + "')");
        }
        loss_sum += loss;
        if (loss == 0.0) {
          ++satisfied;
          continue;
        }
        const auto g = triplet_loss_backward(a, p, n, cfg.margin);
        add_scaled(record, model, ta, g.anchor, scale);
        add_scaled(record, model, tp, g.positive, scale);
        add_scaled(record, model, tn, g.negative, scale);
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      record.accumulate_into(grad, model);
      adam_step(params, grad, state, lr_at(step, history.total_steps, cfg));
      model.set_parameters(params);
      ++step;

      const double batch_loss = loss_sum * scale;
      epoch_loss += batch_loss;
      history.batch_loss.push_back(batch_loss);
      history.batch_satisfied.push_back(static_cast<double>(satisfied) * scale);
      history.batch_pool.push_back(batch.pool);
    }
    history.epoch_loss.push_back(epoch_loss / static_cast<double>(batches.size()));
    history.epoch_satisfied.push_back(satisfied_fraction(model, phrases, contexts, cfg.margin));
  }
  return history;
}

}  // namespace phrasecraft
