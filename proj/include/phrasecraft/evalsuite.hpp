#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phrasecraft/composer.hpp"
#include "phrasecraft/matrix.hpp"
#include "phrasecraft/numcore.hpp"
#include "phrasecraft/vecstore.hpp"

namespace phrasecraft {

using PhraseEmbedder = std::function<std::vector<double>(const Phrase&)>;

// ---------------------------------------------------------------------------
// Sequence metrics

// Unit-cost insert/delete/substitute distance over tokens.
std::size_t levenshtein(std::span<const std::string> a, std::span<const std::string> b);
// Same distance over bytes.
std::size_t levenshtein_chars(std::string_view a, std::string_view b);

// Length of the longest contiguous run shared by both sequences.
std::size_t longest_common_substring(std::span<const std::string> a,
                                     std::span<const std::string> b);

// ---------------------------------------------------------------------------
// Statistics

// Sample Pearson r. Throws NumericError when either input is constant.
double pearson(std::span<const double> xs, std::span<const double> ys);
// Pearson over average ranks.
double spearman(std::span<const double> xs, std::span<const double> ys);

// ---------------------------------------------------------------------------
// Benchmarks

struct TurneyItem {
  Phrase query;
  std::array<Phrase, 5> candidates;
  std::size_t gold_index = 0;
};

struct BirdItem {
  Phrase a;
  Phrase b;
  double score = 0.0;
};

struct PairItem {
  Phrase a;
  Phrase b;
  bool positive = false;
};

// `query\tgold\tc1\tc2\tc3\tc4`. Candidates are shuffled with `rng`;
// gold_index follows the gold candidate.
std::vector<TurneyItem> load_turney(const std::filesystem::path& path, Rng& rng);
// `a\tb\tscore`, score in [0, 1].
std::vector<BirdItem> load_bird(const std::filesystem::path& path);
// `a\tb\t{0,1}`
std::vector<PairItem> load_pairs(const std::filesystem::path& path);
void save_pairs(std::span<const PairItem> pairs, const std::filesystem::path& path);

// Fraction of items whose most similar candidate is the gold one. Ties go to
// the lowest candidate index.
double eval_turney(std::span<const TurneyItem> items, const PhraseEmbedder& embed,
                   Metric metric = Metric::Cosine);

std::vector<double> bird_similarities(std::span<const BirdItem> items, const PhraseEmbedder& embed,
                                      Metric metric = Metric::Cosine);

enum class Correlation { Pearson, Spearman };

double eval_bird(std::span<const BirdItem> items, const PhraseEmbedder& embed,
                 Metric metric = Metric::Cosine, Correlation kind = Correlation::Pearson);

// ---------------------------------------------------------------------------
// Paraphrase classification

inline constexpr std::size_t kPairHiddenWidth = 256;

// MLP over the concatenation [emb(a); emb(b)]: ReLU hidden layer of 256
// units, then a 2-way softmax. Class 1 is "paraphrase".
struct PairClassifier {
  Matrix hidden_weight;  // 256 x 2d
  std::vector<double> hidden_bias;
  Matrix output_weight;  // 2 x 256
  std::vector<double> output_bias;

  static PairClassifier zeros(std::size_t embedding_dim);
  static PairClassifier random(std::size_t embedding_dim, Rng& rng);

  std::size_t input_dim() const noexcept { return hidden_weight.cols(); }
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  std::array<double, 2> logits(std::span<const double> input) const;
  // Argmax of the logits, ties to class 0.
  int predict(std::span<const double> input) const;
};

struct PairTrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
};

std::vector<double> pair_input(const PhraseEmbedder& embed, const PairItem& item);

// Mean cross-entropy over the batch; when `grad` is non-null it receives the
// gradient in PairClassifier::parameters() layout.
double pair_loss(const PairClassifier& clf, std::span<const std::vector<double>> inputs,
                 std::span<const int> labels, std::vector<double>* grad = nullptr);

// Throws InvalidArgument unless both classes are present.
PairClassifier train_pair_classifier(std::span<const PairItem> train, const PhraseEmbedder& embed,
                                     const PairTrainConfig& cfg, Rng& rng);
double eval_pair_classifier(const PairClassifier& clf, std::span<const PairItem> test,
                            const PhraseEmbedder& embed);

struct PairSplit {
  std::vector<PairItem> train;
  std::vector<PairItem> dev;
  std::vector<PairItem> test;
};

// Shuffles, then cuts 70/15/15.
PairSplit split_pairs(std::vector<PairItem> items, Rng& rng);

// ---------------------------------------------------------------------------
// PPDB-style lexical-overlap filtering

// Keeps a greedy subset of `pairs` in which (a) positives and negatives can be
// matched one-to-one with equal token-overlap counts and (b) every token type
// that overlaps inside a retained pair of one class also overlaps inside some
// retained pair of the other class. Input order is preserved.
std::vector<PairItem> filter_ppdb(std::span<const PairItem> pairs,
                                  std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Nearest-neighbour lexical diversity

enum class LcsSide { Neighbor, Query };

struct DiversityOptions {
  std::size_t k = 10;
  Metric metric = Metric::Cosine;
  LcsSide lcs_side = LcsSide::Neighbor;
  bool character_levenshtein = false;
  std::size_t threads = 1;
};

struct DiversityReport {
  double pct_new_tokens = 0.0;
  double lcs_precision = 0.0;
  double avg_levenshtein = 0.0;
  std::size_t k = 10;
  std::size_t queries_used = 0;
  std::size_t queries_skipped = 0;
};

// Query vectors come from the vocabulary row when present, otherwise from the
// mean of the rows of the query's tokens; queries with no known token are
// skipped. The query's own row is excluded from its neighbours.
DiversityReport diversity_report(std::span<const Phrase> queries, const Embeddings& embeddings,
                                 const DiversityOptions& options = {});

}  // namespace phrasecraft
