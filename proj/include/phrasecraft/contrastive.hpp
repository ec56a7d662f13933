#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "phrasecraft/composer.hpp"
#include "phrasecraft/numcore.hpp"
#include "phrasecraft/vecstore.hpp"

namespace phrasecraft {

struct PhraseTriplet {
  Phrase anchor;
  Phrase positive;
  Phrase negative;
};

// Anchor phrase with a masked context it occurred in (positive) and an
// unrelated context (negative). Contexts are token sequences.
struct ContextTriplet {
  Phrase anchor;
  std::vector<std::string> positive_context;
  std::vector<std::string> negative_context;

  // Throws DataError unless the positive context holds exactly one mask
  // token and both contexts fit in kDefaultMaxLen tokens.
  void validate() const;
};

class StopwordSet {
 public:
  StopwordSet() = default;
  explicit StopwordSet(std::set<std::string> words) : words_(std::move(words)) {}

  bool contains(const std::string& token) const { return words_.contains(token); }
  std::size_t size() const noexcept { return words_.size(); }

  static StopwordSet english();
  // One lowercased word per line.
  static StopwordSet load(const std::filesystem::path& path);

 private:
  std::set<std::string> words_;
};

// Replaces one uniformly chosen non-stopword token with a uniformly chosen
// vocabulary entry that differs from it. Throws DataError when every token is
// a stopword, unless `force` is set, in which case any position may be chosen.
Phrase corrupt_phrase(const Phrase& phrase, const Vocab& vocab, const StopwordSet& stopwords,
                      Rng& rng, bool force = false);

// Replaces the first contiguous occurrence of the phrase tokens with a single
// mask token. Throws DataError when the phrase does not occur.
std::vector<std::string> mask_context(std::span<const std::string> context, const Phrase& phrase);

// max(0, margin - |p - neg| + |p - pos|) with L2 distances.
double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin);

struct TripletGradient {
  std::vector<double> anchor;
  std::vector<double> positive;
  std::vector<double> negative;
};

// Subgradient of triplet_loss. All zero when the hinge is inactive; a
// zero-length difference contributes a zero direction.
TripletGradient triplet_loss_backward(std::span<const double> anchor,
                                      std::span<const double> positive,
                                      std::span<const double> negative, double margin);

// Builds phrase triplets whose negative is the corrupted anchor itself.
// Anchors made only of stopwords are skipped (counted in *skipped) unless
// `force` is set.
std::vector<PhraseTriplet> make_raw_negative_triplets(
    const std::vector<std::pair<Phrase, Phrase>>& paraphrases, const Vocab& vocab,
    const StopwordSet& stopwords, Rng& rng, bool force = false, std::size_t* skipped = nullptr);

struct PhraseInContext {
  Phrase phrase;
  std::vector<std::string> context;
};

// Masks each record's context (trimmed to a kDefaultMaxLen window around the
// mask) and pairs it with a negative drawn uniformly from the other records'
// masked contexts that do not contain the anchor phrase. Records with no
// eligible negative, or whose phrase is missing from the context, are skipped.
std::vector<ContextTriplet> make_context_triplets(const std::vector<PhraseInContext>& records,
                                                  Rng& rng, std::size_t* skipped = nullptr);

// `anchor\tpositive\tnegative`
std::vector<PhraseTriplet> load_phrase_triplets(const std::filesystem::path& path);
// `anchor\tpositive` (negatives generated later by corruption)
std::vector<std::pair<Phrase, Phrase>> load_paraphrase_pairs(const std::filesystem::path& path);
// `anchor\tpositive_context\tnegative_context`, contexts space-joined tokens
std::vector<ContextTriplet> load_context_triplets(const std::filesystem::path& path);
void save_phrase_triplets(const std::vector<PhraseTriplet>& triplets,
                          const std::filesystem::path& path);
void save_context_triplets(const std::vector<ContextTriplet>& triplets,
                           const std::filesystem::path& path);

enum class BatchSchedule {
  // Phrase and context batches alternate in proportion to pool sizes.
  Interleaved,
  // All phrase batches of an epoch, then all context batches.
  Sequential,
};

struct TrainingHistory {
  std::vector<double> batch_loss;
  // Fraction of the batch's triplets whose margin held before the update.
  std::vector<double> batch_satisfied;
  // 0 = phrase batch, 1 = context batch.
  std::vector<int> batch_pool;
  std::vector<double> epoch_loss;
  // Fraction of all training triplets satisfied after each epoch.
  std::vector<double> epoch_satisfied;
  std::size_t total_steps = 0;
};

double phrase_triplet_loss(const ComposerModel& model, const PhraseTriplet& t, double margin);
double context_triplet_loss(const ComposerModel& model, const ContextTriplet& t, double margin);

// Fraction of triplets (both pools) with zero hinge loss.
double satisfied_fraction(const ComposerModel& model, std::span<const PhraseTriplet> phrases,
                          std::span<const ContextTriplet> contexts, double margin);

// Mini-batch Adam over both pools with the warm-up/decay schedule of `cfg`.
// Batch loss is the mean triplet loss. Throws NumericError on a non-finite loss.
TrainingHistory train_contrastive(ComposerModel& model, std::span<const PhraseTriplet> phrases,
                                  std::span<const ContextTriplet> contexts, const TrainConfig& cfg,
                                  Rng& rng, BatchSchedule schedule = BatchSchedule::Interleaved);

}  // namespace phrasecraft
