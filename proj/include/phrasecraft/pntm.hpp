#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phrasecraft/matrix.hpp"
#include "phrasecraft/numcore.hpp"
#include "phrasecraft/vecstore.hpp"

namespace phrasecraft {

// K x d topic matrix R together with a frozen snapshot of its initial value.
class TopicModel {
 public:
  TopicModel() = default;
  explicit TopicModel(Matrix topics);
  TopicModel(Matrix topics, Matrix initial);

  // Rows drawn from N(0, stddev^2).
  static TopicModel random(std::size_t num_topics, std::size_t dim, Rng& rng,
                           double stddev = 0.1);

  Matrix& topics() noexcept { return topics_; }
  const Matrix& topics() const noexcept { return topics_; }
  const Matrix& initial() const noexcept { return initial_; }
  std::size_t num_topics() const noexcept { return topics_.rows(); }
  std::size_t dim() const noexcept { return topics_.cols(); }

 private:
  Matrix topics_;
  Matrix initial_;
};

enum class NegativeTerm {
  // x . z_i, the anchor document against each negative.
  Anchor,
  // x~ . z_i, the reconstruction against each negative.
  Reconstruction,
};

struct PntmConfig {
  std::size_t num_topics = 50;
  std::size_t negatives = 5;
  double ortho_weight = 1.0;
  std::size_t epochs = 300;
  double lr = 1e-2;
  std::size_t batch_size = 32;
  double init_stddev = 0.1;
  NegativeTerm negative_term = NegativeTerm::Anchor;

  void validate() const;
};

// softmax(R x), shifted by the max score for stability.
std::vector<double> topic_distribution(const Matrix& topics, std::span<const double> doc);

// R^T t
std::vector<double> reconstruct(const Matrix& topics, std::span<const double> dist);

// sum_i max(0, 1 - x~ . x + s_i) where s_i is x . z_i (Anchor) or x~ . z_i.
double pntm_loss(std::span<const double> recon, std::span<const double> doc,
                 std::span<const std::vector<double>> negatives,
                 NegativeTerm term = NegativeTerm::Anchor);

// Frobenius norm of R R^T - I.
double orthogonality_penalty(const Matrix& topics);

// Objective for one document, pntm_loss + ortho_weight * penalty, and its
// gradient with respect to R (written to *grad when non-null).
double pntm_objective(const Matrix& topics, std::span<const double> doc,
                      std::span<const std::vector<double>> negatives, double ortho_weight,
                      NegativeTerm term, Matrix* grad = nullptr);

struct PntmHistory {
  std::vector<double> epoch_loss;  // mean reconstruction hinge per document
  std::vector<double> epoch_ortho; // penalty at the end of each epoch
};

struct PntmResult {
  TopicModel model;
  PntmHistory history;
};

// Trains R by Adam on frozen document vectors. Each epoch visits documents in
// a shuffled order and draws `negatives` distinct other documents for each.
PntmResult train_pntm(std::span<const std::vector<double>> docs, const PntmConfig& cfg, Rng& rng);

// argmax of the topic distribution, ties to the lowest id.
std::size_t assign_topic(const Matrix& topics, std::span<const double> doc);

struct TopicDescription {
  std::size_t topic = 0;
  std::vector<std::pair<std::string, double>> items;
};

// R L^T, a K x |V| matrix of inner products.
Matrix topic_scores(const Matrix& topics, const Embeddings& vocab_vectors);

// Top-m vocabulary items per topic by inner product; ties by ascending row id.
std::vector<TopicDescription> interpret_topics(const Matrix& topics, const Embeddings& vocab_vectors,
                                               std::size_t m);

struct IntrusionItem {
  std::size_t topic = 0;
  std::array<std::string, 6> items;
  std::size_t intruder_index = 0;
  std::size_t intruder_topic = 0;
};

// For each topic: its top five items plus one item drawn uniformly from the
// other topics' top tens that is absent from this topic's top fifty,
// shuffled. Topics without an eligible intruder are skipped with a warning.
std::vector<IntrusionItem> make_intrusion_items(std::span<const TopicDescription> descriptions,
                                                Rng& rng,
                                                std::vector<std::string>* warnings = nullptr);

struct CorrespondenceStats {
  double avg_drift = 0.0;     // mean_k |R_k - R_init_k|
  double avg_pairwise = 0.0;  // mean_{k != j} |R_k - R_j|
};

CorrespondenceStats correspondence_stats(const TopicModel& model);

struct Document {
  std::string id;
  std::string text;
};

// One document per line, or JSON lines {"id": ..., "text": ...} when the first
// non-blank line starts with '{'. Plain-text documents get their line number
// as id.
std::vector<Document> load_corpus(const std::filesystem::path& path);

// Model directory: topics.pvec and topics_init.pvec (pvec-text, rows topic_<k>).
void save_topic_model(const TopicModel& model, const std::filesystem::path& dir);
TopicModel load_topic_model(const std::filesystem::path& dir);

// JSON lines: {"topic": k, "items": [[surface, score], ...]}
void save_topic_descriptions(std::span<const TopicDescription> descriptions,
                             const std::filesystem::path& path);
std::vector<TopicDescription> load_topic_descriptions(const std::filesystem::path& path);
std::string topic_description_json(const TopicDescription& description);

}  // namespace phrasecraft
