#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phrasecraft/matrix.hpp"

namespace phrasecraft {

// Ordered set of unique surface forms (words and multi-word phrases) and the
// inverse index from surface form to row id.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> entries);

  // Appends a new surface form and returns its id. Throws InvalidArgument on
  // duplicates, empty strings, or strings containing tab or newline.
  std::size_t add(std::string surface);

  std::optional<std::size_t> find(std::string_view surface) const;
  bool contains(std::string_view surface) const { return find(surface).has_value(); }

  const std::string& at(std::size_t id) const { return entries_.at(id); }
  const std::vector<std::string>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  static bool valid_surface(std::string_view surface);

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// The |V| x d matrix L paired with its vocabulary.
struct Embeddings {
  Vocab vocab;
  Matrix matrix;

  std::size_t dim() const noexcept { return matrix.cols(); }
  std::size_t size() const noexcept { return vocab.size(); }
  std::optional<std::span<const double>> lookup(std::string_view surface) const;
  // Checks the pairing invariants: row count, dim >= 1, finiteness.
  void validate() const;
};

enum class VectorFormat { PvecText, PvecBin, Glove };

VectorFormat parse_vector_format(std::string_view name);
std::string_view to_string(VectorFormat format);

// Sniffs the first bytes: "PVB1" -> binary, "<int> <int>" header -> text,
// anything else -> glove-style word vectors.
VectorFormat detect_vector_format(const std::filesystem::path& path);

// Loads a vector file. pvec-text and pvec-bin follow the toolkit formats;
// Glove reads classic "word v1 ... vd" lines (optionally with a word2vec
// "count dim" header), keeping the first of any duplicated word.
Embeddings load_vectors(const std::filesystem::path& path, VectorFormat format);
Embeddings load_vectors(const std::filesystem::path& path);

void save_vectors(const Embeddings& embeddings, const std::filesystem::path& path,
                  VectorFormat format);

enum class Metric { Cosine, L2 };

Metric parse_metric(std::string_view name);
std::string_view to_string(Metric metric);

// a.b / (|a| |b|), or 0 when either norm is 0.
double cosine(std::span<const double> a, std::span<const double> b);

// Similarity under a metric; higher is closer. For L2 this is -distance.
double similarity(std::span<const double> a, std::span<const double> b, Metric metric);

struct Neighbor {
  std::string surface;
  std::size_t id = 0;
  // Cosine similarity (descending) or L2 distance (ascending).
  double score = 0.0;
};

struct NeighborList {
  std::string query;
  Metric metric = Metric::Cosine;
  std::vector<Neighbor> hits;
};

// Exact top-k. Ties go to the lower row id; `exclude` is removed before
// ranking. k larger than the candidate count returns every candidate.
NeighborList nearest_neighbors(std::span<const double> query, const Embeddings& embeddings,
                               std::size_t k, Metric metric = Metric::Cosine,
                               std::optional<std::string_view> exclude = std::nullopt,
                               std::string query_label = {});

}  // namespace phrasecraft
