#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phrasecraft/matrix.hpp"
#include "phrasecraft/numcore.hpp"
#include "phrasecraft/vecstore.hpp"

namespace phrasecraft {

inline constexpr std::size_t kDefaultMaxLen = 120;
inline constexpr std::string_view kMaskToken = "[MASK]";

// Lowercases ASCII letters and splits on whitespace. Non-ASCII bytes and the
// mask token pass through untouched.
std::vector<std::string> tokenize(std::string_view text);

struct Phrase {
  std::string surface;
  std::vector<std::string> tokens;

  static Phrase from_text(std::string_view text);
  bool empty() const noexcept { return tokens.empty(); }
};

enum class Nonlinearity { None, Tanh };
enum class OovPolicy { Skip, Zero };

Nonlinearity parse_nonlinearity(std::string_view name);
std::string_view to_string(Nonlinearity n);
OovPolicy parse_oov_policy(std::string_view name);
std::string_view to_string(OovPolicy p);

struct Projection {
  Matrix weight;  // dim x dim
  std::vector<double> bias;
};

// Mean-pooling phrase encoder: a trainable token table, optionally followed by
// a per-token affine projection. The nonlinearity is applied to each
// token-level output before pooling.
//
// Pooling ignores token order, so "dog bites man" and "man bites dog"
// compose to the same vector.
struct ComposerModel {
  Vocab token_vocab;
  Matrix token_table;
  std::optional<Projection> projection;
  Nonlinearity nonlinearity = Nonlinearity::None;
  OovPolicy oov_policy = OovPolicy::Skip;

  std::size_t dim() const noexcept { return token_table.cols(); }
  void validate() const;

  // Flat parameter layout: token table (row-major), projection weight, bias.
  std::size_t parameter_count() const noexcept;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  // Adds a projection initialised to the identity plus seeded Gaussian noise.
  void add_projection(Rng& rng, double noise = 0.01);

  static ComposerModel from_embeddings(const Embeddings& embeddings);
};

// Mean of per-token outputs. Unknown tokens are dropped (Skip) or read as a
// zero input vector (Zero). When no token is known, returns the zero vector
// and sets *oov_only.
std::vector<double> embed_tokens(const ComposerModel& model, std::span<const std::string> tokens,
                                 bool* oov_only = nullptr);
std::vector<double> embed_phrase(const ComposerModel& model, const Phrase& phrase,
                                 bool* oov_only = nullptr);
// Pools only the first max_len tokens.
std::vector<double> embed_document(const ComposerModel& model, std::span<const std::string> tokens,
                                   std::size_t max_len = kDefaultMaxLen);

// Sparse gradient of (upstream . embed(...)) with respect to the model's
// trainable fields. Only touched table rows carry entries.
struct ComposerGradient {
  std::map<std::size_t, std::vector<double>> rows;
  Matrix weight;
  std::vector<double> bias;

  bool is_zero() const;
  // Adds this record into a dense gradient laid out like ComposerModel::parameters().
  void accumulate_into(std::span<double> flat, const ComposerModel& model) const;
};

// Accumulates into `grad` so that several pooled inputs can share one record.
void composer_backward(const ComposerModel& model, std::span<const std::string> tokens,
                       std::span<const double> upstream, ComposerGradient& grad);
ComposerGradient composer_backward(const ComposerModel& model, const Phrase& phrase,
                                   std::span<const double> upstream);

// Checkpoint directory: model.cfg (key=value), table.pvec and, when a
// projection is present, projection.pvec with rows proj_row_<i> and bias.
void save_composer(const ComposerModel& model, const std::filesystem::path& dir);
ComposerModel load_composer(const std::filesystem::path& dir);

}  // namespace phrasecraft
