#include "phrasecraft/composer.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

#include "phrasecraft/config.hpp"
#include "phrasecraft/error.hpp"

namespace phrasecraft {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (start == i) break;
    std::string tok(text.substr(start, i - start));
    if (tok != kMaskToken) {
      for (char& ch : tok) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80) ch = static_cast<char>(std::tolower(c));
      }
    }
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

Phrase Phrase::from_text(std::string_view text) {
  return Phrase{std::string(text), tokenize(text)};
}

Nonlinearity parse_nonlinearity(std::string_view name) {
  if (name == "none") return Nonlinearity::None;
  if (name == "tanh") return Nonlinearity::Tanh;
  throw InvalidArgument("unknown nonlinearity '" + std::string(name) + "'");
}

std::string_view to_string(Nonlinearity n) { return n == Nonlinearity::Tanh ? "tanh" : "none"; }

OovPolicy parse_oov_policy(std::string_view name) {
  if (name == "skip") return OovPolicy::Skip;
  if (name == "zero" || name == "zero-vector") return OovPolicy::Zero;
  throw InvalidArgument("unknown oov policy '" + std::string(name) + "'");
}

std::string_view to_string(OovPolicy p) { return p == OovPolicy::Zero ? "zero-vector" : "skip"; }

void ComposerModel::validate() const {
  if (token_table.rows() != token_vocab.size()) {
    throw InvalidArgument("composer: token table rows do not match vocabulary");
  }
  if (dim() == 0) throw InvalidArgument("composer: dim must be >= 1");
  if (!all_finite(token_table.flat())) throw InvalidArgument("composer: non-finite token table");
  if (projection) {
    if (projection->weight.rows() != dim() || projection->weight.cols() != dim() ||
        projection->bias.size() != dim()) {
      throw InvalidArgument("composer: projection must be dim x dim with a dim bias");
    }
  }
}

std::size_t ComposerModel::parameter_count() const noexcept {
  std::size_t n = token_table.size();
  if (projection) n += projection->weight.size() + projection->bias.size();
  return n;
}

std::vector<double> ComposerModel::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  const auto table = token_table.flat();
  flat.insert(flat.end(), table.begin(), table.end());
  if (projection) {
    const auto w = projection->weight.flat();
    flat.insert(flat.end(), w.begin(), w.end());
    flat.insert(flat.end(), projection->bias.begin(), projection->bias.end());
  }
  return flat;
}

void ComposerModel::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw InvalidArgument("composer: parameter vector has wrong length");
  }
  auto it = flat.begin();
  auto copy = [&it](std::span<double> dst) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
    it += static_cast<std::ptrdiff_t>(dst.size());
  };
  copy(token_table.flat());
  if (projection) {
    copy(projection->weight.flat());
    copy(projection->bias);
  }
}

void ComposerModel::add_projection(Rng& rng, double noise) {
  Projection p{Matrix::identity(dim()), std::vector<double>(dim(), 0.0)};
  for (double& w : p.weight.flat()) w += rng.normal(0.0, noise);
  projection = std::move(p);
}

ComposerModel ComposerModel::from_embeddings(const Embeddings& embeddings) {
  ComposerModel m;
  m.token_vocab = embeddings.vocab;
  m.token_table = embeddings.matrix;
  return m;
}

namespace {

// Table row id per pooled token; nullopt marks a zero-vector OOV token.
struct PooledInputs {
  std::vector<std::optional<std::size_t>> ids;
};

PooledInputs gather(const ComposerModel& model, std::span<const std::string> tokens) {
  PooledInputs in;
  in.ids.reserve(tokens.size());
  for (const auto& tok : tokens) {
    const auto id = model.token_vocab.find(tok);
    if (id) {
      in.ids.emplace_back(*id);
    } else if (model.oov_policy == OovPolicy::Zero) {
      in.ids.emplace_back(std::nullopt);
    }
  }
  return in;
}

// Pre-activation h = W v + b (or v) for one pooled token.
std::vector<double> pre_activation(const ComposerModel& model, std::optional<std::size_t> id) {
  const std::size_t d = model.dim();
  std::vector<double> v(d, 0.0);
  if (id) {
    const auto row = model.token_table.row(*id);
    v.assign(row.begin(), row.end());
  }
  if (!model.projection) return v;
  std::vector<double> h = matvec(model.projection->weight, v);
  for (std::size_t i = 0; i < d; ++i) h[i] += model.projection->bias[i];
  return h;
}

bool any_known(const PooledInputs& in) {
  for (const auto& id : in.ids) {
    if (id) return true;
  }
  return false;
}

}  // namespace

std::vector<double> embed_tokens(const ComposerModel& model, std::span<const std::string> tokens,
                                 bool* oov_only) {
  const std::size_t d = model.dim();
  const PooledInputs in = gather(model, tokens);
  if (oov_only) *oov_only = !any_known(in);
  std::vector<double> out(d, 0.0);
  if (in.ids.empty() || !any_known(in)) return out;
  for (const auto& id : in.ids) {
    auto h = pre_activation(model, id);
    for (std::size_t i = 0; i < d; ++i) {
      out[i] += model.nonlinearity == Nonlinearity::Tanh ? std::tanh(h[i]) : h[i];
    }
  }
  const double n = static_cast<double>(in.ids.size());
  for (double& v : out) v /= n;
  return out;
}

std::vector<double> embed_phrase(const ComposerModel& model, const Phrase& phrase, bool* oov_only) {
  return embed_tokens(model, phrase.tokens, oov_only);
}

std::vector<double> embed_document(const ComposerModel& model, std::span<const std::string> tokens,
                                   std::size_t max_len) {
  if (max_len == 0) throw InvalidArgument("embed_document: max_len must be >= 1");
  return embed_tokens(model, tokens.first(std::min(max_len, tokens.size())));
}

bool ComposerGradient::is_zero() const {
  for (const auto& [id, g] : rows) {
    for (double v : g) {
      if (v != 0.0) return false;
    }
  }
  for (double v : weight.flat()) {
    if (v != 0.0) return false;
  }
  for (double v : bias) {
    if (v != 0.0) return false;
  }
  return true;
}

void ComposerGradient::accumulate_into(std::span<double> flat, const ComposerModel& model) const {
  if (flat.size() != model.parameter_count()) {
    throw InvalidArgument("composer gradient: dense buffer has wrong length");
  }
  const std::size_t d = model.dim();
  for (const auto& [id, g] : rows) {
    for (std::size_t j = 0; j < d; ++j) flat[id * d + j] += g[j];
  }
  if (model.projection && !weight.empty()) {
    const std::size_t off = model.token_table.size();
    const auto w = weight.flat();
    for (std::size_t i = 0; i < w.size(); ++i) flat[off + i] += w[i];
    const std::size_t boff = off + w.size();
    for (std::size_t i = 0; i < bias.size(); ++i) flat[boff + i] += bias[i];
  }
}

void composer_backward(const ComposerModel& model, std::span<const std::string> tokens,
                       std::span<const double> upstream, ComposerGradient& grad) {
  const std::size_t d = model.dim();
  if (upstream.size() != d) throw InvalidArgument("composer_backward: upstream has wrong dim");
  if (model.projection && grad.weight.empty()) {
    grad.weight = Matrix(d, d);
    grad.bias.assign(d, 0.0);
  }
  const PooledInputs in = gather(model, tokens);
  if (in.ids.empty() || !any_known(in)) return;
  const double n = static_cast<double>(in.ids.size());

  std::vector<double> dh(d);
  for (const auto& id : in.ids) {
    const auto h = pre_activation(model, id);
    for (std::size_t i = 0; i < d; ++i) {
      const double g = upstream[i] / n;
      if (model.nonlinearity == Nonlinearity::Tanh) {
        const double y = std::tanh(h[i]);
        dh[i] = g * (1.0 - y * y);
      } else {
        dh[i] = g;
      }
    }
    if (!model.projection) {
      if (!id) continue;
      auto& row = grad.rows[*id];
      row.resize(d, 0.0);
      for (std::size_t i = 0; i < d; ++i) row[i] += dh[i];
      continue;
    }
    const auto& proj = *model.projection;
    std::span<const double> v;
    std::vector<double> zeros;
    if (id) {
      v = model.token_table.row(*id);
    } else {
      zeros.assign(d, 0.0);
      v = zeros;
    }
    for (std::size_t r = 0; r < d; ++r) {
      grad.bias[r] += dh[r];
      for (std::size_t c = 0; c < d; ++c) grad.weight(r, c) += dh[r] * v[c];
    }
    if (!id) continue;
    auto& row = grad.rows[*id];
    row.resize(d, 0.0);
    const auto dv = matvec_transposed(proj.weight, dh);
    for (std::size_t i = 0; i < d; ++i) row[i] += dv[i];
  }
}

ComposerGradient composer_backward(const ComposerModel& model, const Phrase& phrase,
                                   std::span<const double> upstream) {
  ComposerGradient g;
  composer_backward(model, phrase.tokens, upstream, g);
  return g;
}

void save_composer(const ComposerModel& model, const std::filesystem::path& dir) {
  model.validate();
  std::filesystem::create_directories(dir);
  {
    std::ofstream cfg(dir / "model.cfg", std::ios::binary | std::ios::trunc);
    if (!cfg) throw IoError("cannot write " + (dir / "model.cfg").string());
    cfg << "dim = " << model.dim() << '\n'
        << "nonlinearity = " << to_string(model.nonlinearity) << '\n'
        << "oov_policy = " << to_string(model.oov_policy) << '\n'
        << "projection = " << (model.projection ? "yes" : "no") << '\n';
  }
  save_vectors(Embeddings{model.token_vocab, model.token_table}, dir / "table.pvec",
               VectorFormat::PvecText);
  if (model.projection) {
    Embeddings proj;
    proj.matrix = Matrix(0, model.dim());
    for (std::size_t i = 0; i < model.dim(); ++i) {
      proj.vocab.add("proj_row_" + std::to_string(i));
      proj.matrix.append_row(model.projection->weight.row(i));
    }
    proj.vocab.add("bias");
    proj.matrix.append_row(model.projection->bias);
    save_vectors(proj, dir / "projection.pvec", VectorFormat::PvecText);
  }
}

ComposerModel load_composer(const std::filesystem::path& dir) {
  const KeyValues cfg = load_config(dir / "model.cfg");
  auto get = [&](std::string_view key) -> const std::string& {
    const auto it = cfg.find(key);
    if (it == cfg.end()) throw ParseError("model.cfg: missing key '" + std::string(key) + "'");
    return it->second.value;
  };
  Embeddings table = load_vectors(dir / "table.pvec", VectorFormat::PvecText);
  ComposerModel m = ComposerModel::from_embeddings(table);
  m.nonlinearity = parse_nonlinearity(get("nonlinearity"));
  m.oov_policy = parse_oov_policy(get("oov_policy"));
  if (std::to_string(m.dim()) != get("dim")) {
    throw ParseError("model.cfg: dim disagrees with table.pvec");
  }
  if (get("projection") == "yes") {
    Embeddings proj = load_vectors(dir / "projection.pvec", VectorFormat::PvecText);
    const std::size_t d = m.dim();
    if (proj.dim() != d || proj.size() != d + 1) {
      throw ParseError("projection.pvec: expected " + std::to_string(d + 1) + " rows of dim " +
                       std::to_string(d));
    }
    Projection p{Matrix(d, d), std::vector<double>(d)};
    for (std::size_t i = 0; i < d; ++i) {
      const auto row = proj.lookup("proj_row_" + std::to_string(i));
      if (!row) throw ParseError("projection.pvec: missing proj_row_" + std::to_string(i));
      std::copy(row->begin(), row->end(), p.weight.row(i).begin());
    }
    const auto bias = proj.lookup("bias");
    if (!bias) throw ParseError("projection.pvec: missing bias row");
    p.bias.assign(bias->begin(), bias->end());
    m.projection = std::move(p);
  }
  m.validate();
  return m;
}

}  // namespace phrasecraft
