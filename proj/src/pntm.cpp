#include "phrasecraft/pntm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>

#include <json.hpp>

#include "phrasecraft/error.hpp"

namespace phrasecraft {

TopicModel::TopicModel(Matrix topics) : topics_(topics), initial_(std::move(topics)) {}

TopicModel::TopicModel(Matrix topics, Matrix initial)
    : topics_(std::move(topics)), initial_(std::move(initial)) {
  if (topics_.rows() != initial_.rows() || topics_.cols() != initial_.cols()) {
    throw InvalidArgument("TopicModel: initial snapshot has a different shape");
  }
}

TopicModel TopicModel::random(std::size_t num_topics, std::size_t dim, Rng& rng, double stddev) {
  if (num_topics < 2) throw InvalidArgument("TopicModel: need at least 2 topics");
  if (dim == 0) throw InvalidArgument("TopicModel: dim must be >= 1");
  Matrix r(num_topics, dim);
  for (double& v : r.flat()) v = rng.normal(0.0, stddev);
  return TopicModel(std::move(r));
}

void PntmConfig::validate() const {
  if (num_topics < 2) throw InvalidArgument("pntm: need at least 2 topics");
  if (negatives < 1) throw InvalidArgument("pntm: negatives must be >= 1");
  if (!(ortho_weight >= 0.0)) throw InvalidArgument("pntm: ortho weight must be >= 0");
  if (!(lr > 0.0)) throw InvalidArgument("pntm: lr must be > 0");
  if (batch_size == 0) throw InvalidArgument("pntm: batch size must be >= 1");
}

std::vector<double> topic_distribution(const Matrix& topics, std::span<const double> doc) {
  if (!all_finite(doc)) throw InvalidArgument("topic_distribution: non-finite document vector");
  std::vector<double> s = matvec(topics, doc);
  const double mx = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double& v : s) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : s) v /= z;
  return s;
}

std::vector<double> reconstruct(const Matrix& topics, std::span<const double> dist) {
  return matvec_transposed(topics, dist);
}

double pntm_loss(std::span<const double> recon, std::span<const double> doc,
                 std::span<const std::vector<double>> negatives, NegativeTerm term) {
  if (negatives.empty()) throw InvalidArgument("pntm_loss: need at least one negative");
  const double pos = dot(recon, doc);
  double total = 0.0;
  for (const auto& z : negatives) {
    const double neg = term == NegativeTerm::Anchor ? dot(doc, z) : dot(recon, z);
    total += std::max(0.0, 1.0 - pos + neg);
  }
  return total;
}

double orthogonality_penalty(const Matrix& topics) {
  const std::size_t k = topics.rows();
  double sq = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double m = dot(topics.row(i), topics.row(j)) - (i == j ? 1.0 : 0.0);
      sq += m * m;
    }
  }
  return std::sqrt(sq);
}

namespace {

// grad += w * d|R R^T - I|_F / dR = w * 2 (R R^T - I) R / |R R^T - I|_F
void add_ortho_gradient(const Matrix& r, double w, Matrix& grad) {
  const double h = orthogonality_penalty(r);
  if (h == 0.0 || w == 0.0) return;
  const std::size_t k = r.rows();
  const std::size_t d = r.cols();
  Matrix m(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      m(i, j) = dot(r.row(i), r.row(j)) - (i == j ? 1.0 : 0.0);
    }
  }
  const double scale = 2.0 * w / h;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double mij = m(i, j) * scale;
      if (mij == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) grad(i, c) += mij * r(j, c);
    }
  }
}

// Hinge part for one document; accumulates scale * gradient into grad.
double hinge_value_and_gradient(const Matrix& r, std::span<const double> doc,
                                std::span<const std::vector<double>> negatives, NegativeTerm term,
                                double scale, Matrix* grad) {
  const std::size_t k = r.rows();
  const std::size_t d = r.cols();
  const auto t = topic_distribution(r, doc);
  const auto recon = reconstruct(r, t);
  const double loss = pntm_loss(recon, doc, negatives, term);
  if (!grad) return loss;

  // g = dL / d recon
  std::vector<double> g(d, 0.0);
  const double pos = dot(recon, doc);
  for (const auto& z : negatives) {
    const double neg = term == NegativeTerm::Anchor ? dot(doc, z) : dot(recon, z);
    if (1.0 - pos + neg <= 0.0) continue;
    for (std::size_t c = 0; c < d; ++c) {
      g[c] -= doc[c];
      if (term == NegativeTerm::Reconstruction) g[c] += z[c];
    }
  }
  // recon = R^T t: dR += t g^T, dt = R g
  const auto dt = matvec(r, g);
  const double t_dot_dt = dot(t, dt);
  for (std::size_t i = 0; i < k; ++i) {
    // softmax backward, then s = R x: dR += ds x^T
    const double ds = t[i] * (dt[i] - t_dot_dt);
    for (std::size_t c = 0; c < d; ++c) {
      (*grad)(i, c) += scale * (t[i] * g[c] + ds * doc[c]);
    }
  }
  return loss;
}

}  // namespace

double pntm_objective(const Matrix& topics, std::span<const double> doc,
                      std::span<const std::vector<double>> negatives, double ortho_weight,
                      NegativeTerm term, Matrix* grad) {
  if (grad) *grad = Matrix(topics.rows(), topics.cols());
  const double hinge = hinge_value_and_gradient(topics, doc, negatives, term, 1.0, grad);
  if (grad) add_ortho_gradient(topics, ortho_weight, *grad);
  return hinge + ortho_weight * orthogonality_penalty(topics);
}

PntmResult train_pntm(std::span<const std::vector<double>> docs, const PntmConfig& cfg, Rng& rng) {
  cfg.validate();
  if (docs.size() < cfg.negatives + 1) {
    throw InvalidArgument("train_pntm: need at least " + std::to_string(cfg.negatives + 1) +
                          " documents, got " + std::to_string(docs.size()));
  }
  const std::size_t d = docs.front().size();
  for (const auto& x : docs) {
    if (x.size() != d) throw InvalidArgument("train_pntm: documents have different dims");
    if (!all_finite(x)) throw InvalidArgument("train_pntm: non-finite document vector");
  }

  PntmResult result{TopicModel::random(cfg.num_topics, d, rng, cfg.init_stddev), {}};
  Matrix& r = result.model.topics();
  std::vector<double> params(r.flat().begin(), r.flat().end());
  OptimState state = OptimState::for_size(params.size());
  Matrix grad(r.rows(), r.cols());

  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> negs(cfg.negatives);
  std::vector<std::size_t> picked;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(grad.flat().begin(), grad.flat().end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t anchor = order[b];
        picked.clear();
        while (picked.size() < cfg.negatives) {
          // Uniform over the other documents, without repeats.
          std::size_t j = rng.index(docs.size() - 1);
          if (j >= anchor) ++j;
          if (std::find(picked.begin(), picked.end(), j) != picked.end()) continue;
          picked.push_back(j);
        }
        for (std::size_t n = 0; n < picked.size(); ++n) negs[n] = docs[picked[n]];
        const double loss =
            hinge_value_and_gradient(r, docs[anchor], negs, cfg.negative_term, scale, &grad);
        if (!std::isfinite(loss)) {
          throw NumericError("train_pntm: non-finite loss at epoch " + std::to_string(epoch) +
                             ", document " + std::to_string(anchor));
        }
        loss_sum += loss;
      }
      add_ortho_gradient(r, cfg.ortho_weight, grad);
      adam_step(params, grad.flat(), state, cfg.lr);
      std::copy(params.begin(), params.end(), r.flat().begin());
    }
    result.history.epoch_loss.push_back(loss_sum / static_cast<double>(docs.size()));
    result.history.epoch_ortho.push_back(orthogonality_penalty(r));
  }
  return result;
}

std::size_t assign_topic(const Matrix& topics, std::span<const double> doc) {
  const auto t = topic_distribution(topics, doc);
  return static_cast<std::size_t>(std::max_element(t.begin(), t.end()) - t.begin());
}

Matrix topic_scores(const Matrix& topics, const Embeddings& vocab_vectors) {
  if (vocab_vectors.dim() != topics.cols()) {
    throw InvalidArgument("topic_scores: vocabulary vectors have dim " +
                          std::to_string(vocab_vectors.dim()) + ", topics have " +
                          std::to_string(topics.cols()));
  }
  Matrix s(topics.rows(), vocab_vectors.size());
  for (std::size_t k = 0; k < topics.rows(); ++k) {
    for (std::size_t v = 0; v < vocab_vectors.size(); ++v) {
      s(k, v) = dot(topics.row(k), vocab_vectors.matrix.row(v));
    }
  }
  return s;
}

std::vector<TopicDescription> interpret_topics(const Matrix& topics, const Embeddings& vocab_vectors,
                                               std::size_t m) {
  const Matrix scores = topic_scores(topics, vocab_vectors);
  const std::size_t take = std::min(m, vocab_vectors.size());
  std::vector<TopicDescription> out;
  out.reserve(topics.rows());
  std::vector<std::size_t> ids(vocab_vectors.size());
  for (std::size_t k = 0; k < topics.rows(); ++k) {
    std::iota(ids.begin(), ids.end(), 0);
    const auto row = scores.row(k);
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end(),
                      [&](std::size_t a, std::size_t b) {
                        return row[a] > row[b] || (row[a] == row[b] && a < b);
                      });
    TopicDescription desc{k, {}};
    desc.items.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      desc.items.emplace_back(vocab_vectors.vocab.at(ids[i]), row[ids[i]]);
    }
    out.push_back(std::move(desc));
  }
  return out;
}

std::vector<IntrusionItem> make_intrusion_items(std::span<const TopicDescription> descriptions,
                                                Rng& rng, std::vector<std::string>* warnings) {
  std::size_t usable = 0;
  for (const auto& d : descriptions) usable += d.items.size() >= 5;
  if (usable < 2) {
    throw InvalidArgument("make_intrusion_items: need at least 2 topics with 5 or more items");
  }
  std::vector<IntrusionItem> out;
  for (const auto& desc : descriptions) {
    if (desc.items.size() < 5) {
      if (warnings) {
        warnings->push_back("topic " + std::to_string(desc.topic) + ": fewer than 5 items");
      }
      continue;
    }
    std::set<std::string> top50;
    for (std::size_t i = 0; i < std::min<std::size_t>(50, desc.items.size()); ++i) {
      top50.insert(desc.items[i].first);
    }
    std::vector<std::pair<std::size_t, const std::string*>> pool;
    for (const auto& other : descriptions) {
      if (other.topic == desc.topic) continue;
      for (std::size_t i = 0; i < std::min<std::size_t>(10, other.items.size()); ++i) {
        if (!top50.contains(other.items[i].first)) pool.emplace_back(other.topic, &other.items[i].first);
      }
    }
    if (pool.empty()) {
      if (warnings) {
        warnings->push_back("topic " + std::to_string(desc.topic) + ": no eligible intruder");
      }
      continue;
    }
    const auto& [source, word] = pool[rng.index(pool.size())];
    std::vector<std::string> six;
    for (std::size_t i = 0; i < 5; ++i) six.push_back(desc.items[i].first);
    six.push_back(*word);
    std::vector<std::size_t> perm = {0, 1, 2, 3, 4, 5};
    rng.shuffle(perm);
    IntrusionItem item;
    item.topic = desc.topic;
    item.intruder_topic = source;
    for (std::size_t slot = 0; slot < 6; ++slot) {
      item.items[slot] = six[perm[slot]];
      if (perm[slot] == 5) item.intruder_index = slot;
    }
    out.push_back(std::move(item));
  }
  return out;
}

CorrespondenceStats correspondence_stats(const TopicModel& model) {
  const Matrix& r = model.topics();
  const Matrix& r0 = model.initial();
  const std::size_t k = r.rows();
  CorrespondenceStats s;
  if (k == 0) return s;
  for (std::size_t i = 0; i < k; ++i) s.avg_drift += l2_distance(r.row(i), r0.row(i));
  s.avg_drift /= static_cast<double>(k);
  if (k > 1) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (i != j) sum += l2_distance(r.row(i), r.row(j));
      }
    }
    s.avg_pairwise = sum / static_cast<double>(k * (k - 1));
  }
  return s;
}

namespace {

Embeddings as_rows(const Matrix& m) {
  Embeddings e;
  e.matrix = m;
  for (std::size_t i = 0; i < m.rows(); ++i) e.vocab.add("topic_" + std::to_string(i));
  return e;
}

Matrix rows_of(const Embeddings& e, const std::filesystem::path& path) {
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e.vocab.at(i) != "topic_" + std::to_string(i)) {
      throw ParseError(path.string() + ": expected row topic_" + std::to_string(i));
    }
  }
  return e.matrix;
}

}  // namespace

void save_topic_model(const TopicModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_vectors(as_rows(model.topics()), dir / "topics.pvec", VectorFormat::PvecText);
  save_vectors(as_rows(model.initial()), dir / "topics_init.pvec", VectorFormat::PvecText);
}

TopicModel load_topic_model(const std::filesystem::path& dir) {
  const auto cur = dir / "topics.pvec";
  const auto init = dir / "topics_init.pvec";
  return TopicModel(rows_of(load_vectors(cur, VectorFormat::PvecText), cur),
                    rows_of(load_vectors(init, VectorFormat::PvecText), init));
}

std::vector<Document> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  std::optional<bool> jsonl;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (!jsonl) jsonl = line[first] == '{';
    if (!*jsonl) {
      docs.push_back({std::to_string(line_no), line});
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(line);
      const auto& id = j.at("id");
      docs.push_back({id.is_string() ? id.get<std::string>() : id.dump(),
                      j.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("corpus: ") + e.what(), line_no);
    }
  }
  return docs;
}

std::string topic_description_json(const TopicDescription& description) {
  nlohmann::ordered_json items = nlohmann::ordered_json::array();
  for (const auto& [surface, score] : description.items) items.push_back({surface, score});
  nlohmann::ordered_json j;
  j["topic"] = description.topic;
  j["items"] = std::move(items);
  return j.dump();
}

void save_topic_descriptions(std::span<const TopicDescription> descriptions,
                             const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& d : descriptions) out << topic_description_json(d) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<TopicDescription> load_topic_descriptions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<TopicDescription> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TopicDescription d;
      d.topic = j.at("topic").get<std::size_t>();
      for (const auto& item : j.at("items")) {
        d.items.emplace_back(item.at(0).get<std::string>(), item.at(1).get<double>());
      }
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("topic dump: ") + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace phrasecraft
