#include "phrasecraft/gradcheck.hpp"

#include <cmath>

#include "phrasecraft/composer.hpp"
#include "phrasecraft/contrastive.hpp"
#include "phrasecraft/evalsuite.hpp"
#include "phrasecraft/numcore.hpp"
#include "phrasecraft/pntm.hpp"

namespace phrasecraft {

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal(0.0, scale);
  return v;
}

ComposerModel random_composer(std::size_t vocab, std::size_t dim, bool projection, Rng& rng) {
  ComposerModel m;
  m.token_table = Matrix(vocab, dim);
  for (std::size_t i = 0; i < vocab; ++i) m.token_vocab.add("w" + std::to_string(i));
  for (double& v : m.token_table.flat()) v = rng.normal(0.0, 0.5);
  if (projection) {
    m.add_projection(rng, 0.3);
    for (double& b : m.projection->bias) b = rng.normal(0.0, 0.1);
    m.nonlinearity = Nonlinearity::Tanh;
  }
  return m;
}

GradcheckResult check_triplet(Rng& rng, double h) {
  const std::size_t d = 8;
  std::vector<double> flat;
  // Resample until the hinge is clearly active so no coordinate sits on a kink.
  do {
    flat = random_vector(3 * d, rng);
  } while (triplet_loss(std::span(flat).subspan(0, d), std::span(flat).subspan(d, d),
                        std::span(flat).subspan(2 * d, d), 1.0) < 1e-2);
  const auto loss = [d](std::span<const double> p) {
    return triplet_loss(p.subspan(0, d), p.subspan(d, d), p.subspan(2 * d, d), 1.0);
  };
  const auto g = triplet_loss_backward(std::span(flat).subspan(0, d),
                                       std::span(flat).subspan(d, d),
                                       std::span(flat).subspan(2 * d, d), 1.0);
  std::vector<double> analytic = g.anchor;
  analytic.insert(analytic.end(), g.positive.begin(), g.positive.end());
  analytic.insert(analytic.end(), g.negative.begin(), g.negative.end());
  return {"triplet_loss", finite_diff_check(loss, flat, analytic, h), flat.size()};
}

GradcheckResult check_composer(Rng& rng, bool projection, double h) {
  ComposerModel model = random_composer(7, 6, projection, rng);
  const Phrase phrase = Phrase::from_text("w1 w3 w3 w5 unknown");
  const auto upstream = random_vector(model.dim(), rng);
  const auto loss = [&model, &phrase, &upstream](std::span<const double> p) {
    ComposerModel m = model;
    m.set_parameters(p);
    return dot(upstream, embed_phrase(m, phrase));
  };
  std::vector<double> analytic(model.parameter_count(), 0.0);
  composer_backward(model, phrase, upstream).accumulate_into(analytic, model);
  return {projection ? "composer_tanh_projection" : "composer_mean_pool",
          finite_diff_check(loss, model.parameters(), analytic, h), analytic.size()};
}

GradcheckResult check_composer_triplet(Rng& rng, double h) {
  ComposerModel model = random_composer(9, 5, true, rng);
  const PhraseTriplet t{Phrase::from_text("w0 w1"), Phrase::from_text("w2 w3 w4"),
                        Phrase::from_text("w5 w1 w8")};
  const double margin = 4.0;  // keeps the hinge active on the random model
  const auto loss = [&](std::span<const double> p) {
    ComposerModel m = model;
    m.set_parameters(p);
    return phrase_triplet_loss(m, t, margin);
  };
  const auto a = embed_phrase(model, t.anchor);
  const auto pos = embed_phrase(model, t.positive);
  const auto neg = embed_phrase(model, t.negative);
  const auto g = triplet_loss_backward(a, pos, neg, margin);
  ComposerGradient record;
  composer_backward(model, t.anchor.tokens, g.anchor, record);
  composer_backward(model, t.positive.tokens, g.positive, record);
  composer_backward(model, t.negative.tokens, g.negative, record);
  std::vector<double> analytic(model.parameter_count(), 0.0);
  record.accumulate_into(analytic, model);
  return {"composer_triplet", finite_diff_check(loss, model.parameters(), analytic, h),
          analytic.size()};
}

GradcheckResult check_pair_classifier(Rng& rng, double h) {
  const std::size_t d = 4;
  PairClassifier clf = PairClassifier::random(d, rng);
  for (double& b : clf.hidden_bias) b = rng.normal(0.0, 0.1);
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    inputs.push_back(random_vector(2 * d, rng));
    labels.push_back(i % 2);
  }
  const auto loss = [&](std::span<const double> p) {
    PairClassifier c = clf;
    c.set_parameters(p);
    return pair_loss(c, inputs, labels);
  };
  std::vector<double> analytic;
  pair_loss(clf, inputs, labels, &analytic);
  return {"pair_classifier", finite_diff_check(loss, clf.parameters(), analytic, h),
          analytic.size()};
}

GradcheckResult check_pntm(Rng& rng, NegativeTerm term, double h) {
  const std::size_t k = 4, d = 6, n = 5;
  Matrix r;
  std::vector<double> doc;
  std::vector<std::vector<double>> negs(n);
  // Redraw until every hinge is away from its kink.
  while (true) {
    r = Matrix(k, d);
    for (double& v : r.flat()) v = rng.normal(0.0, 0.5);
    doc = random_vector(d, rng);
    for (auto& z : negs) z = random_vector(d, rng, 0.5);
    const auto recon = reconstruct(r, topic_distribution(r, doc));
    bool clear = true;
    for (const auto& z : negs) {
      const double s = term == NegativeTerm::Anchor ? dot(doc, z) : dot(recon, z);
      clear = clear && std::abs(1.0 - dot(recon, doc) + s) > 1e-2;
    }
    if (clear) break;
  }
  const double lambda = 1.0;
  const auto loss = [&](std::span<const double> p) {
    Matrix m(k, d);
    std::copy(p.begin(), p.end(), m.flat().begin());
    return pntm_objective(m, doc, negs, lambda, term);
  };
  Matrix grad;
  pntm_objective(r, doc, negs, lambda, term, &grad);
  return {term == NegativeTerm::Anchor ? "pntm_objective" : "pntm_objective_recon_negatives",
          finite_diff_check(loss, r.flat(), grad.flat(), h), r.size()};
}

}  // namespace

std::vector<GradcheckResult> run_gradient_suite(std::uint64_t seed, double h) {
  Rng rng(seed);
  std::vector<GradcheckResult> out;
  out.push_back(check_triplet(rng, h));
  out.push_back(check_composer(rng, false, h));
  out.push_back(check_composer(rng, true, h));
  out.push_back(check_composer_triplet(rng, h));
  out.push_back(check_pair_classifier(rng, h));
  out.push_back(check_pntm(rng, NegativeTerm::Anchor, h));
  out.push_back(check_pntm(rng, NegativeTerm::Reconstruction, h));
  return out;
}

}  // namespace phrasecraft
