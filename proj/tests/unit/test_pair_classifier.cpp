#include <doctest.h>

#include <cmath>

#include "phrasecraft/error.hpp"
#include "phrasecraft/evalsuite.hpp"

using namespace phrasecraft;

TEST_CASE("zero classifier predicts class 0") {
  const auto clf = PairClassifier::zeros(3);
  CHECK(clf.input_dim() == 6);
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  const auto l = clf.logits(x);
  CHECK(l[0] == l[1]);
  CHECK(clf.predict(x) == 0);
}

TEST_CASE("parameters round-trip") {
  Rng rng(1);
  auto clf = PairClassifier::random(2, rng);
  auto p = clf.parameters();
  CHECK(p.size() == kPairHiddenWidth * 4 + kPairHiddenWidth + 2 * kPairHiddenWidth + 2);
  p[7] = 42.0;
  clf.set_parameters(p);
  CHECK(clf.parameters() == p);
}

TEST_CASE("loss gradient matches finite differences") {
  Rng rng(2);
  const auto clf = PairClassifier::random(3, rng);
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> x(6);
    for (auto& v : x) v = rng.normal(0, 1);
    inputs.push_back(x);
    labels.push_back(i % 2);
  }
  std::vector<double> grad;
  pair_loss(clf, inputs, labels, &grad);
  const LossFn loss = [&](std::span<const double> p) {
    PairClassifier c = clf;
    c.set_parameters(p);
    return pair_loss(c, inputs, labels);
  };
  CHECK(finite_diff_check(loss, clf.parameters(), grad) < 1e-4);
}

TEST_CASE("separable pairs are learned") {
  // Positives have b = a, negatives have b orthogonal to a.
  Rng rng(3);
  std::map<std::string, std::vector<double>> table;
  std::vector<PairItem> items;
  for (int i = 0; i < 120; ++i) {
    const double th = rng.uniform(0.0, 6.283);
    const std::string a = "a" + std::to_string(i), b = "b" + std::to_string(i);
    table[a] = {std::cos(th), std::sin(th)};
    const bool pos = i % 2 == 0;
    table[b] = pos ? table[a] : std::vector<double>{-std::sin(th), std::cos(th)};
    items.push_back({Phrase::from_text(a), Phrase::from_text(b), pos});
  }
  const PhraseEmbedder embed = [&](const Phrase& p) { return table.at(p.surface); };
  const auto split = split_pairs(items, rng);
  PairTrainConfig cfg;
  cfg.epochs = 60;
  cfg.lr = 3e-3;
  const auto clf = train_pair_classifier(split.train, embed, cfg, rng);
  CHECK(eval_pair_classifier(clf, split.test, embed) == 1.0);
}

TEST_CASE("training needs both classes") {
  std::vector<PairItem> items(4, PairItem{Phrase::from_text("a"), Phrase::from_text("b"), true});
  const PhraseEmbedder embed = [](const Phrase&) { return std::vector<double>{1.0}; };
  Rng rng(4);
  CHECK_THROWS_AS(train_pair_classifier(items, embed, PairTrainConfig{}, rng), InvalidArgument);
}
