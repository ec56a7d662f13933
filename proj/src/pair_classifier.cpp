#include <algorithm>
#include <cmath>
#include <numeric>

#include "phrasecraft/error.hpp"
#include "phrasecraft/evalsuite.hpp"

namespace phrasecraft {

PairClassifier PairClassifier::zeros(std::size_t embedding_dim) {
  PairClassifier c;
  c.hidden_weight = Matrix(kPairHiddenWidth, 2 * embedding_dim);
  c.hidden_bias.assign(kPairHiddenWidth, 0.0);
  c.output_weight = Matrix(2, kPairHiddenWidth);
  c.output_bias.assign(2, 0.0);
  return c;
}

PairClassifier PairClassifier::random(std::size_t embedding_dim, Rng& rng) {
  PairClassifier c = zeros(embedding_dim);
  const double s1 = std::sqrt(2.0 / static_cast<double>(2 * embedding_dim));
  const double s2 = std::sqrt(1.0 / static_cast<double>(kPairHiddenWidth));
  for (double& w : c.hidden_weight.flat()) w = rng.normal(0.0, s1);
  for (double& w : c.output_weight.flat()) w = rng.normal(0.0, s2);
  return c;
}

std::vector<double> PairClassifier::parameters() const {
  std::vector<double> flat;
  flat.reserve(hidden_weight.size() + hidden_bias.size() + output_weight.size() + 2);
  for (auto part : {hidden_weight.flat(), std::span<const double>(hidden_bias),
                    output_weight.flat(), std::span<const double>(output_bias)}) {
    flat.insert(flat.end(), part.begin(), part.end());
  }
  return flat;
}

void PairClassifier::set_parameters(std::span<const double> flat) {
  const std::size_t n = hidden_weight.size() + hidden_bias.size() + output_weight.size() +
                        output_bias.size();
  if (flat.size() != n) throw InvalidArgument("PairClassifier: parameter vector has wrong length");
  auto it = flat.begin();
  for (auto part : {hidden_weight.flat(), std::span<double>(hidden_bias), output_weight.flat(),
                    std::span<double>(output_bias)}) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(part.size()), part.begin());
    it += static_cast<std::ptrdiff_t>(part.size());
  }
}

namespace {

struct Forward {
  std::vector<double> pre;     // hidden pre-activation
  std::vector<double> hidden;  // ReLU output
  std::array<double, 2> logits{};
};

Forward forward(const PairClassifier& clf, std::span<const double> input) {
  if (input.size() != clf.input_dim()) {
    throw InvalidArgument("PairClassifier: input has dim " + std::to_string(input.size()) +
                          ", expected " + std::to_string(clf.input_dim()));
  }
  Forward f;
  f.pre = matvec(clf.hidden_weight, input);
  f.hidden.resize(f.pre.size());
  for (std::size_t i = 0; i < f.pre.size(); ++i) {
    f.pre[i] += clf.hidden_bias[i];
    f.hidden[i] = std::max(0.0, f.pre[i]);
  }
  const auto z = matvec(clf.output_weight, f.hidden);
  f.logits = {z[0] + clf.output_bias[0], z[1] + clf.output_bias[1]};
  return f;
}

}  // namespace

std::array<double, 2> PairClassifier::logits(std::span<const double> input) const {
  return forward(*this, input).logits;
}

int PairClassifier::predict(std::span<const double> input) const {
  const auto z = logits(input);
  return z[1] > z[0] ? 1 : 0;
}

std::vector<double> pair_input(const PhraseEmbedder& embed, const PairItem& item) {
  std::vector<double> x = embed(item.a);
  const auto b = embed(item.b);
  x.insert(x.end(), b.begin(), b.end());
  return x;
}

double pair_loss(const PairClassifier& clf, std::span<const std::vector<double>> inputs,
                 std::span<const int> labels, std::vector<double>* grad) {
  if (inputs.size() != labels.size() || inputs.empty()) {
    throw InvalidArgument("pair_loss: inputs and labels must be nonempty and aligned");
  }
  const std::size_t in_dim = clf.input_dim();
  const std::size_t h = kPairHiddenWidth;
  const std::size_t off_hb = h * in_dim;
  const std::size_t off_ow = off_hb + h;
  const std::size_t off_ob = off_ow + 2 * h;
  if (grad) grad->assign(off_ob + 2, 0.0);

  const double scale = 1.0 / static_cast<double>(inputs.size());
  double total = 0.0;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const auto f = forward(clf, inputs[s]);
    const double mx = std::max(f.logits[0], f.logits[1]);
    const double lse = mx + std::log(std::exp(f.logits[0] - mx) + std::exp(f.logits[1] - mx));
    const int y = labels[s];
    total += lse - f.logits[static_cast<std::size_t>(y)];
    if (!grad) continue;

    auto& g = *grad;
    std::array<double, 2> dz{};
    for (std::size_t c = 0; c < 2; ++c) {
      dz[c] = (std::exp(f.logits[c] - lse) - (static_cast<int>(c) == y ? 1.0 : 0.0)) * scale;
      g[off_ob + c] += dz[c];
      for (std::size_t j = 0; j < h; ++j) g[off_ow + c * h + j] += dz[c] * f.hidden[j];
    }
    const auto& x = inputs[s];
    for (std::size_t j = 0; j < h; ++j) {
      if (f.pre[j] <= 0.0) continue;
      const double dh = clf.output_weight(0, j) * dz[0] + clf.output_weight(1, j) * dz[1];
      g[off_hb + j] += dh;
      double* row = g.data() + j * in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) row[i] += dh * x[i];
    }
  }
  return total * scale;
}

PairClassifier train_pair_classifier(std::span<const PairItem> train, const PhraseEmbedder& embed,
                                     const PairTrainConfig& cfg, Rng& rng) {
  const bool has_pos = std::any_of(train.begin(), train.end(), [](auto& p) { return p.positive; });
  const bool has_neg = std::any_of(train.begin(), train.end(), [](auto& p) { return !p.positive; });
  if (!has_pos || !has_neg) {
    throw InvalidArgument("train_pair_classifier: training data must contain both classes");
  }
  if (cfg.batch_size == 0) throw InvalidArgument("train_pair_classifier: batch_size must be >= 1");

  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
  inputs.reserve(train.size());
  for (const auto& p : train) {
    inputs.push_back(pair_input(embed, p));
    labels.push_back(p.positive ? 1 : 0);
  }
  if (inputs.front().size() % 2 != 0 || inputs.front().empty()) {
    throw InvalidArgument("train_pair_classifier: bad embedding dim");
  }
  PairClassifier clf = PairClassifier::random(inputs.front().size() / 2, rng);
  std::vector<double> params = clf.parameters();
  OptimState state = OptimState::for_size(params.size());
  std::vector<double> grad;

  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> batch_x;
  std::vector<int> batch_y;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch_x.clear();
      batch_y.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch_x.push_back(inputs[order[i]]);
        batch_y.push_back(labels[order[i]]);
      }
      const double loss = pair_loss(clf, batch_x, batch_y, &grad);
      if (!std::isfinite(loss)) throw NumericError("pair classifier: non-finite loss");
      adam_step(params, grad, state, cfg.lr);
      clf.set_parameters(params);
    }
  }
  return clf;
}

double eval_pair_classifier(const PairClassifier& clf, std::span<const PairItem> test,
                            const PhraseEmbedder& embed) {
  if (test.empty()) throw InvalidArgument("eval_pair_classifier: no test pairs");
  std::size_t correct = 0;
  for (const auto& p : test) {
    correct += clf.predict(pair_input(embed, p)) == (p.positive ? 1 : 0);
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

PairSplit split_pairs(std::vector<PairItem> items, Rng& rng) {
  rng.shuffle(items);
  const std::size_t n = items.size();
  const std::size_t n_train = n * 70 / 100;
  const std::size_t n_dev = n * 15 / 100;
  PairSplit s;
  auto it = std::make_move_iterator(items.begin());
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  s.dev.assign(it + static_cast<std::ptrdiff_t>(n_train),
               it + static_cast<std::ptrdiff_t>(n_train + n_dev));
  s.test.assign(it + static_cast<std::ptrdiff_t>(n_train + n_dev),
                std::make_move_iterator(items.end()));
  return s;
}

}  // namespace phrasecraft
