#include <doctest.h>

#include <cmath>

#include "phrasecraft/error.hpp"
#include "phrasecraft/numcore.hpp"

using namespace phrasecraft;

namespace {

// Scalar Adam recurrence written out longhand.
struct ScalarAdam {
  double m = 0, v = 0;
  int t = 0;
  double step(double g, double lr) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1 - std::pow(0.9, t));
    const double vhat = v / (1 - std::pow(0.999, t));
    return -lr * mhat / (std::sqrt(vhat) + 1e-8);
  }
};

}  // namespace

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  std::vector<double> p{1.5, -2.0, 0.25};
  const auto before = p;
  const std::vector<double> g(3, 0.0);
  auto st = OptimState::for_size(3);
  adam_step(p, g, st, 0.1);
  CHECK(p == before);
  CHECK(st.step == 1);
  // Also from a state with non-zero history.
  const std::vector<double> g2{1, 1, 1};
  adam_step(p, g2, st, 0.1);
  const auto mid = p;
  auto st2 = st;
  st2.first_moment.assign(3, 0.0);
  st2.second_moment.assign(3, 0.5);
  adam_step(p, g, st2, 0.1);
  CHECK(p == mid);
}

TEST_CASE("adam: update opposes the gradient") {
  std::vector<double> p{1.0};
  const std::vector<double> g{1.0};
  auto st = OptimState::for_size(1);
  adam_step(p, g, st, 0.1);
  CHECK(p[0] < 1.0);
}

TEST_CASE("adam: two steps match the scalar recurrence") {
  std::vector<double> p{0.3};
  const std::vector<double> g{0.7};
  auto st = OptimState::for_size(1);
  ScalarAdam ref;
  double expected = 0.3;
  for (int i = 0; i < 2; ++i) {
    const double prev = p[0];
    adam_step(p, g, st, 0.05);
    const double delta = ref.step(0.7, 0.05);
    expected += delta;
    CHECK(std::abs((p[0] - prev) - delta) < 1e-12);
  }
  CHECK(std::abs(p[0] - expected) < 1e-12);
}

TEST_CASE("adam: rejects mismatched sizes and negative rates, counts calls") {
  std::vector<double> p{1.0, 2.0};
  const std::vector<double> g{1.0};
  auto st = OptimState::for_size(2);
  CHECK_THROWS_AS(adam_step(p, g, st, 0.1), InvalidArgument);
  const std::vector<double> g2{1.0, 1.0};
  CHECK_THROWS_AS(adam_step(p, g2, st, -1.0), InvalidArgument);
  const auto before = adam_step_count();
  adam_step(p, g2, st, 0.0);
  CHECK(adam_step_count() == before + 1);
}

TEST_CASE("lr schedule: ramp, peak and decay") {
  TrainConfig cfg;
  cfg.base_lr = 1.0;
  const std::size_t total = 100;
  const std::size_t w = warmup_steps(total, cfg);
  CHECK(w == 10);
  CHECK(lr_at(0, total, cfg) == 0.0);
  CHECK(std::abs(lr_at(w, total, cfg) - 1.0) <= 1.0 / w);
  CHECK(lr_at(total - 1, total, cfg) <= 1.0 / (total - w) + 1e-12);
  cfg.lr_hold = true;
  CHECK(lr_at(total - 1, total, cfg) == 1.0);
}

TEST_CASE("lr schedule: continuity up to one-step quantization") {
  for (std::size_t total : {1u, 2u, 7u, 10u, 33u, 100u, 1000u}) {
    for (double frac : {0.0, 0.05, 0.1, 0.5, 1.0}) {
      TrainConfig cfg;
      cfg.base_lr = 2.0;
      cfg.warmup_fraction = frac;
      const double w = static_cast<double>(warmup_steps(total, cfg));
      const double decay = static_cast<double>(total) - w;
      const double bound = cfg.base_lr / std::max(1.0, std::min(w, decay));
      for (std::size_t s = 0; s + 1 < total; ++s) {
        const double a = lr_at(s, total, cfg);
        const double b = lr_at(s + 1, total, cfg);
        CHECK(a >= 0.0);
        CHECK(std::abs(b - a) <= bound + 1e-12);
      }
    }
  }
}

TEST_CASE("finite differences") {
  const LossFn quad = [](std::span<const double> p) {
    double s = 0;
    for (double v : p) s += 0.5 * v * v;
    return s;
  };
  std::vector<double> p{0.3, -1.2, 2.5, 0.01};
  CHECK(finite_diff_check(quad, p, p) < 1e-8);
  std::vector<double> neg;
  for (double v : p) neg.push_back(-v);
  CHECK(finite_diff_check(quad, p, neg) == doctest::Approx(2.0).epsilon(1e-6));
  const std::vector<double> short_grad{1.0};
  CHECK_THROWS(finite_diff_check(quad, p, short_grad));
}

TEST_CASE("rng is reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.index(17) == b.index(17));
  std::vector<int> x{1, 2, 3, 4, 5}, y = x;
  Rng c(7), d(7);
  c.shuffle(x);
  d.shuffle(y);
  CHECK(x == y);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.base_lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.warmup_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
