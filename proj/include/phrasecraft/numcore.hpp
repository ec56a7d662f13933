#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace phrasecraft {

// Seeded random source. Every stochastic operation takes one of these by
// reference; nothing in the toolkit draws from global randomness.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  double normal(double mean, double stddev);
  double uniform(double lo, double hi);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    // Fisher-Yates driven by index() so the permutation only depends on the engine.
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

struct OptimState {
  std::int64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_stab = 1e-8;

  static OptimState for_size(std::size_t n);
};

// One Adam update with bias correction, in place. lr may be 0 (the first
// step of a warm-up ramp); the moments still advance.
void adam_step(std::span<double> params, std::span<const double> grads, OptimState& state,
               double lr);

// Number of adam_step calls made by this process. Training code routes every
// parameter update through adam_step, so tests can account for updates.
std::uint64_t adam_step_count() noexcept;

struct TrainConfig {
  double base_lr = 2e-5;
  std::size_t batch_size = 16;
  std::size_t epochs = 1;
  double warmup_fraction = 0.10;
  double margin = 1.0;
  std::uint64_t seed = 0;
  // Keep lr at base_lr after warm-up instead of decaying linearly to 0.
  bool lr_hold = false;

  void validate() const;
};

std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& cfg);

// Linear warm-up from 0 to base_lr over ceil(warmup_fraction * total) steps,
// then linear decay reaching 0 at total_steps (or constant when lr_hold).
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg);

using LossFn = std::function<double(std::span<const double>)>;

// Compares `analytic` against central differences of `loss` around `params`.
// Returns the maximum over coordinates of |a - n| / max(|a|, |n|, 1e-8).
double finite_diff_check(const LossFn& loss, std::span<const double> params,
                         std::span<const double> analytic, double h = 1e-5);

}  // namespace phrasecraft
