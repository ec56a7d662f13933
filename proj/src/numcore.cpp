#include "phrasecraft/numcore.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "phrasecraft/error.hpp"

namespace phrasecraft {

namespace {
std::atomic<std::uint64_t> g_adam_steps{0};
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw InvalidArgument("Rng::index: empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

double Rng::normal(double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(engine_);
}

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

OptimState OptimState::for_size(std::size_t n) {
  OptimState s;
  s.first_moment.assign(n, 0.0);
  s.second_moment.assign(n, 0.0);
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads, OptimState& state,
               double lr) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw InvalidArgument("adam_step: length mismatch (params " + std::to_string(n) +
                          ", grads " + std::to_string(grads.size()) + ", moments " +
                          std::to_string(state.first_moment.size()) + "/" +
                          std::to_string(state.second_moment.size()) + ")");
  }
  if (!(lr >= 0.0)) throw InvalidArgument("adam_step: lr must be >= 0");

  state.step += 1;
  g_adam_steps.fetch_add(1, std::memory_order_relaxed);
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto& m = state.first_moment;
  auto& v = state.second_moment;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
    v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps_stab);
  }
}

std::uint64_t adam_step_count() noexcept { return g_adam_steps.load(std::memory_order_relaxed); }

void TrainConfig::validate() const {
  if (!(base_lr > 0.0)) throw InvalidArgument("base_lr must be > 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) {
    throw InvalidArgument("warmup_fraction must lie in [0, 1]");
  }
  if (!(margin >= 0.0)) throw InvalidArgument("margin must be >= 0");
  if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
}

std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& cfg) {
  const double w = std::ceil(cfg.warmup_fraction * static_cast<double>(total_steps));
  return std::min(total_steps, static_cast<std::size_t>(w));
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
  if (total_steps == 0) throw InvalidArgument("lr_at: total_steps must be > 0");
  if (step >= total_steps) throw InvalidArgument("lr_at: step out of range");
  const std::size_t warm = warmup_steps(total_steps, cfg);
  if (step < warm) {
    return cfg.base_lr * static_cast<double>(step) / static_cast<double>(warm);
  }
  if (cfg.lr_hold) return cfg.base_lr;
  const std::size_t decay = total_steps - warm;
  return cfg.base_lr * static_cast<double>(total_steps - step) / static_cast<double>(decay);
}

double finite_diff_check(const LossFn& loss, std::span<const double> params,
                         std::span<const double> analytic, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_check: h must be > 0");
  if (analytic.size() != params.size()) {
    throw InvalidArgument("finite_diff_check: analytic gradient has wrong length");
  }
  std::vector<double> p(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + h;
    const double up = loss(p);
    p[i] = orig - h;
    const double down = loss(p);
    p[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_check: non-finite loss at coordinate " + std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace phrasecraft
