#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace phrasecraft {

struct GradcheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t parameters = 0;
};

// Central-difference checks of every hand-derived gradient on small seeded
// random instances: triplet loss, composer with and without a tanh
// projection, composer-through-triplet, pair classifier and the full topic
// model objective.
std::vector<GradcheckResult> run_gradient_suite(std::uint64_t seed, double h = 1e-5);

}  // namespace phrasecraft
