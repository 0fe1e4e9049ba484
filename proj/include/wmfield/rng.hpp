#pragma once

#include <cstdint>
#include <random>

#include "wmfield/types.hpp"

namespace wmfield {

// Standard-normal generator with a fully specified algorithm (Box-Muller on
// top of mt19937_64), so a given seed yields the same stream on every
// platform and for every worker-thread count.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  double next();
  Vector draw(Eigen::Index n);

 private:
  double uniform();  // in (0, 1]

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Seed of Monte Carlo sample m in a study keyed by base_seed.
inline std::uint64_t sample_seed(std::uint64_t base_seed, std::uint64_t m) {
  return base_seed ^ m;
}

}  // namespace wmfield
