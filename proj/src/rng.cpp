#include "wmfield/rng.hpp"

#include <cmath>
#include <numbers>

namespace wmfield {

double NormalSampler::uniform() {
  // Top 53 bits of the engine output; the +1 keeps the value positive so the
  // logarithm below is finite.
  return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double NormalSampler::next() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

Vector NormalSampler::draw(Eigen::Index n) {
  Vector xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi[i] = next();
  return xi;
}

}  // namespace wmfield
