#include "pushforward/rng.hpp"

#include <cmath>
#include <numbers>

namespace pf {

std::pair<double, double> Rng::normal_pair() {
  double u1 = uniform_pos();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace pf
