#include "adaptlab/oracles.hpp"

#include <limits>
#include <stdexcept>

namespace adaptlab {

Vector simplex_projection_bruteforce(const Vector& z) {
  const std::size_t n = z.size();
  if (n == 0) {
    throw std::invalid_argument("simplex_projection_bruteforce: empty input");
  }
  if (n > 20) {
    throw std::invalid_argument("simplex_projection_bruteforce: input too long");
  }
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  const std::size_t limit = std::size_t{1} << n;
  for (std::size_t mask = 1; mask < limit; ++mask) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) {
        sum += z[i];
        ++count;
      }
    }
    const double tau = (sum - 1.0) / static_cast<double>(count);
    Vector p(n, 0.0);
    bool feasible = true;
    for (std::size_t i = 0; i < n && feasible; ++i) {
      if (mask & (std::size_t{1} << i)) {
        p[i] = z[i] - tau;
        if (p[i] < 0.0) feasible = false;
      }
    }
    if (!feasible) continue;
    double dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) dist += (p[i] - z[i]) * (p[i] - z[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = std::move(p);
    }
  }
  return best;
}

}  // namespace adaptlab
