#include "stablefk/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stablefk/errors.hpp"

namespace stablefk {

Grid::Grid(double half_width, int n) : half_width_(half_width), n_(n) {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) throw DomainError("grid half width must be > 0");
  if (n < 16) throw DomainError("grid needs at least 16 nodes, got " + std::to_string(n));
  spacing_ = 2.0 * half_width / (n - 1);
}

std::vector<double> Grid::nodes() const {
  std::vector<double> x(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) x[static_cast<std::size_t>(i)] = node(i);
  return x;
}

int Grid::nearest(double x) const {
  const auto i = static_cast<long>(std::lround((x + half_width_) / spacing_));
  return static_cast<int>(std::clamp(i, 0L, static_cast<long>(n_ - 1)));
}

double Grid::interpolate(const std::vector<double>& values, double x) const {
  const double r = box_radius();
  if (!(std::abs(x) < r)) return 0.0;
  if (x <= node(0)) return values.front() * (x + r) / (0.5 * spacing_);
  if (x >= node(n_ - 1)) return values.back() * (r - x) / (0.5 * spacing_);
  const double s = (x + half_width_) / spacing_;
  auto i = static_cast<int>(std::floor(s));
  i = std::clamp(i, 0, n_ - 2);
  const double t = s - i;
  return (1.0 - t) * values[static_cast<std::size_t>(i)] + t * values[static_cast<std::size_t>(i + 1)];
}

}  // namespace stablefk
