#ifndef STABLEFK_GRID_HPP
#define STABLEFK_GRID_HPP

#include <vector>

namespace stablefk {

/// Uniform grid x_i = -L + i h, h = 2L/(n-1), on the truncated line.
/// Node i owns the cell [x_i - h/2, x_i + h/2]; functions vanish outside the
/// union of cells, i.e. on |x| >= L + h/2.
class Grid {
 public:
  Grid(double half_width, int n);

  double half_width() const { return half_width_; }
  int size() const { return n_; }
  double spacing() const { return spacing_; }
  double node(int i) const { return -half_width_ + i * spacing_; }
  /// Right edge of the outermost cell.
  double box_radius() const { return half_width_ + 0.5 * spacing_; }
  std::vector<double> nodes() const;

  /// Index of the node nearest to x (clamped).
  int nearest(double x) const;
  /// Linear interpolation of nodal values; tapers linearly to 0 over the
  /// outer half cells and vanishes outside the box.
  double interpolate(const std::vector<double>& values, double x) const;

 private:
  double half_width_;
  int n_;
  double spacing_;
};

}  // namespace stablefk

#endif  // STABLEFK_GRID_HPP
