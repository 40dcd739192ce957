#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace paqman {

/// How an off-grid rate is mapped back onto the grid.
enum class SnapMode {
  /// Nearest point in log space, ties toward the lower index.
  nearest,
  /// Mass split between the two bracketing points so the mean rate is kept.
  split,
};

SnapMode parse_snap_mode(std::string_view text);
std::string_view to_string(SnapMode mode);

struct GridWeight {
  std::size_t index;
  double weight;
};

/// Strictly increasing set of admissible rate parameters (1/seconds).
class RateGrid {
 public:
  explicit RateGrid(std::vector<double> points);

  /// `count` log-spaced points from `lo` to `hi` inclusive.
  static RateGrid log_spaced(double lo, double hi, std::size_t count);

  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }
  std::span<const double> points() const { return points_; }

  /// Nearest grid index in log space, clamped at both ends.
  std::size_t snap(double value) const;

  /// One or two (index, weight) pairs whose weights sum to 1.
  std::vector<GridWeight> project(double value, SnapMode mode) const;

 private:
  std::vector<double> points_;
};

}  // namespace paqman
