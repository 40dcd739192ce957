#include "paqman/rate_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace paqman {

SnapMode parse_snap_mode(std::string_view text) {
  if (text == "nearest") return SnapMode::nearest;
  if (text == "split") return SnapMode::split;
  throw std::invalid_argument("unknown snap mode: " + std::string(text));
}

std::string_view to_string(SnapMode mode) { return mode == SnapMode::nearest ? "nearest" : "split"; }

RateGrid::RateGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("rate grid is empty");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(points_[i] > 0.0)) throw std::invalid_argument("rate grid points must be positive");
    if (i > 0 && !(points_[i] > points_[i - 1])) {
      throw std::invalid_argument("rate grid must be strictly increasing");
    }
  }
}

RateGrid RateGrid::log_spaced(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw std::invalid_argument("log grid needs 0 < lo < hi and at least two points");
  }
  std::vector<double> pts(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) pts[i] = lo * std::exp(step * static_cast<double>(i));
  pts.front() = lo;
  pts.back() = hi;
  return RateGrid(std::move(pts));
}

std::size_t RateGrid::snap(double value) const {
  if (value <= points_.front()) return 0;
  if (value >= points_.back()) return points_.size() - 1;
  const auto upper = std::upper_bound(points_.begin(), points_.end(), value);
  const std::size_t hi = static_cast<std::size_t>(upper - points_.begin());
  const std::size_t lo = hi - 1;
  const double d_lo = std::log(value / points_[lo]);
  const double d_hi = std::log(points_[hi] / value);
  return d_hi < d_lo ? hi : lo;
}

std::vector<GridWeight> RateGrid::project(double value, SnapMode mode) const {
  if (mode == SnapMode::nearest || value <= points_.front() || value >= points_.back()) {
    return {{snap(value), 1.0}};
  }
  const auto upper = std::upper_bound(points_.begin(), points_.end(), value);
  const std::size_t hi = static_cast<std::size_t>(upper - points_.begin());
  const std::size_t lo = hi - 1;
  const double w_hi = (value - points_[lo]) / (points_[hi] - points_[lo]);
  if (w_hi <= 0.0) return {{lo, 1.0}};
  if (w_hi >= 1.0) return {{hi, 1.0}};
  return {{lo, 1.0 - w_hi}, {hi, w_hi}};
}

}  // namespace paqman
