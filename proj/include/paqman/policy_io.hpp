#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "paqman/rate_grid.hpp"
#include "paqman/smdp_solver.hpp"

namespace paqman {

/// Solved policy over the (rate, queue) grid of a single-flow model, with
/// the free-form metadata written to the file header.
struct GridPolicy {
  RateGrid grid{std::vector<double>{1.0}};
  int queue_levels = 1;
  PolicyTable table;
  std::map<std::string, std::string> metadata;

  std::size_t index(int queue, std::size_t rate_index) const {
    return rate_index * static_cast<std::size_t>(queue_levels) + static_cast<std::size_t>(queue);
  }
  /// Off-grid rates snap to the nearest grid point in log space and clamp at
  /// the ends; the queue clamps to [0, L].
  Action lookup(int queue, double rate) const;
};

/// CSV with '#'-prefixed header lines (key = value), then columns
/// rate_index, rate_value_pkts_per_s, queue, action, bias.  Doubles use the
/// shortest round-trip representation.
void write_policy_csv(std::ostream& out, const GridPolicy& policy);
GridPolicy read_policy_csv(std::istream& in);

/// Drop map: one row per rate (ascending), one column per queue length,
/// 1 = drop.
void write_heatmap_csv(std::ostream& out, const GridPolicy& policy);

/// Shortest representation that parses back to the same double.
std::string format_double(double x);

}  // namespace paqman
