#pragma once

#include <cstddef>
#include <vector>

#include "paqman/types.hpp"

namespace paqman {

struct Successor {
  std::size_t state;
  double probability;
};

/// Finite semi-Markov decision model: every (state, action) pair has a
/// successor distribution, an immediate reward and an expected sojourn time.
class TransitionModel {
 public:
  virtual ~TransitionModel() = default;

  virtual std::size_t state_count() const = 0;
  virtual std::vector<Successor> successors(std::size_t state, Action action) const = 0;
  virtual double reward(std::size_t state, Action action) const = 0;
  /// Expected time until the next decision epoch, seconds.
  virtual double sojourn(std::size_t state, Action action) const = 0;
};

}  // namespace paqman
