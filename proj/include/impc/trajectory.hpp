#pragma once

#include <vector>

#include "impc/dynamics.hpp"

namespace impc {

/// Open-loop trajectory over a horizon N: N + 1 states and N inputs.
struct Trajectory {
  std::vector<StateVec> states;
  std::vector<InputVec> inputs;

  int horizon() const noexcept { return static_cast<int>(inputs.size()); }
  bool consistent() const noexcept {
    return states.size() == inputs.size() + 1;
  }
};

}  // namespace impc
