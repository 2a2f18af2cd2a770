#pragma once

#include <vector>

namespace tiltnet {

// One discrete action index per agent (tilt index per cell).
using JointAction = std::vector<int>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

}  // namespace tiltnet
