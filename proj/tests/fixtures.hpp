#pragma once

#include <string>

namespace fixture {

// Two-dimensional trigonometric system with three nonzero orders, used to
// compare the recursion with the jet of the time-2pi map.
inline const std::string kTrig2d = R"J({
  "name": "trig2d",
  "n": 2,
  "T": "2*pi",
  "N": 3,
  "F": {
    "1": ["0.7*sin(t)*x1 + 0.4*cos(t)*x2^2 - 0.2*x2", "0.5*cos(2*t)*x1*x2 + 0.3*x2 + 0.1"],
    "2": ["0.6*cos(t)*x1^2*x2 + 0.3*x1", "0.4*sin(t)*x2^3 - 0.5*x1 + 0.2*sin(2*t)"],
    "3": ["0.8*sin(2*t)*x1 + 0.25*x2^2", "0.3*cos(t)*x1*x2^2 - 0.1*x1^3"]
  }
})J";

// Planar first-order system whose average is the radial field
// z' = eps (z (1 - |z|^2) + J z); used for the averaging-closeness sweep.
inline const std::string kPlanarAveraging = R"J({
  "name": "planar-averaging",
  "n": 2,
  "T": "2*pi",
  "N": 1,
  "F": {
    "1": ["2*cos(t)^2*x1*(1-x1^2-x2^2) - x2", "2*sin(t)^2*x2*(1-x1^2-x2^2) + x1"]
  }
})J";

}  // namespace fixture
