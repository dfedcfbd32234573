#pragma once

#include "nh/config.hpp"

#include <array>
#include <string>

namespace fixtures {

inline std::string bundled_config() { return std::string(NH_SOURCE_DIR) + "/configs/cube_market.json"; }

struct ReferencePoint {
  int j;
  int n;
  double alpha;
  double beta;
};

// Reported critical points of the cube example.
inline constexpr std::array<ReferencePoint, 12> kReferencePoints{{
    {0, 1, 4.24124372, 0.10259439},
    {0, 2, 2.48213950, 0.20211387},
    {0, 3, 3.24298830, 0.30501229},
    {1, 1, 0.09529711, 0.09239073},
    {1, 2, 0.11199127, 0.17498149},
    {1, 3, 0.28822644, 0.27963367},
    {3, 1, 0.27955407, 0.09705997},
    {3, 2, 0.22102020, 0.18546039},
    {3, 3, 0.43829429, 0.28779672},
    {4, 1, 1.12332838, 0.10070033},
    {4, 2, 0.70441289, 0.19591782},
    {4, 3, 1.06011854, 0.29795401},
}};

// The reported values are rounded to 8 decimals.
inline constexpr double kReferenceTolerance = 1e-6;

inline nh::RunConfig bundled() { return nh::load_config(bundled_config()); }

}  // namespace fixtures
