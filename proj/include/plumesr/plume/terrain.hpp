#pragma once

#include <cstdint>
#include <vector>

#include "plumesr/plume/types.hpp"

namespace plumesr::plume {

/// Terrain elevation (m) over the (y, x) cell centres of the solver grid.
struct TerrainField {
    std::int64_t ny = 0;
    std::int64_t nx = 0;
    double dy = 0.0;
    double dx = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> heights;

    double height(std::int64_t j, std::int64_t i) const {
        return heights[static_cast<std::size_t>(j * nx + i)];
    }
    double max_height() const;
};

/// Smooth procedural relief: randomized Gaussian bumps and elongated ridges,
/// rescaled so the lowest point is 0 and the highest is the configured amplitude.
TerrainField generate_terrain(const SimConfig& config, std::uint64_t seed);

/// Level ground of height zero.
TerrainField flat_terrain(const SimConfig& config);

}  // namespace plumesr::plume
