#pragma once

#include <cstdint>

#include "plumesr/data/sequence.hpp"

namespace plumesr::plume {

/// Meteorological wind: `direction_deg` is where the wind blows FROM,
/// clockwise from north (360 = northerly wind, transport toward -y).
struct WindCondition {
    double speed_ms = 5.0;
    double direction_deg = 360.0;

    void validate() const;
    bool operator==(const WindCondition&) const = default;
};

/// Sampling box for wind conditions.
struct ConditionRanges {
    double speed_min = 1.5;
    double speed_max = 10.0;
    double direction_min = 340.0;
    double direction_max = 360.0;
};

struct TerrainConfig {
    double amplitude_m = 600.0;           ///< maximum relief above the lowest point
    double correlation_length_m = 1500.0; ///< typical horizontal feature width
    int features = 24;                    ///< number of bumps plus ridges
};

/// Point release. A negative `z_release` puts the source in the first fluid
/// cell above the terrain at the source column.
struct SourceSpec {
    double x_release = 5000.0;
    double y_release = 5000.0;
    double z_release = -1.0;
    double emission_rate = 1.0;
};

struct SimConfig {
    Vec3 domain_extent_zyx{4000.0, 10000.0, 10000.0};
    Shape3 grid_cells{50, 125, 125};
    double dt_solver = 0.0;  ///< 0 selects the largest stable substep dividing dt_output
    double dt_output = 600.0;
    std::int64_t n_output_steps = 33;
    double diffusivity = 20.0;
    double decay_halflife = 0.0;  ///< seconds; 0 disables decay
    double cfl_limit = 0.9;
    double roughness_length = 0.1;
    double reference_height = 10.0;
    double projection_tolerance = 1.0e-6;  ///< max divergence in units of w_s / min cell size
    TerrainConfig terrain;

    Vec3 cell_size() const noexcept {
        return {domain_extent_zyx[0] / static_cast<double>(grid_cells.z),
                domain_extent_zyx[1] / static_cast<double>(grid_cells.y),
                domain_extent_zyx[2] / static_cast<double>(grid_cells.x)};
    }
    double min_cell() const noexcept;
    double duration() const noexcept { return dt_output * static_cast<double>(n_output_steps - 1); }

    /// Throws InvalidConfig on non-positive grids, steps, or physics.
    void validate() const;
};

}  // namespace plumesr::plume
