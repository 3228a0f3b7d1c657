#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "plumesr/plume/terrain.hpp"
#include "plumesr/plume/types.hpp"

namespace plumesr::plume {

/// Face-centred (MAC) velocity on the solver grid.
///   u: x-faces, shape (nz, ny, nx + 1)
///   v: y-faces, shape (nz, ny + 1, nx)
///   w: z-faces, shape (nz + 1, ny, nx)
/// Cells whose centre lies below the terrain surface are solid; every face
/// touching a solid cell, and the ground face k = 0, carries zero velocity.
struct VelocityField {
    Shape3 grid;
    Vec3 cell;  ///< (dz, dy, dx)
    std::vector<double> u, v, w;
    std::vector<std::uint8_t> solid;

    double& u_at(std::int64_t k, std::int64_t j, std::int64_t i) {
        return u[static_cast<std::size_t>((k * grid.y + j) * (grid.x + 1) + i)];
    }
    double& v_at(std::int64_t k, std::int64_t j, std::int64_t i) {
        return v[static_cast<std::size_t>((k * (grid.y + 1) + j) * grid.x + i)];
    }
    double& w_at(std::int64_t k, std::int64_t j, std::int64_t i) {
        return w[static_cast<std::size_t>((k * grid.y + j) * grid.x + i)];
    }
    double u_at(std::int64_t k, std::int64_t j, std::int64_t i) const {
        return u[static_cast<std::size_t>((k * grid.y + j) * (grid.x + 1) + i)];
    }
    double v_at(std::int64_t k, std::int64_t j, std::int64_t i) const {
        return v[static_cast<std::size_t>((k * (grid.y + 1) + j) * grid.x + i)];
    }
    double w_at(std::int64_t k, std::int64_t j, std::int64_t i) const {
        return w[static_cast<std::size_t>((k * grid.y + j) * grid.x + i)];
    }
    bool is_solid(std::int64_t k, std::int64_t j, std::int64_t i) const {
        return solid[static_cast<std::size_t>((k * grid.y + j) * grid.x + i)] != 0;
    }

    /// Discrete divergence of cell (k, j, i) in 1/s.
    double divergence(std::int64_t k, std::int64_t j, std::int64_t i) const;
    /// Largest |divergence| over fluid cells.
    double max_divergence() const;
    /// Largest |component| over each face family: (max|w|, max|v|, max|u|).
    Vec3 max_speeds() const;
    /// Cell-centred velocity (u, v, w) by averaging the bounding faces.
    std::array<double, 3> cell_velocity(std::int64_t k, std::int64_t j, std::int64_t i) const;
};

/// Neutral log-law speed at `height` above ground, equal to `speed_ref` at `reference_height`.
double log_profile_speed(double height, double speed_ref, double roughness_length, double reference_height);

/// Horizontal unit vector (east, north) of transport for a meteorological direction.
std::array<double, 2> transport_direction(double direction_deg);

struct WindBuildReport {
    double max_divergence_before = 0.0;
    double max_divergence_after = 0.0;
    long solver_iterations = 0;
};

/// Mass-consistent diagnostic wind: terrain-following log profile, then one
/// pressure-like projection removing the discrete divergence. Throws
/// NumericalFailure when the projection does not reach the configured tolerance.
VelocityField build_wind_field(const TerrainField& terrain, const WindCondition& condition, const SimConfig& config,
                               WindBuildReport* report = nullptr);

}  // namespace plumesr::plume
