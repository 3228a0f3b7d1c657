#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "plumesr/data/sequence.hpp"
#include "plumesr/plume/terrain.hpp"
#include "plumesr/plume/types.hpp"
#include "plumesr/plume/wind.hpp"

namespace plumesr::plume {

/// Cumulative mass bookkeeping at one output step (mass units, not concentration).
struct MassBalance {
    double injected = 0.0;
    double retained = 0.0;
    double outflow = 0.0;
    double decayed = 0.0;

    double residual() const noexcept { return injected - retained - outflow - decayed; }
    double relative_residual() const noexcept {
        return injected > 0.0 ? std::abs(residual()) / injected : std::abs(residual());
    }
};

struct SimulationResult {
    ConcentrationSequence sequence;
    std::vector<MassBalance> balance;  ///< one entry per output frame
    double dt_solver = 0.0;
    std::int64_t substeps_per_output = 0;
    std::array<std::int64_t, 3> source_cell{};  ///< (k, j, i)
};

/// Largest explicit substep keeping the donor-cell scheme positive:
///   dt * (max|u|/dx + max|v|/dy + max|w|/dz + 2K(1/dx^2 + 1/dy^2 + 1/dz^2)) <= cfl_limit.
double stable_substep(const VelocityField& wind, const SimConfig& config);

/// Continuous point release advected by `wind` with a donor-cell finite-volume
/// scheme and centred eddy diffusion. Ground and terrain faces are zero-flux;
/// lateral and top boundaries are open (upwind outflow, zero-concentration inflow).
/// Mass balance is verified at every output step to 1e-6 relative.
SimulationResult simulate_release(const TerrainField& terrain, const VelocityField& wind, const SourceSpec& source,
                                  const SimConfig& config);

}  // namespace plumesr::plume
