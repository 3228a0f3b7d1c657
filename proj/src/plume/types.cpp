#include "plumesr/plume/types.hpp"

#include <algorithm>
#include <cmath>

#include "plumesr/error.hpp"

namespace plumesr::plume {

void WindCondition::validate() const {
    if (!(speed_ms >= 1.5 && speed_ms <= 10.0)) {
        throw InvalidArgument("wind speed " + std::to_string(speed_ms) + " m/s outside [1.5, 10]");
    }
    if (!(direction_deg >= 340.0 && direction_deg <= 360.0)) {
        throw InvalidArgument("wind direction " + std::to_string(direction_deg) + " deg outside [340, 360]");
    }
}

double SimConfig::min_cell() const noexcept {
    const auto c = cell_size();
    return std::min({c[0], c[1], c[2]});
}

void SimConfig::validate() const {
    if (!grid_cells.positive()) throw InvalidConfig("grid_cells must be positive, got " + grid_cells.str());
    for (double e : domain_extent_zyx) {
        if (!(e > 0.0)) throw InvalidConfig("domain extent must be positive");
    }
    if (!(dt_output > 0.0)) throw InvalidConfig("dt_output must be positive");
    if (n_output_steps < 1) throw InvalidConfig("n_output_steps must be >= 1");
    if (dt_solver < 0.0) throw InvalidConfig("dt_solver must be >= 0 (0 = automatic)");
    if (!(diffusivity >= 0.0)) throw InvalidConfig("diffusivity must be >= 0");
    if (decay_halflife < 0.0) throw InvalidConfig("decay_halflife must be >= 0 (0 = disabled)");
    if (!(cfl_limit > 0.0 && cfl_limit <= 1.0)) throw InvalidConfig("cfl_limit must lie in (0, 1]");
    if (!(roughness_length > 0.0 && reference_height > roughness_length)) {
        throw InvalidConfig("need 0 < roughness_length < reference_height");
    }
    if (!(projection_tolerance > 0.0)) throw InvalidConfig("projection_tolerance must be positive");
    if (terrain.amplitude_m < 0.0 || !(terrain.correlation_length_m > 0.0) || terrain.features < 0) {
        throw InvalidConfig("terrain needs amplitude >= 0, correlation length > 0, features >= 0");
    }
    if (terrain.amplitude_m >= domain_extent_zyx[0]) throw InvalidConfig("terrain amplitude exceeds domain height");
}

}  // namespace plumesr::plume
