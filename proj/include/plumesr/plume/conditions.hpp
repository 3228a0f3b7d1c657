#pragma once

#include <cstdint>
#include <vector>

#include "plumesr/plume/types.hpp"

namespace plumesr::plume {

/// Latin hypercube design over (speed, direction): each of the `n` equal-width
/// strata of both parameters receives exactly one sample. Deterministic in `seed`.
std::vector<WindCondition> sample_conditions(int n, std::uint64_t seed, const ConditionRanges& ranges = {});

}  // namespace plumesr::plume
