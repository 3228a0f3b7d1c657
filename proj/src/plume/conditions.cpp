#include "plumesr/plume/conditions.hpp"

#include <numeric>

#include "plumesr/error.hpp"
#include "plumesr/random.hpp"

namespace plumesr::plume {

std::vector<WindCondition> sample_conditions(int n, std::uint64_t seed, const ConditionRanges& ranges) {
    if (n <= 0) throw InvalidArgument("sample_conditions needs n >= 1, got " + std::to_string(n));
    Rng rng(seed);
    auto stratified = [&](double lo, double hi) {
        std::vector<std::size_t> strata(static_cast<std::size_t>(n));
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        rng.shuffle(strata);
        std::vector<double> out(strata.size());
        const double width = (hi - lo) / n;
        for (std::size_t i = 0; i < strata.size(); ++i) {
            // Jitter stays strictly inside the stratum so no sample lands on a bin edge.
            const double u = 0.005 + 0.99 * rng.uniform();
            out[i] = lo + width * (static_cast<double>(strata[i]) + u);
        }
        return out;
    };
    const auto speeds = stratified(ranges.speed_min, ranges.speed_max);
    const auto dirs = stratified(ranges.direction_min, ranges.direction_max);
    std::vector<WindCondition> out(speeds.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {speeds[i], dirs[i]};
    return out;
}

}  // namespace plumesr::plume
