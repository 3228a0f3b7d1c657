#include "plumesr/plume/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "plumesr/random.hpp"

namespace plumesr::plume {

double TerrainField::max_height() const {
    return heights.empty() ? 0.0 : *std::max_element(heights.begin(), heights.end());
}

TerrainField flat_terrain(const SimConfig& config) {
    config.validate();
    const auto cell = config.cell_size();
    TerrainField t;
    t.ny = config.grid_cells.y;
    t.nx = config.grid_cells.x;
    t.dy = cell[1];
    t.dx = cell[2];
    t.heights.assign(static_cast<std::size_t>(t.ny * t.nx), 0.0);
    return t;
}

namespace {

struct Feature {
    double cx, cy;
    double sigma_along, sigma_across;
    double cos_a, sin_a;
    double amplitude;
};

}  // namespace

TerrainField generate_terrain(const SimConfig& config, std::uint64_t seed) {
    TerrainField t = flat_terrain(config);
    t.seed = seed;
    const auto& tc = config.terrain;
    if (tc.amplitude_m == 0.0 || tc.features == 0) return t;

    Rng rng(mix_seed(seed, 0x7e77a1));
    const double ly = config.domain_extent_zyx[1];
    const double lx = config.domain_extent_zyx[2];
    const double L = tc.correlation_length_m;

    std::vector<Feature> features;
    features.reserve(static_cast<std::size_t>(tc.features));
    for (int f = 0; f < tc.features; ++f) {
        const bool ridge = (f % 3) == 2;
        const double angle = rng.uniform(0.0, std::numbers::pi);
        Feature feat{};
        feat.cx = rng.uniform(-0.1 * lx, 1.1 * lx);
        feat.cy = rng.uniform(-0.1 * ly, 1.1 * ly);
        feat.sigma_across = L * rng.uniform(0.5, 1.2);
        feat.sigma_along = ridge ? L * rng.uniform(2.5, 4.0) : feat.sigma_across * rng.uniform(1.0, 1.5);
        feat.cos_a = std::cos(angle);
        feat.sin_a = std::sin(angle);
        // Occasional negative features carve valleys between the hills.
        feat.amplitude = rng.uniform(0.3, 1.0) * (rng.uniform() < 0.2 ? -0.6 : 1.0);
        features.push_back(feat);
    }

    for (std::int64_t j = 0; j < t.ny; ++j) {
        const double y = (static_cast<double>(j) + 0.5) * t.dy;
        for (std::int64_t i = 0; i < t.nx; ++i) {
            const double x = (static_cast<double>(i) + 0.5) * t.dx;
            double h = 0.0;
            for (const auto& f : features) {
                const double ex = x - f.cx;
                const double ey = y - f.cy;
                const double along = ex * f.cos_a + ey * f.sin_a;
                const double across = -ex * f.sin_a + ey * f.cos_a;
                const double q = along * along / (f.sigma_along * f.sigma_along) +
                                 across * across / (f.sigma_across * f.sigma_across);
                h += f.amplitude * std::exp(-0.5 * q);
            }
            t.heights[static_cast<std::size_t>(j * t.nx + i)] = h;
        }
    }

    const auto [lo_it, hi_it] = std::minmax_element(t.heights.begin(), t.heights.end());
    const double lo = *lo_it;
    const double span = *hi_it - lo;
    for (double& h : t.heights) h = span > 0.0 ? tc.amplitude_m * (h - lo) / span : 0.0;
    return t;
}

}  // namespace plumesr::plume
