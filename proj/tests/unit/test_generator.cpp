#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "plumesr/error.hpp"
#include "plumesr/plume/conditions.hpp"
#include "plumesr/plume/solver.hpp"
#include "plumesr/plume/terrain.hpp"
#include "plumesr/plume/wind.hpp"

using namespace plumesr;
using namespace plumesr::plume;

namespace {

// Stratum index of v in [lo, hi) split into n bins, by brute-force search.
int bin_of(double v, double lo, double hi, int n) {
    for (int k = 0; k < n; ++k) {
        const double a = lo + (hi - lo) * k / n;
        const double b = lo + (hi - lo) * (k + 1) / n;
        if (v >= a && (v < b || (k == n - 1 && v <= b))) return k;
    }
    return -1;
}

VelocityField still_air(const SimConfig& c) {
    VelocityField w;
    w.grid = c.grid_cells;
    w.cell = c.cell_size();
    const auto g = c.grid_cells;
    w.u.assign(static_cast<std::size_t>(g.z * g.y * (g.x + 1)), 0.0);
    w.v.assign(static_cast<std::size_t>(g.z * (g.y + 1) * g.x), 0.0);
    w.w.assign(static_cast<std::size_t>((g.z + 1) * g.y * g.x), 0.0);
    w.solid.assign(static_cast<std::size_t>(g.cells()), 0);
    return w;
}

SourceSpec centre_source(const SimConfig& c) {
    SourceSpec s;
    s.x_release = c.domain_extent_zyx[2] / 2;
    s.y_release = c.domain_extent_zyx[1] / 2;
    return s;
}

}  // namespace

TEST_CASE("latin hypercube puts one sample in every stratum") {
    for (int n : {1, 10, 100}) {
        const auto cs = sample_conditions(n, 42);
        REQUIRE(cs.size() == static_cast<std::size_t>(n));
        std::set<int> speed_bins, dir_bins;
        for (const auto& c : cs) {
            CHECK(c.speed_ms >= 1.5);
            CHECK(c.speed_ms <= 10.0);
            CHECK(c.direction_deg >= 340.0);
            CHECK(c.direction_deg <= 360.0);
            speed_bins.insert(bin_of(c.speed_ms, 1.5, 10.0, n));
            dir_bins.insert(bin_of(c.direction_deg, 340.0, 360.0, n));
        }
        CHECK(speed_bins.size() == static_cast<std::size_t>(n));
        CHECK(dir_bins.size() == static_cast<std::size_t>(n));
        CHECK(*speed_bins.begin() == 0);
    }
}

TEST_CASE("ten samples sorted by speed fall one per 0.85 m/s bin") {
    auto cs = sample_conditions(10, 3);
    std::sort(cs.begin(), cs.end(), [](auto& a, auto& b) { return a.speed_ms < b.speed_ms; });
    for (int k = 0; k < 10; ++k) {
        CHECK(cs[k].speed_ms >= 1.5 + 0.85 * k - 1e-12);
        CHECK(cs[k].speed_ms < 1.5 + 0.85 * (k + 1) + 1e-12);
    }
}

TEST_CASE("sampling is deterministic and rejects n <= 0") {
    CHECK(sample_conditions(25, 9) == sample_conditions(25, 9));
    CHECK(sample_conditions(25, 9) != sample_conditions(25, 10));
    CHECK_THROWS_AS(sample_conditions(0, 1), InvalidArgument);
    CHECK_THROWS_AS(sample_conditions(-3, 1), InvalidArgument);
}

TEST_CASE("terrain generation") {
    auto c = testing::small_sim();
    SUBCASE("zero amplitude is flat") {
        c.terrain.amplitude_m = 0.0;
        const auto t = generate_terrain(c, 5);
        CHECK(std::all_of(t.heights.begin(), t.heights.end(), [](double h) { return h == 0.0; }));
    }
    SUBCASE("deterministic in the seed") {
        const auto a = generate_terrain(c, 1);
        const auto b = generate_terrain(c, 1);
        const auto d = generate_terrain(c, 2);
        CHECK(a.heights == b.heights);
        CHECK(a.heights != d.heights);
    }
    SUBCASE("finite, non-negative, matching the grid, within amplitude") {
        const auto t = generate_terrain(c, 3);
        CHECK(t.ny == c.grid_cells.y);
        CHECK(t.nx == c.grid_cells.x);
        CHECK(t.heights.size() == static_cast<std::size_t>(t.ny * t.nx));
        for (double h : t.heights) {
            CHECK(std::isfinite(h));
            CHECK(h >= 0.0);
            CHECK(h <= c.terrain.amplitude_m + 1e-9);
        }
    }
    SUBCASE("band-limited: no isolated single-cell spikes") {
        const auto t = generate_terrain(c, 4);
        for (std::int64_t j = 1; j + 1 < t.ny; ++j) {
            for (std::int64_t i = 1; i + 1 < t.nx; ++i) {
                const double nb = 0.25 * (t.height(j - 1, i) + t.height(j + 1, i) + t.height(j, i - 1) + t.height(j, i + 1));
                CHECK(std::abs(t.height(j, i) - nb) < 0.25 * c.terrain.amplitude_m);
            }
        }
    }
}

TEST_CASE("wind over flat terrain follows the log profile") {
    const auto c = testing::small_sim();
    const auto flat = flat_terrain(c);
    for (double dir : {360.0, 345.0, 352.5}) {
        const auto w = build_wind_field(flat, {4.0, dir}, c);
        const auto dirv = transport_direction(dir);
        for (std::int64_t k = 0; k < c.grid_cells.z; ++k) {
            const double zc = (k + 0.5) * c.cell_size()[0];
            const double expect = log_profile_speed(zc, 4.0, c.roughness_length, c.reference_height);
            const auto v = w.cell_velocity(k, 10, 10);
            CHECK(std::hypot(v[0], v[1]) == doctest::Approx(expect).epsilon(1e-6));
            CHECK(v[0] == doctest::Approx(expect * dirv[0]).epsilon(1e-6).scale(1.0));
            CHECK(v[1] == doctest::Approx(expect * dirv[1]).epsilon(1e-6).scale(1.0));
        }
    }
    CHECK(log_profile_speed(c.reference_height, 4.0, c.roughness_length, c.reference_height) ==
          doctest::Approx(4.0).epsilon(1e-12));
    const auto north = transport_direction(360.0);
    CHECK(north[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(north[1] == doctest::Approx(-1.0));
}

TEST_CASE("projected wind over hills is divergence free and blocked by terrain") {
    const auto c = testing::small_sim();
    const auto terrain = generate_terrain(c, 8);
    WindBuildReport rep;
    const auto w = build_wind_field(terrain, {6.0, 350.0}, c, &rep);
    CHECK(rep.max_divergence_before > rep.max_divergence_after);
    CHECK(w.max_divergence() < 1e-6 * 6.0 / c.min_cell());
    const auto g = c.grid_cells;
    for (std::int64_t k = 0; k < g.z; ++k)
        for (std::int64_t j = 0; j < g.y; ++j)
            for (std::int64_t i = 0; i < g.x; ++i) {
                if (!w.is_solid(k, j, i)) continue;
                CHECK(w.u_at(k, j, i) == 0.0);
                CHECK(w.u_at(k, j, i + 1) == 0.0);
                CHECK(w.v_at(k, j, i) == 0.0);
                CHECK(w.w_at(k + 1, j, i) == 0.0);
            }
    for (std::int64_t j = 0; j < g.y; ++j)
        for (std::int64_t i = 0; i < g.x; ++i) CHECK(w.w_at(0, j, i) == 0.0);
}

TEST_CASE("still air without diffusion keeps every gram in the source cell") {
    auto c = testing::small_sim();
    c.diffusivity = 0.0;
    const auto flat = flat_terrain(c);
    const auto res = simulate_release(flat, still_air(c), centre_source(c), c);
    const auto cell = c.cell_size();
    const double vol = cell[0] * cell[1] * cell[2];
    const auto [k, j, i] = res.source_cell;
    for (std::int64_t t = 0; t < res.sequence.steps(); ++t) {
        double total = 0.0;
        for (float v : res.sequence.frame(t)) total += v;
        const double in_cell = res.sequence.at(t, k, j, i) * vol;
        CHECK(in_cell == doctest::Approx(1.0 * t * c.dt_output).epsilon(1e-6));
        CHECK(total * vol == doctest::Approx(in_cell).epsilon(1e-6));
    }
}

TEST_CASE("mass balance, positivity and output cadence") {
    const auto c = testing::small_sim();
    const auto terrain = generate_terrain(c, 11);
    const auto cell = c.cell_size();
    const double vol = cell[0] * cell[1] * cell[2];
    for (const auto& cond : sample_conditions(3, 77)) {
        const auto w = build_wind_field(terrain, cond, c);
        const auto res = simulate_release(terrain, w, centre_source(c), c);
        REQUIRE(res.sequence.steps() == c.n_output_steps);
        REQUIRE(res.balance.size() == static_cast<std::size_t>(c.n_output_steps));
        CHECK(res.sequence.dt_output() == c.dt_output);
        CHECK((res.sequence.steps() - 1) * res.sequence.dt_output() >= c.duration());
        const auto sp = w.max_speeds();
        CHECK(std::max({sp[0], sp[1], sp[2]}) * res.dt_solver / c.min_cell() <= 0.9);
        for (std::int64_t t = 0; t < res.sequence.steps(); ++t) {
            double retained = 0.0;
            for (float v : res.sequence.frame(t)) {
                CHECK(v >= 0.0f);
                retained += v;
            }
            const auto& b = res.balance[static_cast<std::size_t>(t)];
            CHECK(b.injected == doctest::Approx(t * c.dt_output).epsilon(1e-9));
            CHECK(retained * vol == doctest::Approx(b.retained).epsilon(1e-5));
            CHECK(b.relative_residual() < 1e-6);
        }
    }
}

TEST_CASE("released mass drifts south-south-east for 5.7 m/s from 350.5 degrees") {
    const auto c = testing::small_sim();
    const auto flat = flat_terrain(c);
    const auto w = build_wind_field(flat, {5.7, 350.5}, c);
    const auto res = simulate_release(flat, w, centre_source(c), c);
    const auto g = c.grid_cells;
    auto centroid = [&](std::int64_t t) {
        double m = 0, x = 0, y = 0;
        for (std::int64_t k = 0; k < g.z; ++k)
            for (std::int64_t j = 0; j < g.y; ++j)
                for (std::int64_t i = 0; i < g.x; ++i) {
                    const double v = res.sequence.at(t, k, j, i);
                    m += v;
                    x += v * i;
                    y += v * j;
                }
        return std::array<double, 2>{x / m, y / m};
    };
    const auto a = centroid(1);
    const auto b = centroid(res.sequence.steps() - 1);
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    CHECK(dy < 0.0);          // southward
    CHECK(dx > 0.0);          // eastward component
    CHECK(-dy > 3.0 * dx);    // mostly south
}

TEST_CASE("solver is deterministic and guards its stability bound") {
    auto c = testing::small_sim();
    const auto terrain = generate_terrain(c, 2);
    const auto w = build_wind_field(terrain, {9.0, 345.0}, c);
    const auto a = simulate_release(terrain, w, centre_source(c), c);
    const auto b = simulate_release(terrain, w, centre_source(c), c);
    CHECK(a.sequence.values() == b.sequence.values());

    c.dt_solver = c.dt_output;
    CHECK_THROWS_AS(simulate_release(terrain, w, centre_source(c), c), InvalidConfig);
    c.dt_solver = 0.0;
    auto outside = centre_source(c);
    outside.x_release = -5.0;
    CHECK_THROWS_AS(simulate_release(terrain, w, outside, c), InvalidConfig);
    auto weak = centre_source(c);
    weak.emission_rate = 0.0;
    CHECK_THROWS_AS(simulate_release(terrain, w, weak, c), InvalidConfig);
}

TEST_CASE("config validation") {
    auto c = testing::small_sim();
    CHECK_NOTHROW(c.validate());
    c.grid_cells.z = 0;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    CHECK_THROWS_AS(WindCondition({12.0, 350.0}).validate(), InvalidArgument);
    CHECK_THROWS_AS(WindCondition({5.0, 300.0}).validate(), InvalidArgument);
}
