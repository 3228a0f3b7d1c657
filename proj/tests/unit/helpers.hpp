#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "plumesr/data/sequence.hpp"
#include "plumesr/plume/types.hpp"

namespace testing {

/// Small solver setup that runs in well under a second.
inline plumesr::plume::SimConfig small_sim() {
    plumesr::plume::SimConfig c;
    c.domain_extent_zyx = {1000.0, 2000.0, 2000.0};
    c.grid_cells = {10, 20, 20};
    c.dt_output = 60.0;
    c.n_output_steps = 5;
    c.diffusivity = 10.0;
    c.terrain.amplitude_m = 200.0;
    c.terrain.correlation_length_m = 500.0;
    c.terrain.features = 6;
    return c;
}

inline plumesr::ConcentrationSequence random_sequence(std::int64_t steps, plumesr::Shape3 grid, unsigned seed,
                                                      float lo = 0.0f, float hi = 1.0f) {
    plumesr::ConcentrationSequence s(steps, grid, 600.0, {10.0, 10.0, 10.0});
    std::mt19937 gen(seed);
    std::uniform_real_distribution<float> d(lo, hi);
    for (auto& v : s.values()) v = d(gen);
    return s;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() / ("plumesr_test_" + name + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace testing
