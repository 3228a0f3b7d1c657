#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace plumesr::data {

enum class Split { Train, Val, Test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

/// Indices into the run list for each partition.
struct RunSplit {
    std::vector<std::size_t> train, val, test;
};

/// Partition sizes for `n` runs: validation and test get round(n / 10) each
/// (at least one), training gets the rest.
std::array<std::size_t, 3> split_sizes(std::size_t n);

/// Disjoint, exhaustive, seed-deterministic 80/10/10 partition.
RunSplit split_runs(std::size_t n_runs, std::uint64_t seed);

}  // namespace plumesr::data
