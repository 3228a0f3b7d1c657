#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "plumesr/data/container.hpp"
#include "plumesr/experiment/config.hpp"
#include "plumesr/plume/solver.hpp"
#include "plumesr/plume/terrain.hpp"

namespace plumesr::experiment {

using Logger = std::function<void(const std::string&)>;

plume::TerrainField corpus_terrain(const DataSection& data);

/// Simulates one release and reduces it to the paired LR/HR sequences.
data::DualResolutionSample generate_sample(const DataSection& data, const plume::TerrainField& terrain,
                                           const plume::WindCondition& condition, const std::string& run_id,
                                           std::uint64_t seed, plume::SimulationResult* raw = nullptr);

std::string run_id_for(int index);

struct GenerateOptions {
    bool force = false;
    Logger log;
};

/// Writes runs/*.plm and manifest.json under config.corpus_dir(). Refuses an
/// existing corpus unless forced. Output bytes depend only on the config.
data::Manifest cmd_generate(const ExperimentConfig& config, const GenerateOptions& options = {});

/// Reads the manifest and checks that every listed run file exists.
data::Manifest open_corpus(const ExperimentConfig& config);

}  // namespace plumesr::experiment
