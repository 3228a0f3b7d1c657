#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "plumesr/data/sequence.hpp"
#include "plumesr/eval/metrics.hpp"
#include "plumesr/nn/config.hpp"
#include "plumesr/plume/types.hpp"

namespace plumesr::experiment {

inline constexpr const char* kOutputDirEnv = "PLUMESR_OUTPUT_DIR";

struct DataSection {
    int runs = 100;
    std::uint64_t seed = 2024;          ///< LHS sampling and per-run seeds
    std::uint64_t terrain_seed = 7;
    std::uint64_t split_seed = 11;
    plume::SimConfig sim;
    plume::SourceSpec source;
    plume::ConditionRanges ranges;
    Vec3 crop_extent_zyx{2000.0, 5000.0, 5000.0};
    Shape3 lr_shape{8, 32, 32};
    Shape3 hr_shape{32, 128, 128};
    double log_floor = 1.0e-10;
    std::string corpus_dir = "corpus";
    int workers = 1;
};

struct TmSection {
    nn::TemporalConfig model;
    nn::TrainConfig train;
};

struct SrmSection {
    nn::SRMConfig model;
    nn::TrainConfig train;
};

struct HrtmSection {
    nn::HRTMConfig model;
    nn::TrainConfig train;
};

struct EvaluationSection {
    eval::MetricConfig metrics;
    std::string sensor_file;  ///< "id,x,y" CSV; empty selects the default ring
    int sensors_per_band = 3;
    std::vector<std::int64_t> update_schedule{6, 9, 15};
    plume::WindCondition showcase{5.7, 350.5};
    bool compare_hrtm = true;
    int benchmark_repetitions = 20;
    int benchmark_warmup = 3;
    int max_test_runs = 0;  ///< 0 = every test run
};

struct OutputSection {
    std::string dir = "plumesr_out";
    bool plots = true;
};

struct ExperimentConfig {
    DataSection data;
    TmSection tm;
    SrmSection srm;
    HrtmSection hrtm;
    EvaluationSection evaluation;
    OutputSection output;
    int threads = 0;  ///< libtorch intra-op threads, 0 keeps the library default

    ExperimentConfig();

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    /// FNV-1a 64 over the canonical JSON dump without paths and thread counts, as 16 hex digits.
    std::string hash() const;

    std::filesystem::path output_dir() const;
    std::filesystem::path corpus_dir() const;
    std::filesystem::path models_dir() const { return output_dir() / "models"; }
    std::filesystem::path eval_dir() const { return output_dir() / "eval"; }
};

/// Reads a JSON config; applies PLUMESR_OUTPUT_DIR when set.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Defaults plus the environment override.
ExperimentConfig default_config();
void apply_environment(ExperimentConfig& config);

std::string fnv1a_hex(const std::string& text);

}  // namespace plumesr::experiment
