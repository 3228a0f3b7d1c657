#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plumesr/eval/metrics.hpp"
#include "plumesr/experiment/config.hpp"
#include "plumesr/experiment/corpus.hpp"
#include "plumesr/nn/models.hpp"
#include "plumesr/nn/rollout.hpp"
#include "plumesr/nn/trainer.hpp"
#include "plumesr/sensors/sensors.hpp"

namespace plumesr::experiment {

enum class ModelKind { TM, SRM, HRTM };
std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

std::filesystem::path checkpoint_path(const ExperimentConfig& config, ModelKind kind);

struct TrainOptions {
    bool resume = false;
    int epochs = -1;  ///< overrides the configured epoch count when >= 0
    Logger log;
};

struct TrainOutcome {
    std::filesystem::path checkpoint;
    std::int64_t parameters = 0;
    double best_val_loss = 0.0;
    int best_epoch = -1;
    int epochs = 0;
    std::vector<nn::EpochRecord> history;
    /// SRM only: validation MSE and downsample consistency of the trained model and the trilinear baseline.
    nlohmann::json baseline;
};

/// Trains one model on the corpus; writes <models>/<kind>.ckpt and <kind>_history.csv
/// after every epoch, so an interrupted run resumes where it stopped.
TrainOutcome cmd_train(const ExperimentConfig& config, ModelKind kind, const TrainOptions& options = {});

/// Validation MSE and downsample consistency of trilinear upsampling on the SRM pairs.
nlohmann::json srm_baseline(const ExperimentConfig& config, nn::SRMNet* model);

/// Trained models loaded from their checkpoints.
struct ModelSet {
    nn::TemporalNet tm{nullptr};
    nn::SRMNet srm{nullptr};
    nn::TemporalNet hrtm{nullptr};
    data::NormalizationSpec normalization;
};

/// Loads every requested checkpoint; a missing file raises an actionable IoError.
ModelSet load_models(const ExperimentConfig& config, bool tm_srm, bool hrtm);

/// Dual-stage rollout in normalized space: TM over LR frames then SRM per frame.
struct DualStageRollout {
    nn::RolloutResult lr;
    ConcentrationSequence hr;
};

nn::FramePredictor temporal_predictor(nn::TemporalNet& model);
DualStageRollout rollout_dual_stage(ModelSet& models, const ConcentrationSequence& lr_truth,
                                    const ConcentrationSequence& hr_like, const nn::RolloutPlan& plan);
nn::RolloutResult rollout_hrtm(ModelSet& models, const ConcentrationSequence& hr_truth, const nn::RolloutPlan& plan);
/// Batched per-frame super-resolution of a normalized LR sequence.
ConcentrationSequence super_resolve_sequence(nn::SRMNet& srm, const ConcentrationSequence& lr,
                                             const ConcentrationSequence& hr_like);

struct EvaluateOptions {
    bool bypass_models = false;  ///< use ground truth as the prediction (pipeline check)
    Logger log;
};

struct EvaluationOutcome {
    std::map<std::string, eval::MetricsReport> reports;  ///< keyed by model name
    std::vector<std::filesystem::path> artifacts;
};

/// Rolls out every test run, scores the four metrics per step and writes CSV,
/// JSON and plots under <output>/eval.
EvaluationOutcome cmd_rollout_evaluate(const ExperimentConfig& config, const EvaluateOptions& options = {});

struct SensorRunResult {
    std::string run_id;
    std::vector<sensors::TraceError> errors;
    double near_after_plain = 0.0;    ///< mean near-band post-boundary error without updates
    double near_after_updated = 0.0;  ///< same with the update schedule
    bool prefix_equal = true;         ///< frames before the first update identical in both rollouts
};

struct SensorOutcome {
    std::vector<sensors::SensorSpec> sensors;
    std::vector<SensorRunResult> runs;
    int improved_runs = 0;  ///< runs with updated <= plain near-band error
    std::map<std::string, eval::MetricsReport> reports;
};

/// Update experiment on the test split: plain and scheduled rollouts, sensor traces and error tables.
SensorOutcome run_update_experiment(const ExperimentConfig& config, ModelSet& models, const Logger& log = {});
SensorOutcome cmd_sensors(const ExperimentConfig& config, const Logger& log = {});

std::vector<sensors::SensorSpec> configured_sensors(const ExperimentConfig& config);

struct TimingRecord {
    std::string model;
    double mean_s = 0.0;
    double std_s = 0.0;
    double median_s = 0.0;
    int repetitions = 0;
    int warmup = 0;
    std::vector<double> samples;
    std::string hardware;

    nlohmann::json to_json() const;
};

/// Times fn() `warmup + repetitions` times, keeping only the last `repetitions`.
TimingRecord time_steps(const std::string& model, int warmup, int repetitions, const std::function<void()>& fn);

struct BenchmarkOutcome {
    TimingRecord dual_stage;
    TimingRecord hrtm;
    double ratio = 0.0;  ///< hrtm median / dual-stage median
};

BenchmarkOutcome benchmark_models(ModelSet& models, int warmup, int repetitions);
BenchmarkOutcome cmd_benchmark(const ExperimentConfig& config, const Logger& log = {});

/// Collects the JSON artifacts under <output> into report.json and report.md.
std::filesystem::path cmd_report(const ExperimentConfig& config);

std::string hardware_string();

/// Least-squares slope of values[first..last] against the index.
double least_squares_slope(const std::vector<double>& values, std::size_t first, std::size_t last);

/// Normalized LR and HR sequences of one corpus run.
struct NormalizedRun {
    std::string run_id;
    plume::WindCondition condition;
    ConcentrationSequence lr;
    ConcentrationSequence hr;
};
NormalizedRun load_normalized_run(const std::filesystem::path& file, const data::NormalizationSpec& norm);

}  // namespace plumesr::experiment
