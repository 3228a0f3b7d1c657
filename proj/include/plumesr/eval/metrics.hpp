#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "plumesr/data/normalization.hpp"
#include "plumesr/data/sequence.hpp"

namespace plumesr::eval {

enum class MassNormalization { Relative, Absolute };

struct MetricConfig {
    double iou_threshold = 1.0;  ///< log10 concentration cutoff for the plume mask
    int ssim_window = 7;         ///< odd, >= 3; uniform (box) window
    double ssim_k1 = 0.01;
    double ssim_k2 = 0.03;
    double ssim_data_range = 1.0;
    MassNormalization cm_normalization = MassNormalization::Relative;
    double cell_volume = 1.0;  ///< m^3, used by the absolute mass mode

    void validate() const;
};

double mse(std::span<const float> pred, std::span<const float> truth);

/// Jaccard index of {pred >= threshold} and {truth >= threshold}; 1 when both are empty.
double iou(std::span<const float> pred, std::span<const float> truth, double threshold);

/// Mean SSIM over every position where the cubic window fits inside the volume.
double ssim3d(VolumeView pred, VolumeView truth, const MetricConfig& config);

/// Mean contrast-structure factor (2 s_xy + C2) / (s_x^2 + s_y^2 + C2) over the same windows.
double ssim3d_contrast_structure(VolumeView pred, VolumeView truth, const MetricConfig& config);

/// Relative: |sum(pred) - sum(truth)| / sum(truth). Absolute: |difference| * cell volume.
/// Inputs are linear concentrations.
double conservation_mass(std::span<const float> pred, std::span<const float> truth, const MetricConfig& config);

/// Per-step metric values for one run.
struct RunMetrics {
    std::string run_id;
    std::vector<double> mse, iou, ssim, cm;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

inline const std::array<std::string, 4> kMetricNames{"MSE", "IoU", "SSIM", "CM"};

/// Per-step metrics for every run plus aggregates recomputed on demand.
struct MetricsReport {
    std::string model;
    std::vector<RunMetrics> runs;

    /// Values of metric `m` (0..3, order of kMetricNames) for run `r`.
    const std::vector<double>& series(std::size_t r, std::size_t m) const;
    /// Mean and population std over all steps of all runs.
    MeanStd aggregate(std::size_t m) const;
    /// Mean and std across runs at each step.
    std::vector<MeanStd> per_step(std::size_t m) const;

    /// Long-format CSV: run,step,metric,value
    std::string to_csv() const;
    nlohmann::json aggregate_json() const;
};

/// Evaluates aligned normalized sequences: MSE, IoU (threshold mapped from
/// log10 units through `norm`) and SSIM in normalized space; CM on the
/// denormalized (linear) fields.
RunMetrics evaluate_rollout(const ConcentrationSequence& pred, const ConcentrationSequence& truth,
                            const data::NormalizationSpec& norm, const MetricConfig& config,
                            const std::string& run_id = "");

}  // namespace plumesr::eval
