#pragma once

#include <span>
#include <vector>

#include "plumesr/data/sequence.hpp"

namespace plumesr::data {

/// Affine map of log10 concentration onto [0, 1] over the training split:
///   n(v) = (log10(max(v, log_floor)) - min_val) / (max_val - min_val)
struct NormalizationSpec {
    double log_floor = 1e-10;
    double min_val = -10.0;
    double max_val = 0.0;

    /// Throws InvalidSpec unless the floor is positive and min < max, all finite.
    void validate() const;

    float normalize(float v) const;
    float denormalize(float n) const;
    /// Normalized value corresponding to a log10 concentration.
    double normalized_log(double log10_value) const { return (log10_value - min_val) / (max_val - min_val); }
    /// log10 concentration corresponding to a normalized value.
    double log_value(double normalized) const { return normalized * (max_val - min_val) + min_val; }

    bool operator==(const NormalizationSpec&) const = default;
};

/// min/max of log10(max(v, floor)) over every value of every sequence.
NormalizationSpec fit_normalization(std::span<const ConcentrationSequence* const> sequences, double log_floor = 1e-10);

ConcentrationSequence log_normalize(const ConcentrationSequence& seq, const NormalizationSpec& spec);
ConcentrationSequence log_denormalize(const ConcentrationSequence& seq, const NormalizationSpec& spec);

void log_normalize_inplace(std::span<float> values, const NormalizationSpec& spec);
void log_denormalize_inplace(std::span<float> values, const NormalizationSpec& spec);

}  // namespace plumesr::data
