#include "plumesr/data/normalization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plumesr/error.hpp"

namespace plumesr::data {

void NormalizationSpec::validate() const {
    if (!std::isfinite(log_floor) || !(log_floor > 0.0)) throw InvalidSpec("log_floor must be positive and finite");
    if (!std::isfinite(min_val) || !std::isfinite(max_val)) throw InvalidSpec("normalization bounds must be finite");
    if (!(max_val > min_val)) {
        throw InvalidSpec("normalization needs min_val < max_val, got [" + std::to_string(min_val) + ", " +
                          std::to_string(max_val) + "]");
    }
}

float NormalizationSpec::normalize(float v) const {
    const double lv = std::log10(std::max(static_cast<double>(v), log_floor));
    return static_cast<float>((lv - min_val) / (max_val - min_val));
}

float NormalizationSpec::denormalize(float n) const {
    return static_cast<float>(std::pow(10.0, static_cast<double>(n) * (max_val - min_val) + min_val));
}

NormalizationSpec fit_normalization(std::span<const ConcentrationSequence* const> sequences, double log_floor) {
    if (!(log_floor > 0.0)) throw InvalidSpec("log_floor must be positive");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto* seq : sequences) {
        for (float v : seq->values()) {
            const double lv = std::log10(std::max(static_cast<double>(v), log_floor));
            lo = std::min(lo, lv);
            hi = std::max(hi, lv);
        }
    }
    NormalizationSpec spec{log_floor, lo, hi};
    spec.validate();
    return spec;
}

void log_normalize_inplace(std::span<float> values, const NormalizationSpec& spec) {
    spec.validate();
    for (float& v : values) {
        if (!(v >= 0.0f)) throw InvalidArgument("log_normalize expects non-negative finite concentrations");
        v = spec.normalize(v);
    }
}

void log_denormalize_inplace(std::span<float> values, const NormalizationSpec& spec) {
    spec.validate();
    for (float& v : values) v = spec.denormalize(v);
}

ConcentrationSequence log_normalize(const ConcentrationSequence& seq, const NormalizationSpec& spec) {
    ConcentrationSequence out = seq;
    log_normalize_inplace(out.values(), spec);
    return out;
}

ConcentrationSequence log_denormalize(const ConcentrationSequence& seq, const NormalizationSpec& spec) {
    ConcentrationSequence out = seq;
    log_denormalize_inplace(out.values(), spec);
    return out;
}

}  // namespace plumesr::data
