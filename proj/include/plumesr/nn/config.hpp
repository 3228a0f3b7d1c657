#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "plumesr/data/sequence.hpp"

namespace plumesr::nn {

using Stride3 = std::array<std::int64_t, 3>;

enum class BottleneckKind { Conv, ConvLstm };
enum class SkipMode { None, Additive };

std::string to_string(BottleneckKind k);
std::string to_string(SkipMode m);
BottleneckKind bottleneck_from_string(const std::string& s);
SkipMode skip_from_string(const std::string& s);

/// Temporal autoencoder shared by the TM (LR) and the HRTM (HR).
struct TemporalConfig {
    std::array<std::int64_t, 3> channels{7 * 16, 7 * 32, 7 * 64};
    double dropout = 0.2;
    BottleneckKind bottleneck = BottleneckKind::Conv;
    SkipMode skip = SkipMode::Additive;
    std::int64_t window = 5;
    Shape3 input_shape{8, 32, 32};

    void validate() const;
};

struct HRTMConfig {
    std::int64_t num_layers = 2;
    double dropout = 0.2;
    BottleneckKind bottleneck = BottleneckKind::Conv;
    SkipMode skip = SkipMode::Additive;
    std::int64_t window = 5;
    Shape3 input_shape{32, 128, 128};

    TemporalConfig temporal() const;
};

struct SRMConfig {
    std::array<std::int64_t, 3> channels{7 * 16, 7 * 32, 7 * 8};
    double negative_slope = 0.01;
    std::array<Stride3, 2> pool{Stride3{1, 2, 2}, Stride3{1, 2, 2}};
    std::array<Stride3, 4> up{Stride3{1, 2, 2}, Stride3{1, 2, 2}, Stride3{2, 2, 2}, Stride3{2, 2, 2}};
    Shape3 input_shape{8, 32, 32};
    Shape3 output_shape{32, 128, 128};

    void validate() const;
};

nlohmann::json to_json(const TemporalConfig& c);
nlohmann::json to_json(const HRTMConfig& c);
nlohmann::json to_json(const SRMConfig& c);
TemporalConfig temporal_config_from_json(const nlohmann::json& j);
HRTMConfig hrtm_config_from_json(const nlohmann::json& j);
SRMConfig srm_config_from_json(const nlohmann::json& j);

struct TrainConfig {
    int epochs = 1000;
    int batch_size = 16;
    double learning_rate = 1.0e-3;
    double plateau_factor = 0.5;
    int plateau_patience = 20;
    double min_learning_rate = 0.0;
    double grad_clip = 1.0;  ///< global L2 norm; <= 0 disables clipping
    std::uint64_t seed = 0;
    int max_batches_per_epoch = 0;  ///< 0 = full pass
    int max_val_samples = 0;        ///< 0 = whole validation split

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

}  // namespace plumesr::nn
