#include "plumesr/nn/config.hpp"

#include "plumesr/error.hpp"

namespace plumesr::nn {

std::string to_string(BottleneckKind k) { return k == BottleneckKind::Conv ? "conv" : "convlstm"; }
std::string to_string(SkipMode m) { return m == SkipMode::None ? "none" : "additive"; }

BottleneckKind bottleneck_from_string(const std::string& s) {
    if (s == "conv") return BottleneckKind::Conv;
    if (s == "convlstm") return BottleneckKind::ConvLstm;
    throw InvalidConfig("unknown bottleneck_kind '" + s + "' (expected conv or convlstm)");
}

SkipMode skip_from_string(const std::string& s) {
    if (s == "none") return SkipMode::None;
    if (s == "additive") return SkipMode::Additive;
    throw InvalidConfig("unknown skip_mode '" + s + "' (expected none or additive)");
}

void TemporalConfig::validate() const {
    for (auto c : channels)
        if (c <= 0) throw InvalidConfig("temporal channels must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidConfig("dropout must lie in [0, 1)");
    if (window < 1) throw InvalidConfig("window must be >= 1");
    if (!input_shape.positive()) throw InvalidConfig("input_shape must be positive");
}

TemporalConfig HRTMConfig::temporal() const {
    if (num_layers < 1) throw InvalidConfig("num_layers must be >= 1");
    TemporalConfig t;
    t.channels = {num_layers * 32, num_layers * 64, num_layers * 128};
    t.dropout = dropout;
    t.bottleneck = bottleneck;
    t.skip = skip;
    t.window = window;
    t.input_shape = input_shape;
    return t;
}

void SRMConfig::validate() const {
    for (auto c : channels)
        if (c <= 0) throw InvalidConfig("srm channels must be positive");
    if (!input_shape.positive() || !output_shape.positive()) throw InvalidConfig("srm shapes must be positive");
    for (const auto& s : pool)
        for (auto v : s)
            if (v < 1) throw InvalidConfig("pool strides must be >= 1");
    for (const auto& s : up)
        for (auto v : s)
            if (v < 1 || v > 2) throw InvalidConfig("up strides must be 1 or 2");
}

namespace {

nlohmann::json shape_json(Shape3 s) { return nlohmann::json::array({s.z, s.y, s.x}); }
Shape3 shape_from(const nlohmann::json& j) { return {j.at(0).get<std::int64_t>(), j.at(1).get<std::int64_t>(), j.at(2).get<std::int64_t>()}; }

}  // namespace

nlohmann::json to_json(const TemporalConfig& c) {
    return {{"channels", c.channels},           {"dropout", c.dropout}, {"bottleneck_kind", to_string(c.bottleneck)},
            {"skip_mode", to_string(c.skip)},   {"window", c.window},   {"input_shape", shape_json(c.input_shape)}};
}

nlohmann::json to_json(const HRTMConfig& c) {
    return {{"num_layers", c.num_layers},     {"dropout", c.dropout}, {"bottleneck_kind", to_string(c.bottleneck)},
            {"skip_mode", to_string(c.skip)}, {"window", c.window},   {"input_shape", shape_json(c.input_shape)}};
}

nlohmann::json to_json(const SRMConfig& c) {
    return {{"channels", c.channels},
            {"negative_slope", c.negative_slope},
            {"pool", c.pool},
            {"up", c.up},
            {"input_shape", shape_json(c.input_shape)},
            {"output_shape", shape_json(c.output_shape)}};
}

TemporalConfig temporal_config_from_json(const nlohmann::json& j) {
    TemporalConfig c;
    if (j.contains("channels")) c.channels = j.at("channels").get<std::array<std::int64_t, 3>>();
    c.dropout = j.value("dropout", c.dropout);
    if (j.contains("bottleneck_kind")) c.bottleneck = bottleneck_from_string(j.at("bottleneck_kind"));
    if (j.contains("skip_mode")) c.skip = skip_from_string(j.at("skip_mode"));
    c.window = j.value("window", c.window);
    if (j.contains("input_shape")) c.input_shape = shape_from(j.at("input_shape"));
    c.validate();
    return c;
}

HRTMConfig hrtm_config_from_json(const nlohmann::json& j) {
    HRTMConfig c;
    c.num_layers = j.value("num_layers", c.num_layers);
    c.dropout = j.value("dropout", c.dropout);
    if (j.contains("bottleneck_kind")) c.bottleneck = bottleneck_from_string(j.at("bottleneck_kind"));
    if (j.contains("skip_mode")) c.skip = skip_from_string(j.at("skip_mode"));
    c.window = j.value("window", c.window);
    if (j.contains("input_shape")) c.input_shape = shape_from(j.at("input_shape"));
    c.temporal().validate();
    return c;
}

SRMConfig srm_config_from_json(const nlohmann::json& j) {
    SRMConfig c;
    if (j.contains("channels")) c.channels = j.at("channels").get<std::array<std::int64_t, 3>>();
    c.negative_slope = j.value("negative_slope", c.negative_slope);
    if (j.contains("pool")) c.pool = j.at("pool").get<std::array<Stride3, 2>>();
    if (j.contains("up")) c.up = j.at("up").get<std::array<Stride3, 4>>();
    if (j.contains("input_shape")) c.input_shape = shape_from(j.at("input_shape"));
    if (j.contains("output_shape")) c.output_shape = shape_from(j.at("output_shape"));
    c.validate();
    return c;
}

void TrainConfig::validate() const {
    if (epochs < 0) throw InvalidConfig("epochs must be >= 0");
    if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidConfig("learning_rate must be positive");
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw InvalidConfig("plateau_factor must lie in (0, 1)");
    if (plateau_patience < 0) throw InvalidConfig("plateau_patience must be >= 0");
    if (max_batches_per_epoch < 0 || max_val_samples < 0) throw InvalidConfig("caps must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"plateau_factor", c.plateau_factor},
            {"plateau_patience", c.plateau_patience},
            {"min_learning_rate", c.min_learning_rate},
            {"grad_clip", c.grad_clip},
            {"seed", c.seed},
            {"max_batches_per_epoch", c.max_batches_per_epoch},
            {"max_val_samples", c.max_val_samples}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.plateau_factor = j.value("plateau_factor", c.plateau_factor);
    c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
    c.min_learning_rate = j.value("min_learning_rate", c.min_learning_rate);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.seed = j.value("seed", c.seed);
    c.max_batches_per_epoch = j.value("max_batches_per_epoch", c.max_batches_per_epoch);
    c.max_val_samples = j.value("max_val_samples", c.max_val_samples);
    c.validate();
    return c;
}

}  // namespace plumesr::nn
