#pragma once

#include <array>
#include <string>
#include <vector>

#include <torch/torch.h>
#include <json.hpp>

#include "plumesr/nn/config.hpp"

namespace plumesr::nn {

/// One line per stage: name, channels and spatial shape after the stage.
struct StageShape {
    std::string stage;
    std::int64_t channels = 0;
    Shape3 shape;
    std::string str() const;
};

class ConvLstmCellImpl : public torch::nn::Module {
public:
    ConvLstmCellImpl(std::int64_t in_channels, std::int64_t hidden);
    /// x: (B, T, C, Z, Y, X) -> final hidden state (B, hidden, Z, Y, X)
    torch::Tensor forward(const torch::Tensor& x);

private:
    std::int64_t hidden_;
    torch::nn::Conv3d gates_{nullptr};
};
TORCH_MODULE(ConvLstmCell);

class TemporalNetImpl : public torch::nn::Module {
public:
    explicit TemporalNetImpl(TemporalConfig config);
    /// (B, window, Z, Y, X) -> (B, 1, Z, Y, X)
    torch::Tensor forward(const torch::Tensor& x);

    const TemporalConfig& config() const { return config_; }
    const std::vector<StageShape>& audit() const { return audit_; }

private:
    torch::Tensor encode(const torch::Tensor& x, torch::Tensor& skip1, torch::Tensor& skip2);

    TemporalConfig config_;
    std::vector<StageShape> audit_;
    torch::nn::Conv3d enc1_{nullptr}, enc2_{nullptr}, enc3_{nullptr}, bottleneck_{nullptr};
    torch::nn::BatchNorm3d bn1_{nullptr}, bn2_{nullptr}, bn3_{nullptr}, dbn1_{nullptr}, dbn2_{nullptr};
    torch::nn::ConvTranspose3d dec1_{nullptr}, dec2_{nullptr}, dec3_{nullptr};
    torch::nn::Dropout3d drop_{nullptr};
    ConvLstmCell lstm_{nullptr};
};
TORCH_MODULE(TemporalNet);

class SRMNetImpl : public torch::nn::Module {
public:
    explicit SRMNetImpl(SRMConfig config);
    /// (B, Z, Y, X) -> (B, 4Z, 4Y, 4X)
    torch::Tensor forward(const torch::Tensor& x);

    const SRMConfig& config() const { return config_; }
    const std::vector<StageShape>& audit() const { return audit_; }

private:
    SRMConfig config_;
    std::vector<StageShape> audit_;
    torch::nn::Conv3d enc1_{nullptr}, enc2_{nullptr}, adjust_{nullptr};
    torch::nn::BatchNorm3d bn1_{nullptr}, bn2_{nullptr}, bn_adj_{nullptr}, dbn1_{nullptr}, dbn2_{nullptr},
        dbn3_{nullptr};
    torch::nn::MaxPool3d pool1_{nullptr}, pool2_{nullptr};
    torch::nn::ConvTranspose3d dec1_{nullptr}, dec2_{nullptr}, dec3_{nullptr}, dec4_{nullptr};
    torch::nn::LeakyReLU act_{nullptr};
};
TORCH_MODULE(SRMNet);

TemporalNet build_tm(const TemporalConfig& config = {});
TemporalNet build_hrtm(const HRTMConfig& config = {});
SRMNet build_srm(const SRMConfig& config = {});

std::int64_t count_parameters(const torch::nn::Module& module);

/// Reference totals quoted for the original architectures; logged only.
inline constexpr std::int64_t kReferenceTmParameters = 3'214'401;
inline constexpr std::int64_t kReferenceSrmParameters = 951'873;
inline constexpr std::int64_t kReferenceHrtmParameters = 4'166'274;

/// Eval-mode, no-grad next-frame prediction. windows: (B, window, Z, Y, X).
torch::Tensor predict_step(TemporalNet& model, const torch::Tensor& windows);
/// Eval-mode, no-grad super-resolution. frames: (Z, Y, X) or (B, Z, Y, X).
torch::Tensor super_resolve(SRMNet& model, const torch::Tensor& frames);

/// Sets libtorch to the requested intra-op thread count (0 keeps the default).
void configure_threads(int threads);

}  // namespace plumesr::nn
