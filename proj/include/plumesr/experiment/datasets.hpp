#pragma once

#include <filesystem>
#include <vector>

#include <torch/torch.h>

#include "plumesr/data/container.hpp"
#include "plumesr/nn/trainer.hpp"

namespace plumesr::experiment {

/// Normalized frames of a set of runs at one resolution. Whole sequences are
/// cached in memory while the total stays under `cache_bytes`; otherwise
/// frames are read from the run files on demand.
class CorpusFrames {
public:
    CorpusFrames(const std::filesystem::path& corpus_dir, const std::vector<const data::ManifestEntry*>& runs,
                 const data::NormalizationSpec& norm, data::Resolution resolution,
                 std::size_t cache_bytes = std::size_t{2} << 30);

    std::size_t runs() const { return readers_.size(); }
    std::int64_t steps() const { return steps_; }
    Shape3 shape() const { return shape_; }
    const std::string& run_id(std::size_t r) const { return ids_.at(r); }
    const data::NormalizationSpec& normalization() const { return norm_; }

    /// (Z, Y, X) float tensor in normalized space.
    torch::Tensor frame(std::size_t run, std::int64_t t) const;
    /// (T, Z, Y, X) normalized sequence.
    torch::Tensor sequence(std::size_t run) const;

private:
    std::vector<data::RunFileReader> readers_;
    std::vector<std::string> ids_;
    data::NormalizationSpec norm_;
    data::Resolution resolution_;
    std::int64_t steps_ = 0;
    Shape3 shape_;
    std::vector<torch::Tensor> cache_;
};

/// Sliding windows over every run: sample i -> ((window, Z, Y, X), (1, Z, Y, X)).
nn::Dataset window_dataset(const CorpusFrames& frames, std::int64_t window = 5);
/// Super-resolution pairs: sample i -> (avg_pool4(hr), hr) in normalized space.
nn::Dataset srm_dataset(const CorpusFrames& hr_frames);

/// 4x average pooling of (B, Z, Y, X) normalized frames.
torch::Tensor pool4(const torch::Tensor& hr);
/// Trilinear (cell-centre) 4x upsampling of (B, Z, Y, X) frames.
torch::Tensor trilinear4(const torch::Tensor& lr);

/// Converts between ConcentrationSequence frames and (T, Z, Y, X) tensors.
torch::Tensor to_tensor(const ConcentrationSequence& seq);
ConcentrationSequence from_tensor(const torch::Tensor& frames, const ConcentrationSequence& like);

}  // namespace plumesr::experiment
