#include "plumesr/experiment/datasets.hpp"

#include "plumesr/error.hpp"

namespace plumesr::experiment {

namespace F = torch::nn::functional;

CorpusFrames::CorpusFrames(const std::filesystem::path& corpus_dir,
                           const std::vector<const data::ManifestEntry*>& runs, const data::NormalizationSpec& norm,
                           data::Resolution resolution, std::size_t cache_bytes)
    : norm_(norm), resolution_(resolution) {
    if (runs.empty()) throw InvalidArgument("no runs selected");
    for (const auto* r : runs) {
        readers_.emplace_back(corpus_dir / r->file);
        ids_.push_back(r->run_id);
    }
    steps_ = readers_.front().steps();
    shape_ = readers_.front().shape(resolution);
    for (const auto& rd : readers_) {
        if (rd.steps() != steps_ || !(rd.shape(resolution) == shape_)) {
            throw InvalidArgument("runs in one split must share their sequence shape");
        }
    }
    const auto total = static_cast<std::size_t>(steps_ * shape_.cells()) * sizeof(float) * readers_.size();
    if (total <= cache_bytes) {
        std::vector<torch::Tensor> loaded;
        for (std::size_t r = 0; r < readers_.size(); ++r) loaded.push_back(sequence(r));
        cache_ = std::move(loaded);
    }
}

torch::Tensor CorpusFrames::frame(std::size_t run, std::int64_t t) const {
    if (!cache_.empty()) return cache_.at(run)[t];
    auto values = readers_.at(run).frame(resolution_, t);
    data::log_normalize_inplace(values, norm_);
    return torch::from_blob(values.data(), {shape_.z, shape_.y, shape_.x}, torch::kFloat).clone();
}

torch::Tensor CorpusFrames::sequence(std::size_t run) const {
    if (!cache_.empty()) return cache_.at(run);
    auto seq = torch::empty({steps_, shape_.z, shape_.y, shape_.x});
    for (std::int64_t t = 0; t < steps_; ++t) seq[t].copy_(frame(run, t));
    return seq;
}

nn::Dataset window_dataset(const CorpusFrames& frames, std::int64_t window) {
    const std::int64_t per_run = frames.steps() - window;
    if (per_run < 1) throw InvalidArgument("sequences are too short for the window");
    nn::Dataset ds;
    ds.size = frames.runs() * static_cast<std::size_t>(per_run);
    ds.batch = [&frames, window, per_run](const std::vector<std::size_t>& idx) {
        std::vector<torch::Tensor> xs, ys;
        for (auto i : idx) {
            const auto run = i / static_cast<std::size_t>(per_run);
            const auto start = static_cast<std::int64_t>(i % static_cast<std::size_t>(per_run));
            std::vector<torch::Tensor> w;
            for (std::int64_t k = 0; k < window; ++k) w.push_back(frames.frame(run, start + k));
            xs.push_back(torch::stack(w));
            ys.push_back(frames.frame(run, start + window).unsqueeze(0));
        }
        return std::make_pair(torch::stack(xs), torch::stack(ys));
    };
    return ds;
}

torch::Tensor pool4(const torch::Tensor& hr) {
    return F::avg_pool3d(hr.unsqueeze(1), F::AvgPool3dFuncOptions(4)).squeeze(1);
}

torch::Tensor trilinear4(const torch::Tensor& lr) {
    const auto s = lr.sizes();
    return F::interpolate(lr.unsqueeze(1), F::InterpolateFuncOptions()
                                               .size(std::vector<std::int64_t>{4 * s[1], 4 * s[2], 4 * s[3]})
                                               .mode(torch::kTrilinear)
                                               .align_corners(false))
        .squeeze(1);
}

nn::Dataset srm_dataset(const CorpusFrames& hr_frames) {
    nn::Dataset ds;
    const auto steps = static_cast<std::size_t>(hr_frames.steps());
    ds.size = hr_frames.runs() * steps;
    ds.batch = [&hr_frames, steps](const std::vector<std::size_t>& idx) {
        std::vector<torch::Tensor> ys;
        for (auto i : idx) ys.push_back(hr_frames.frame(i / steps, static_cast<std::int64_t>(i % steps)));
        auto y = torch::stack(ys);
        return std::make_pair(pool4(y), y);
    };
    return ds;
}

torch::Tensor to_tensor(const ConcentrationSequence& seq) {
    const auto g = seq.grid();
    return torch::from_blob(const_cast<float*>(seq.values().data()), {seq.steps(), g.z, g.y, g.x}, torch::kFloat).clone();
}

ConcentrationSequence from_tensor(const torch::Tensor& frames, const ConcentrationSequence& like) {
    auto t = frames.contiguous().to(torch::kFloat);
    if (t.dim() != 4) throw InvalidArgument("expected a (T, Z, Y, X) tensor");
    ConcentrationSequence out(t.size(0), {t.size(1), t.size(2), t.size(3)}, like.dt_output(), like.cell_size(),
                              like.origin());
    std::copy(t.data_ptr<float>(), t.data_ptr<float>() + t.numel(), out.values().begin());
    return out;
}

}  // namespace plumesr::experiment
