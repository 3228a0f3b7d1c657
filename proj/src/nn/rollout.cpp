#include "plumesr/nn/rollout.hpp"

#include <algorithm>

#include "plumesr/error.hpp"

namespace plumesr::nn {

void RolloutPlan::validate(std::int64_t gt_frames) const {
    if (total_steps < 1) throw InvalidPlan("total_steps must be >= 1");
    if (gt_frames < kWindow) {
        throw InvalidPlan("rollout needs " + std::to_string(kWindow) + " ground-truth frames, got " +
                          std::to_string(gt_frames));
    }
    for (auto f : update_schedule) {
        if (f < kWindow || f >= kWindow + total_steps) {
            throw InvalidPlan("update index " + std::to_string(f) + " is outside the predicted range [" +
                              std::to_string(kWindow) + ", " + std::to_string(kWindow + total_steps) + ")");
        }
        if (f >= gt_frames) {
            throw InvalidPlan("update index " + std::to_string(f) + " has no ground-truth frame (sequence has " +
                              std::to_string(gt_frames) + ")");
        }
    }
}

std::int64_t RolloutResult::gt_slots(std::int64_t step) const {
    const auto& w = window_frames.at(static_cast<std::size_t>(step - 1));
    return std::count_if(w.begin(), w.end(), [&](std::int64_t f) { return frame_is_gt[static_cast<std::size_t>(f)]; });
}

RolloutResult rollout(const ConcentrationSequence& ground_truth, const RolloutPlan& plan,
                      const FramePredictor& predictor) {
    plan.validate(ground_truth.steps());
    const std::int64_t n = kWindow + plan.total_steps;
    RolloutResult out{ConcentrationSequence(n, ground_truth.grid(), ground_truth.dt_output(), ground_truth.cell_size(),
                                            ground_truth.origin()),
                      std::vector<bool>(static_cast<std::size_t>(n), false),
                      {}};
    const auto cells = static_cast<std::size_t>(ground_truth.grid().cells());
    for (std::int64_t f = 0; f < kWindow; ++f) {
        const auto src = ground_truth.frame(f);
        std::copy(src.begin(), src.end(), out.frames.frame(f).begin());
        out.frame_is_gt[static_cast<std::size_t>(f)] = true;
    }
    std::vector<std::span<const float>> window(kWindow);
    for (std::int64_t step = 1; step <= plan.total_steps; ++step) {
        const std::int64_t target = kWindow - 1 + step;
        std::array<std::int64_t, kWindow> idx{};
        for (std::int64_t k = 0; k < kWindow; ++k) idx[static_cast<std::size_t>(k)] = target - kWindow + k;
        out.window_frames.push_back(idx);
        auto dst = out.frames.frame(target);
        if (plan.update_schedule.count(target)) {
            const auto src = ground_truth.frame(target);
            std::copy(src.begin(), src.end(), dst.begin());
            out.frame_is_gt[static_cast<std::size_t>(target)] = true;
            continue;
        }
        for (std::int64_t k = 0; k < kWindow; ++k) window[static_cast<std::size_t>(k)] = out.frames.frame(idx[static_cast<std::size_t>(k)]);
        const auto next = predictor(window);
        if (next.size() != cells) {
            throw InvalidArgument("predictor returned " + std::to_string(next.size()) + " values, expected " +
                                  std::to_string(cells));
        }
        std::copy(next.begin(), next.end(), dst.begin());
    }
    return out;
}

}  // namespace plumesr::nn
