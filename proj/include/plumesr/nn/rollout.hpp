#pragma once

#include <functional>
#include <set>
#include <span>
#include <vector>

#include "plumesr/data/sequence.hpp"

namespace plumesr::nn {

inline constexpr std::int64_t kWindow = 5;

/// Frame indices count from the release (frame k at k * dt_output); the first
/// five frames seed the window, so predicted frames start at index 5.
struct RolloutPlan {
    std::int64_t total_steps = 28;
    std::set<std::int64_t> update_schedule;

    void validate(std::int64_t gt_frames) const;
};

/// Maps five frames (oldest first) to the next frame.
using FramePredictor = std::function<std::vector<float>(const std::vector<std::span<const float>>&)>;

struct RolloutResult {
    /// Frames 0..4 are the seeding ground truth; frame 4+s is the output of step s.
    ConcentrationSequence frames;
    /// frame_is_gt[f]: frame f came from ground truth.
    std::vector<bool> frame_is_gt;
    /// window_frames[s-1]: frame indices forming the input window of step s.
    std::vector<std::array<std::int64_t, kWindow>> window_frames;

    /// Ground-truth slots in the input window of step s (1-based).
    std::int64_t gt_slots(std::int64_t step) const;
};

/// Autoregressive rollout: each step drops the oldest frame and appends the new
/// one, which is the prediction unless its index is scheduled for an update.
RolloutResult rollout(const ConcentrationSequence& ground_truth, const RolloutPlan& plan,
                      const FramePredictor& predictor);

}  // namespace plumesr::nn
