#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "plumesr/data/sequence.hpp"

namespace plumesr::data {

inline constexpr std::int64_t kWindowLength = 5;

/// Five consecutive frames and the frame that follows them, by index.
struct SlidingWindow {
    std::int64_t start_index = 0;

    std::array<std::int64_t, kWindowLength> input_frames() const {
        return {start_index, start_index + 1, start_index + 2, start_index + 3, start_index + 4};
    }
    std::int64_t target_frame() const { return start_index + kWindowLength; }
};

/// One window per valid start index (T - 5 of them). Throws InvalidArgument for T < 6.
std::vector<SlidingWindow> make_windows(std::int64_t sequence_length);
std::vector<SlidingWindow> make_windows(const ConcentrationSequence& seq);

/// Copies the five input frames, (5, Z, Y, X) contiguous.
std::vector<float> window_inputs(const ConcentrationSequence& seq, const SlidingWindow& w);
/// Copies the target frame, (1, Z, Y, X).
std::vector<float> window_target(const ConcentrationSequence& seq, const SlidingWindow& w);

}  // namespace plumesr::data
