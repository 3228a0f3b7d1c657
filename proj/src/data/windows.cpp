#include "plumesr/data/windows.hpp"

#include <algorithm>

#include "plumesr/error.hpp"

namespace plumesr::data {

std::vector<SlidingWindow> make_windows(std::int64_t sequence_length) {
    if (sequence_length < kWindowLength + 1) {
        throw InvalidArgument("need at least " + std::to_string(kWindowLength + 1) + " frames for a window, got " +
                              std::to_string(sequence_length));
    }
    std::vector<SlidingWindow> out;
    out.reserve(static_cast<std::size_t>(sequence_length - kWindowLength));
    for (std::int64_t s = 0; s + kWindowLength < sequence_length; ++s) out.push_back({s});
    return out;
}

std::vector<SlidingWindow> make_windows(const ConcentrationSequence& seq) { return make_windows(seq.steps()); }

std::vector<float> window_inputs(const ConcentrationSequence& seq, const SlidingWindow& w) {
    const auto n = static_cast<std::size_t>(seq.grid().cells());
    std::vector<float> out(n * kWindowLength);
    std::size_t slot = 0;
    for (std::int64_t f : w.input_frames()) {
        const auto fr = seq.frame(f);
        std::copy(fr.begin(), fr.end(), out.begin() + static_cast<std::ptrdiff_t>(slot++ * n));
    }
    return out;
}

std::vector<float> window_target(const ConcentrationSequence& seq, const SlidingWindow& w) {
    const auto fr = seq.frame(w.target_frame());
    return {fr.begin(), fr.end()};
}

}  // namespace plumesr::data
