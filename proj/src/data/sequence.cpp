#include "plumesr/data/sequence.hpp"

#include <cmath>
#include <sstream>

#include "plumesr/error.hpp"

namespace plumesr {

std::string Shape3::str() const {
    std::ostringstream os;
    os << "(" << z << ", " << y << ", " << x << ")";
    return os.str();
}

ConcentrationSequence::ConcentrationSequence(std::int64_t steps, Shape3 grid, double dt_output,
                                             Vec3 cell_size_zyx, Vec3 origin_zyx)
    : steps_(steps), grid_(grid), dt_output_(dt_output), cell_size_(cell_size_zyx), origin_(origin_zyx) {
    if (steps < 0 || !grid.positive()) {
        throw InvalidArgument("sequence needs steps >= 0 and a positive grid, got steps=" +
                              std::to_string(steps) + " grid=" + grid.str());
    }
    values_.assign(static_cast<std::size_t>(steps * grid.cells()), 0.0f);
}

Vec3 ConcentrationSequence::extent() const noexcept {
    return {cell_size_[0] * static_cast<double>(grid_.z), cell_size_[1] * static_cast<double>(grid_.y),
            cell_size_[2] * static_cast<double>(grid_.x)};
}

std::span<float> ConcentrationSequence::frame(std::int64_t t) {
    if (t < 0 || t >= steps_) throw InvalidArgument("frame index " + std::to_string(t) + " out of range");
    const auto n = static_cast<std::size_t>(grid_.cells());
    return {values_.data() + static_cast<std::size_t>(t) * n, n};
}

std::span<const float> ConcentrationSequence::frame(std::int64_t t) const {
    if (t < 0 || t >= steps_) throw InvalidArgument("frame index " + std::to_string(t) + " out of range");
    const auto n = static_cast<std::size_t>(grid_.cells());
    return {values_.data() + static_cast<std::size_t>(t) * n, n};
}

ConcentrationSequence ConcentrationSequence::prefix(std::int64_t n) const {
    if (n < 0 || n > steps_) throw InvalidArgument("prefix length out of range");
    ConcentrationSequence out(n, grid_, dt_output_, cell_size_, origin_);
    std::copy_n(values_.begin(), out.values_.size(), out.values_.begin());
    return out;
}

void ConcentrationSequence::validate_concentration() const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]) || values_[i] < 0.0f) {
            throw InvalidArgument("concentration value at flat index " + std::to_string(i) +
                                  " is negative or non-finite");
        }
    }
}

}  // namespace plumesr
