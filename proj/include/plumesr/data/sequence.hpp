#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace plumesr {

/// Grid extent in cells, ordered (z, y, x) like every array in this project.
struct Shape3 {
    std::int64_t z = 0;
    std::int64_t y = 0;
    std::int64_t x = 0;

    std::int64_t cells() const noexcept { return z * y * x; }
    bool positive() const noexcept { return z > 0 && y > 0 && x > 0; }
    bool operator==(const Shape3&) const = default;
    std::string str() const;
};

/// Physical (z, y, x) triple in metres.
using Vec3 = std::array<double, 3>;

/// Read-only view over one (z, y, x) volume.
struct VolumeView {
    std::span<const float> data;
    Shape3 shape;

    float operator()(std::int64_t z, std::int64_t y, std::int64_t x) const {
        return data[static_cast<std::size_t>((z * shape.y + y) * shape.x + x)];
    }
};

/// Time-ordered 3D grids stored contiguously as (time, z, y, x) float32.
/// Frame `t` represents the state at `t * dt_output` seconds after release.
class ConcentrationSequence {
public:
    ConcentrationSequence() = default;
    ConcentrationSequence(std::int64_t steps, Shape3 grid, double dt_output, Vec3 cell_size_zyx,
                          Vec3 origin_zyx = {0.0, 0.0, 0.0});

    std::int64_t steps() const noexcept { return steps_; }
    const Shape3& grid() const noexcept { return grid_; }
    double dt_output() const noexcept { return dt_output_; }
    const Vec3& cell_size() const noexcept { return cell_size_; }
    const Vec3& origin() const noexcept { return origin_; }
    void set_origin(Vec3 origin) noexcept { origin_ = origin; }
    void set_cell_size(Vec3 cell) noexcept { cell_size_ = cell; }
    Vec3 extent() const noexcept;

    std::span<float> frame(std::int64_t t);
    std::span<const float> frame(std::int64_t t) const;
    VolumeView view(std::int64_t t) const { return {frame(t), grid_}; }

    float& at(std::int64_t t, std::int64_t z, std::int64_t y, std::int64_t x) {
        return values_[index(t, z, y, x)];
    }
    float at(std::int64_t t, std::int64_t z, std::int64_t y, std::int64_t x) const {
        return values_[index(t, z, y, x)];
    }

    std::vector<float>& values() noexcept { return values_; }
    const std::vector<float>& values() const noexcept { return values_; }

    /// First `n` frames as a new sequence with identical metadata.
    ConcentrationSequence prefix(std::int64_t n) const;

    /// Throws InvalidArgument unless every value is finite and >= 0.
    void validate_concentration() const;

private:
    std::size_t index(std::int64_t t, std::int64_t z, std::int64_t y, std::int64_t x) const {
        return static_cast<std::size_t>(((t * grid_.z + z) * grid_.y + y) * grid_.x + x);
    }

    std::int64_t steps_ = 0;
    Shape3 grid_{};
    double dt_output_ = 0.0;
    Vec3 cell_size_{1.0, 1.0, 1.0};
    Vec3 origin_{0.0, 0.0, 0.0};
    std::vector<float> values_;
};

}  // namespace plumesr
