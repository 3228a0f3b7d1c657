#include "plumesr/data/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "plumesr/error.hpp"

namespace plumesr::data {

namespace {

std::int64_t floor_cells(double length, double cell) {
    return static_cast<std::int64_t>(std::floor(length / cell + 1e-9));
}

/// Separable pass along one axis of a (nz, ny, nx) volume. `axis` 0 = z, 1 = y, 2 = x.
template <typename Fn>
void for_each_line(Shape3 s, int axis, Fn&& fn) {
    const std::int64_t n = axis == 0 ? s.z : axis == 1 ? s.y : s.x;
    const std::int64_t stride = axis == 0 ? s.y * s.x : axis == 1 ? s.x : 1;
    const std::int64_t a = axis == 0 ? s.y : s.z;
    const std::int64_t b = axis == 2 ? s.y : s.x;
    for (std::int64_t p = 0; p < a; ++p) {
        for (std::int64_t q = 0; q < b; ++q) {
            std::int64_t base = 0;
            if (axis == 0) base = p * s.x + q;
            if (axis == 1) base = p * s.y * s.x + q;
            if (axis == 2) base = (p * s.y + q) * s.x;
            fn(base, stride, n);
        }
    }
}

void gaussian_axis(std::vector<float>& vol, Shape3 s, int axis, double sigma) {
    if (sigma <= 0.0) return;
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double norm = 0.0;
    for (int r = -radius; r <= radius; ++r) {
        kernel[static_cast<std::size_t>(r + radius)] = std::exp(-0.5 * r * r / (sigma * sigma));
        norm += kernel[static_cast<std::size_t>(r + radius)];
    }
    for (double& k : kernel) k /= norm;
    std::vector<double> line;
    for_each_line(s, axis, [&](std::int64_t base, std::int64_t stride, std::int64_t n) {
        line.resize(static_cast<std::size_t>(n));
        for (std::int64_t t = 0; t < n; ++t) line[static_cast<std::size_t>(t)] = vol[static_cast<std::size_t>(base + t * stride)];
        for (std::int64_t t = 0; t < n; ++t) {
            double acc = 0.0;
            for (int r = -radius; r <= radius; ++r) {
                const std::int64_t idx = std::clamp<std::int64_t>(t + r, 0, n - 1);  // edge replication
                acc += kernel[static_cast<std::size_t>(r + radius)] * line[static_cast<std::size_t>(idx)];
            }
            vol[static_cast<std::size_t>(base + t * stride)] = static_cast<float>(acc);
        }
    });
}

struct LinearTap {
    std::int64_t i0, i1;
    double w1;
};

std::vector<LinearTap> linear_taps(std::int64_t from, std::int64_t to) {
    std::vector<LinearTap> taps(static_cast<std::size_t>(to));
    const double scale = static_cast<double>(from) / static_cast<double>(to);
    for (std::int64_t o = 0; o < to; ++o) {
        double pos = (static_cast<double>(o) + 0.5) * scale - 0.5;
        pos = std::clamp(pos, 0.0, static_cast<double>(from - 1));
        const auto i0 = static_cast<std::int64_t>(std::floor(pos));
        const std::int64_t i1 = std::min(i0 + 1, from - 1);
        taps[static_cast<std::size_t>(o)] = {i0, i1, pos - static_cast<double>(i0)};
    }
    return taps;
}

void check_shape(std::span<const float> volume, Shape3 shape) {
    if (!shape.positive() || static_cast<std::int64_t>(volume.size()) != shape.cells()) {
        throw InvalidArgument("volume of " + std::to_string(volume.size()) + " values does not match shape " +
                              shape.str());
    }
}

}  // namespace

CropSpec southeast_crop(const ConcentrationSequence& seq, double x_source, double y_source, Vec3 extent_zyx) {
    const auto& cell = seq.cell_size();
    const auto& origin = seq.origin();
    const std::int64_t ny_c = floor_cells(extent_zyx[1], cell[1]);
    const std::int64_t i_src = static_cast<std::int64_t>(std::floor((x_source - origin[2]) / cell[2]));
    const std::int64_t j_src = static_cast<std::int64_t>(std::floor((y_source - origin[1]) / cell[1]));
    const std::int64_t j0 = j_src + 1 - ny_c;
    CropSpec spec;
    spec.extent_zyx = extent_zyx;
    spec.start_zyx = {0.0, static_cast<double>(j0) * cell[1], static_cast<double>(i_src) * cell[2]};
    if (j0 < 0) spec.start_zyx[1] = -1.0;  // rejected by crop_volume with a clear message
    return spec;
}

Shape3 crop_cells(const ConcentrationSequence& seq, const CropSpec& spec) {
    const auto& cell = seq.cell_size();
    return {floor_cells(spec.extent_zyx[0], cell[0]), floor_cells(spec.extent_zyx[1], cell[1]),
            floor_cells(spec.extent_zyx[2], cell[2])};
}

ConcentrationSequence crop_volume(const ConcentrationSequence& seq, const CropSpec& spec) {
    const auto& cell = seq.cell_size();
    const Shape3 out = crop_cells(seq, spec);
    std::array<std::int64_t, 3> start{};
    for (int a = 0; a < 3; ++a) {
        if (spec.start_zyx[static_cast<std::size_t>(a)] < 0.0) throw InvalidArgument("crop starts outside the domain");
        start[static_cast<std::size_t>(a)] = floor_cells(spec.start_zyx[static_cast<std::size_t>(a)], cell[static_cast<std::size_t>(a)]);
    }
    const Shape3& g = seq.grid();
    if (!out.positive() || start[0] + out.z > g.z || start[1] + out.y > g.y || start[2] + out.x > g.x) {
        throw InvalidArgument("crop " + out.str() + " cells at offset (" + std::to_string(start[0]) + ", " +
                              std::to_string(start[1]) + ", " + std::to_string(start[2]) +
                              ") does not fit the domain " + g.str());
    }
    const auto& o = seq.origin();
    ConcentrationSequence res(seq.steps(), out, seq.dt_output(), cell,
                              {o[0] + static_cast<double>(start[0]) * cell[0], o[1] + static_cast<double>(start[1]) * cell[1],
                               o[2] + static_cast<double>(start[2]) * cell[2]});
    for (std::int64_t t = 0; t < seq.steps(); ++t)
        for (std::int64_t k = 0; k < out.z; ++k)
            for (std::int64_t j = 0; j < out.y; ++j)
                for (std::int64_t i = 0; i < out.x; ++i)
                    res.at(t, k, j, i) = seq.at(t, k + start[0], j + start[1], i + start[2]);
    return res;
}

std::vector<float> trilinear_volume(std::span<const float> volume, Shape3 from, Shape3 to) {
    check_shape(volume, from);
    if (!to.positive()) throw InvalidArgument("resize target must be positive, got " + to.str());
    const auto tz = linear_taps(from.z, to.z);
    const auto ty = linear_taps(from.y, to.y);
    const auto tx = linear_taps(from.x, to.x);
    std::vector<float> out(static_cast<std::size_t>(to.cells()));
    auto at = [&](std::int64_t k, std::int64_t j, std::int64_t i) {
        return static_cast<double>(volume[static_cast<std::size_t>((k * from.y + j) * from.x + i)]);
    };
    for (std::int64_t k = 0; k < to.z; ++k) {
        const auto& a = tz[static_cast<std::size_t>(k)];
        for (std::int64_t j = 0; j < to.y; ++j) {
            const auto& b = ty[static_cast<std::size_t>(j)];
            for (std::int64_t i = 0; i < to.x; ++i) {
                const auto& c = tx[static_cast<std::size_t>(i)];
                auto lerp_x = [&](std::int64_t kk, std::int64_t jj) {
                    return (1.0 - c.w1) * at(kk, jj, c.i0) + c.w1 * at(kk, jj, c.i1);
                };
                const double v0 = (1.0 - b.w1) * lerp_x(a.i0, b.i0) + b.w1 * lerp_x(a.i0, b.i1);
                const double v1 = (1.0 - b.w1) * lerp_x(a.i1, b.i0) + b.w1 * lerp_x(a.i1, b.i1);
                out[static_cast<std::size_t>((k * to.y + j) * to.x + i)] = static_cast<float>((1.0 - a.w1) * v0 + a.w1 * v1);
            }
        }
    }
    return out;
}

std::vector<float> resize_volume(std::span<const float> volume, Shape3 from, Shape3 to) {
    check_shape(volume, from);
    if (!to.positive()) throw InvalidArgument("resize target must be positive, got " + to.str());
    const std::array<double, 3> factor{static_cast<double>(from.z) / static_cast<double>(to.z),
                                       static_cast<double>(from.y) / static_cast<double>(to.y),
                                       static_cast<double>(from.x) / static_cast<double>(to.x)};
    bool smooth = false;
    for (double f : factor) smooth = smooth || f > 1.0;
    if (!smooth) return trilinear_volume(volume, from, to);
    std::vector<float> tmp(volume.begin(), volume.end());
    for (int axis = 0; axis < 3; ++axis) {
        gaussian_axis(tmp, from, axis, std::max(0.0, (factor[static_cast<std::size_t>(axis)] - 1.0) / 2.0));
    }
    return trilinear_volume(tmp, from, to);
}

ConcentrationSequence resize_sequence(const ConcentrationSequence& seq, Shape3 target) {
    if (!target.positive()) throw InvalidArgument("resize target must be positive, got " + target.str());
    const Vec3 ext = seq.extent();
    ConcentrationSequence out(seq.steps(), target, seq.dt_output(),
                              {ext[0] / static_cast<double>(target.z), ext[1] / static_cast<double>(target.y),
                               ext[2] / static_cast<double>(target.x)},
                              seq.origin());
    for (std::int64_t t = 0; t < seq.steps(); ++t) {
        const auto r = resize_volume(seq.frame(t), seq.grid(), target);
        std::copy(r.begin(), r.end(), out.frame(t).begin());
    }
    return out;
}

std::vector<float> average_pool(std::span<const float> volume, Shape3 shape, int factor) {
    check_shape(volume, shape);
    if (factor < 1 || shape.z % factor || shape.y % factor || shape.x % factor) {
        throw InvalidArgument("shape " + shape.str() + " is not divisible by pooling factor " + std::to_string(factor));
    }
    const Shape3 o{shape.z / factor, shape.y / factor, shape.x / factor};
    std::vector<double> acc(static_cast<std::size_t>(o.cells()), 0.0);
    for (std::int64_t k = 0; k < shape.z; ++k)
        for (std::int64_t j = 0; j < shape.y; ++j)
            for (std::int64_t i = 0; i < shape.x; ++i)
                acc[static_cast<std::size_t>(((k / factor) * o.y + j / factor) * o.x + i / factor)] +=
                    volume[static_cast<std::size_t>((k * shape.y + j) * shape.x + i)];
    const double inv = 1.0 / static_cast<double>(factor * factor * factor);
    std::vector<float> out(acc.size());
    for (std::size_t p = 0; p < acc.size(); ++p) out[p] = static_cast<float>(acc[p] * inv);
    return out;
}

std::vector<float> nearest_upsample(std::span<const float> volume, Shape3 shape, int factor) {
    check_shape(volume, shape);
    if (factor < 1) throw InvalidArgument("upsampling factor must be >= 1");
    const Shape3 o{shape.z * factor, shape.y * factor, shape.x * factor};
    std::vector<float> out(static_cast<std::size_t>(o.cells()));
    for (std::int64_t k = 0; k < o.z; ++k)
        for (std::int64_t j = 0; j < o.y; ++j)
            for (std::int64_t i = 0; i < o.x; ++i)
                out[static_cast<std::size_t>((k * o.y + j) * o.x + i)] =
                    volume[static_cast<std::size_t>(((k / factor) * shape.y + j / factor) * shape.x + i / factor)];
    return out;
}

ConcentrationSequence average_pool_sequence(const ConcentrationSequence& seq, int factor) {
    const Shape3& g = seq.grid();
    if (factor < 1 || g.z % factor || g.y % factor || g.x % factor) {
        throw InvalidArgument("shape " + g.str() + " is not divisible by pooling factor " + std::to_string(factor));
    }
    const auto& c = seq.cell_size();
    const double f = static_cast<double>(factor);
    ConcentrationSequence out(seq.steps(), {g.z / factor, g.y / factor, g.x / factor}, seq.dt_output(),
                              {c[0] * f, c[1] * f, c[2] * f}, seq.origin());
    for (std::int64_t t = 0; t < seq.steps(); ++t) {
        const auto p = average_pool(seq.frame(t), g, factor);
        std::copy(p.begin(), p.end(), out.frame(t).begin());
    }
    return out;
}

}  // namespace plumesr::data
