#pragma once

#include <span>
#include <vector>

#include "plumesr/data/sequence.hpp"

namespace plumesr::data {

/// Axis-aligned crop in physical units. `start_zyx` is measured from the
/// sequence origin; cell counts are obtained by floor division of the extent.
struct CropSpec {
    Vec3 extent_zyx{2000.0, 5000.0, 5000.0};
    Vec3 start_zyx{0.0, 0.0, 0.0};
};

/// Crop anchored at the ground whose north-west corner cell is the source
/// cell: the domain quadrant east and south of the release.
CropSpec southeast_crop(const ConcentrationSequence& seq, double x_source, double y_source,
                        Vec3 extent_zyx = {2000.0, 5000.0, 5000.0});

/// Cell counts the crop produces on `seq`'s grid.
Shape3 crop_cells(const ConcentrationSequence& seq, const CropSpec& spec);

ConcentrationSequence crop_volume(const ConcentrationSequence& seq, const CropSpec& spec);

/// Per-frame trilinear resampling with cell-centre alignment. Axes that shrink
/// are first smoothed with a Gaussian of sigma = (factor - 1) / 2 cells.
ConcentrationSequence resize_sequence(const ConcentrationSequence& seq, Shape3 target);

/// Resample a single volume (same rules as resize_sequence).
std::vector<float> resize_volume(std::span<const float> volume, Shape3 from, Shape3 to);

/// Plain trilinear interpolation without the anti-aliasing prefilter.
std::vector<float> trilinear_volume(std::span<const float> volume, Shape3 from, Shape3 to);

/// Mean over non-overlapping factor^3 blocks. Every dimension must divide.
std::vector<float> average_pool(std::span<const float> volume, Shape3 shape, int factor = 4);

/// Each cell replicated into a factor^3 block.
std::vector<float> nearest_upsample(std::span<const float> volume, Shape3 shape, int factor = 4);

/// Frame-wise average pooling of a whole sequence; cell sizes grow by `factor`.
ConcentrationSequence average_pool_sequence(const ConcentrationSequence& seq, int factor = 4);

}  // namespace plumesr::data
