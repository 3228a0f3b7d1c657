#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "plumesr/data/sequence.hpp"

namespace plumesr::experiment {

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::vector<double> lo, hi;  ///< optional shaded band
    std::string color = "#1f77b4";
    bool dashed = false;
};

struct Panel {
    std::string title, xlabel, ylabel;
    std::vector<Series> series;
    std::vector<double> vlines;  ///< dashed vertical markers at these x values
};

std::string svg_panels(const std::vector<Panel>& panels, int columns, int panel_width = 420, int panel_height = 300);
void write_svg(const std::filesystem::path& path, const std::vector<Panel>& panels, int columns);

/// Row-major scalar image, row 0 at the top.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> values;
};

enum class PlaneAxis { X, Y, Z };

/// Mean over one axis of a volume. Z gives a map view (north up), X and Y give
/// vertical sections (ground at the bottom).
Image plane_mean(VolumeView v, PlaneAxis axis);
Image z_slice(VolumeView v, std::int64_t k);

/// Heatmap grid (rows of panels, gaps in white) with a shared colour scale.
void write_png_grid(const std::filesystem::path& path, const std::vector<std::vector<Image>>& grid, double vmin,
                    double vmax, int scale = 2);

}  // namespace plumesr::experiment
