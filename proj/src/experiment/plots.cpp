#include "plumesr/experiment/plots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <png.h>

#include "plumesr/data/container.hpp"
#include "plumesr/error.hpp"

namespace plumesr::experiment {

namespace {

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string tick(double v) {
    char buf[32];
    if (v != 0.0 && (std::abs(v) < 1e-2 || std::abs(v) >= 1e4)) {
        std::snprintf(buf, sizeof buf, "%.1e", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.3g", v);
    }
    return buf;
}

}  // namespace

std::string svg_panels(const std::vector<Panel>& panels, int columns, int pw, int ph) {
    columns = std::max(1, columns);
    const int rows = static_cast<int>((panels.size() + static_cast<std::size_t>(columns) - 1) / static_cast<std::size_t>(columns));
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << columns * pw << "\" height=\"" << rows * ph
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const double ml = 62, mr = 12, mt = 24, mb = 40;
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const double ox = static_cast<double>(static_cast<int>(p) % columns) * pw;
        const double oy = static_cast<double>(static_cast<int>(p) / columns) * ph;
        double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
        for (const auto& s : panel.series) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.y[i])) continue;
                x0 = std::min(x0, s.x[i]);
                x1 = std::max(x1, s.x[i]);
                double lo = s.y[i], hi = s.y[i];
                if (!s.lo.empty()) lo = std::min(lo, s.lo[i]);
                if (!s.hi.empty()) hi = std::max(hi, s.hi[i]);
                y0 = std::min(y0, lo);
                y1 = std::max(y1, hi);
            }
        }
        if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
        if (x1 == x0) x1 = x0 + 1;
        if (y1 == y0) y1 = y0 + 1;
        const double pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
        const double w = pw - ml - mr, h = ph - mt - mb;
        auto X = [&](double v) { return ox + ml + (v - x0) / (x1 - x0) * w; };
        auto Y = [&](double v) { return oy + mt + (1.0 - (v - y0) / (y1 - y0)) * h; };
        os << "<g>\n<text x=\"" << ox + ml + w / 2 << "\" y=\"" << oy + 16 << "\" text-anchor=\"middle\" font-size=\"13\">"
           << esc(panel.title) << "</text>\n";
        os << "<rect x=\"" << ox + ml << "\" y=\"" << oy + mt << "\" width=\"" << w << "\" height=\"" << h
           << "\" fill=\"none\" stroke=\"#444\"/>\n";
        for (int k = 0; k <= 4; ++k) {
            const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
            os << "<text x=\"" << X(xv) << "\" y=\"" << oy + mt + h + 14 << "\" text-anchor=\"middle\">" << tick(xv)
               << "</text>\n";
            os << "<text x=\"" << ox + ml - 4 << "\" y=\"" << Y(yv) + 4 << "\" text-anchor=\"end\">" << tick(yv)
               << "</text>\n";
        }
        os << "<text x=\"" << ox + ml + w / 2 << "\" y=\"" << oy + ph - 8 << "\" text-anchor=\"middle\">"
           << esc(panel.xlabel) << "</text>\n";
        os << "<text transform=\"translate(" << ox + 12 << "," << oy + mt + h / 2
           << ") rotate(-90)\" text-anchor=\"middle\">" << esc(panel.ylabel) << "</text>\n";
        for (double v : panel.vlines) {
            if (v < x0 || v > x1) continue;
            os << "<line x1=\"" << X(v) << "\" x2=\"" << X(v) << "\" y1=\"" << oy + mt << "\" y2=\"" << oy + mt + h
               << "\" stroke=\"grey\" stroke-dasharray=\"5,4\"/>\n";
        }
        int legend = 0;
        for (const auto& s : panel.series) {
            if (!s.lo.empty() && !s.hi.empty()) {
                os << "<polygon fill=\"" << s.color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
                for (std::size_t i = 0; i < s.x.size(); ++i) os << X(s.x[i]) << ',' << Y(s.hi[i]) << ' ';
                for (std::size_t i = s.x.size(); i-- > 0;) os << X(s.x[i]) << ',' << Y(s.lo[i]) << ' ';
                os << "\"/>\n";
            }
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\""
               << (s.dashed ? " stroke-dasharray=\"6,3\"" : "") << " points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (std::isfinite(s.y[i])) os << X(s.x[i]) << ',' << Y(s.y[i]) << ' ';
            os << "\"/>\n";
            const double ly = oy + mt + 12 + 13 * legend++;
            os << "<line x1=\"" << ox + ml + 8 << "\" x2=\"" << ox + ml + 26 << "\" y1=\"" << ly - 4 << "\" y2=\""
               << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
               << (s.dashed ? " stroke-dasharray=\"6,3\"" : "") << "/>\n";
            os << "<text x=\"" << ox + ml + 30 << "\" y=\"" << ly << "\">" << esc(s.label) << "</text>\n";
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_svg(const std::filesystem::path& path, const std::vector<Panel>& panels, int columns) {
    data::write_text_atomic(path, svg_panels(panels, columns));
}

Image plane_mean(VolumeView v, PlaneAxis axis) {
    const auto s = v.shape;
    Image img;
    if (axis == PlaneAxis::Z) {
        img.width = static_cast<int>(s.x);
        img.height = static_cast<int>(s.y);
        img.values.assign(static_cast<std::size_t>(s.x * s.y), 0.0f);
        for (std::int64_t j = 0; j < s.y; ++j)
            for (std::int64_t i = 0; i < s.x; ++i) {
                double acc = 0.0;
                for (std::int64_t k = 0; k < s.z; ++k) acc += v(k, j, i);
                // y grows northward; north goes to the top row.
                img.values[static_cast<std::size_t>((s.y - 1 - j) * s.x + i)] = static_cast<float>(acc / s.z);
            }
        return img;
    }
    const bool along_y = axis == PlaneAxis::Y;
    const std::int64_t n = along_y ? s.x : s.y;
    const std::int64_t m = along_y ? s.y : s.x;
    img.width = static_cast<int>(n);
    img.height = static_cast<int>(s.z);
    img.values.assign(static_cast<std::size_t>(n * s.z), 0.0f);
    for (std::int64_t k = 0; k < s.z; ++k)
        for (std::int64_t a = 0; a < n; ++a) {
            double acc = 0.0;
            for (std::int64_t b = 0; b < m; ++b) acc += along_y ? v(k, b, a) : v(k, a, b);
            img.values[static_cast<std::size_t>((s.z - 1 - k) * n + a)] = static_cast<float>(acc / m);
        }
    return img;
}

Image z_slice(VolumeView v, std::int64_t k) {
    const auto s = v.shape;
    if (k < 0 || k >= s.z) throw InvalidArgument("z slice index out of range");
    Image img{static_cast<int>(s.x), static_cast<int>(s.y), std::vector<float>(static_cast<std::size_t>(s.x * s.y))};
    for (std::int64_t j = 0; j < s.y; ++j)
        for (std::int64_t i = 0; i < s.x; ++i) img.values[static_cast<std::size_t>((s.y - 1 - j) * s.x + i)] = v(k, j, i);
    return img;
}

namespace {

std::array<unsigned char, 3> colormap(double t) {
    // Five-stop approximation of a perceptually ordered dark-blue to yellow map.
    static const double stops[5][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const int i = std::min(3, static_cast<int>(t));
    const double f = t - i;
    std::array<unsigned char, 3> c{};
    for (int ch = 0; ch < 3; ++ch)
        c[static_cast<std::size_t>(ch)] = static_cast<unsigned char>(std::lround(stops[i][ch] + f * (stops[i + 1][ch] - stops[i][ch])));
    return c;
}

}  // namespace

void write_png_grid(const std::filesystem::path& path, const std::vector<std::vector<Image>>& grid, double vmin,
                    double vmax, int scale) {
    if (grid.empty()) throw InvalidArgument("empty image grid");
    const int gap = 4;
    std::vector<int> col_w, row_h(grid.size(), 0);
    for (std::size_t r = 0; r < grid.size(); ++r) {
        for (std::size_t c = 0; c < grid[r].size(); ++c) {
            if (col_w.size() <= c) col_w.push_back(0);
            col_w[c] = std::max(col_w[c], grid[r][c].width * scale);
            row_h[r] = std::max(row_h[r], grid[r][c].height * scale);
        }
    }
    int W = gap, H = gap;
    for (int w : col_w) W += w + gap;
    for (int h : row_h) H += h + gap;
    std::vector<unsigned char> rgb(static_cast<std::size_t>(W * H * 3), 255);
    const double span = vmax > vmin ? vmax - vmin : 1.0;
    int y0 = gap;
    for (std::size_t r = 0; r < grid.size(); ++r) {
        int x0 = gap;
        for (std::size_t c = 0; c < grid[r].size(); ++c) {
            const auto& img = grid[r][c];
            for (int y = 0; y < img.height * scale; ++y)
                for (int x = 0; x < img.width * scale; ++x) {
                    const float v = img.values[static_cast<std::size_t>((y / scale) * img.width + x / scale)];
                    const auto col = colormap((v - vmin) / span);
                    const auto p = static_cast<std::size_t>(((y0 + y) * W + x0 + x) * 3);
                    rgb[p] = col[0];
                    rgb[p + 1] = col[1];
                    rgb[p + 2] = col[2];
                }
            x0 += col_w[c] + gap;
        }
        y0 += row_h[r] + gap;
    }

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    FILE* fp = std::fopen(tmp.c_str(), "wb");
    if (!fp) throw IoError("cannot open " + tmp.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("png encoding failed for " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < H; ++y) png_write_row(png, rgb.data() + static_cast<std::size_t>(y * W * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    std::filesystem::rename(tmp, path);
}

}  // namespace plumesr::experiment
