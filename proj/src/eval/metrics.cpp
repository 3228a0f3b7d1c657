#include "plumesr/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "plumesr/error.hpp"

namespace plumesr::eval {

void MetricConfig::validate() const {
    if (ssim_window < 3 || ssim_window % 2 == 0) throw InvalidArgument("ssim_window must be odd and >= 3");
    if (!std::isfinite(iou_threshold)) throw InvalidArgument("iou_threshold must be finite");
    if (!(ssim_data_range > 0.0)) throw InvalidArgument("ssim_data_range must be positive");
}

namespace {

void same_size(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("shape mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                              " values");
    }
}

/// Summed-volume table with a zero border: S(k,j,i) = sum over [0,k) x [0,j) x [0,i).
class SummedVolume {
public:
    SummedVolume(Shape3 s) : s_(s), t_(static_cast<std::size_t>((s.z + 1) * (s.y + 1) * (s.x + 1)), 0.0) {}

    template <typename Fn>
    void build(Fn&& value) {
        for (std::int64_t k = 1; k <= s_.z; ++k)
            for (std::int64_t j = 1; j <= s_.y; ++j)
                for (std::int64_t i = 1; i <= s_.x; ++i)
                    at(k, j, i) = value(k - 1, j - 1, i - 1) + at(k - 1, j, i) + at(k, j - 1, i) + at(k, j, i - 1) -
                                  at(k - 1, j - 1, i) - at(k - 1, j, i - 1) - at(k, j - 1, i - 1) +
                                  at(k - 1, j - 1, i - 1);
    }

    /// Sum over the cube [k, k+w) x [j, j+w) x [i, i+w).
    double box(std::int64_t k, std::int64_t j, std::int64_t i, std::int64_t w) const {
        const std::int64_t K = k + w, J = j + w, I = i + w;
        return get(K, J, I) - get(k, J, I) - get(K, j, I) - get(K, J, i) + get(k, j, I) + get(k, J, i) +
               get(K, j, i) - get(k, j, i);
    }

private:
    double& at(std::int64_t k, std::int64_t j, std::int64_t i) {
        return t_[static_cast<std::size_t>((k * (s_.y + 1) + j) * (s_.x + 1) + i)];
    }
    double get(std::int64_t k, std::int64_t j, std::int64_t i) const {
        return t_[static_cast<std::size_t>((k * (s_.y + 1) + j) * (s_.x + 1) + i)];
    }
    Shape3 s_;
    std::vector<double> t_;
};

struct SsimParts {
    double full = 0.0;
    double cs = 0.0;
};

SsimParts ssim_parts(VolumeView a, VolumeView b, const MetricConfig& config) {
    config.validate();
    if (!(a.shape == b.shape)) throw InvalidArgument("ssim shape mismatch " + a.shape.str() + " vs " + b.shape.str());
    same_size(a.data, b.data);
    const std::int64_t w = config.ssim_window;
    const Shape3 s = a.shape;
    if (s.z < w || s.y < w || s.x < w) {
        throw InvalidArgument("volume " + s.str() + " smaller than the SSIM window " + std::to_string(w));
    }
    // Local statistics are taken about a global offset to keep the summed tables well conditioned.
    double offset = 0.0;
    for (std::size_t p = 0; p < a.data.size(); ++p) offset += 0.5 * (a.data[p] + b.data[p]);
    offset /= static_cast<double>(a.data.size());
    auto va = [&](std::int64_t k, std::int64_t j, std::int64_t i) { return static_cast<double>(a(k, j, i)) - offset; };
    auto vb = [&](std::int64_t k, std::int64_t j, std::int64_t i) { return static_cast<double>(b(k, j, i)) - offset; };
    SummedVolume sa(s), sb(s), saa(s), sbb(s), sab(s);
    sa.build(va);
    sb.build(vb);
    saa.build([&](auto k, auto j, auto i) { return va(k, j, i) * va(k, j, i); });
    sbb.build([&](auto k, auto j, auto i) { return vb(k, j, i) * vb(k, j, i); });
    sab.build([&](auto k, auto j, auto i) { return va(k, j, i) * vb(k, j, i); });

    const double L = config.ssim_data_range;
    const double c1 = (config.ssim_k1 * L) * (config.ssim_k1 * L);
    const double c2 = (config.ssim_k2 * L) * (config.ssim_k2 * L);
    const double n = static_cast<double>(w * w * w);
    double total = 0.0, total_cs = 0.0;
    std::int64_t count = 0;
    for (std::int64_t k = 0; k + w <= s.z; ++k) {
        for (std::int64_t j = 0; j + w <= s.y; ++j) {
            for (std::int64_t i = 0; i + w <= s.x; ++i) {
                const double ma = sa.box(k, j, i, w) / n;
                const double mb = sb.box(k, j, i, w) / n;
                const double vaa = std::max(0.0, saa.box(k, j, i, w) / n - ma * ma);
                const double vbb = std::max(0.0, sbb.box(k, j, i, w) / n - mb * mb);
                // Clamp like the variances so identical inputs give exactly cs = 1.
                const double lim = std::sqrt(vaa * vbb);
                const double vab = std::clamp(sab.box(k, j, i, w) / n - ma * mb, -lim, lim);
                const double mua = ma + offset, mub = mb + offset;
                const double lum = (2.0 * mua * mub + c1) / (mua * mua + mub * mub + c1);
                const double cs = (2.0 * vab + c2) / (vaa + vbb + c2);
                total += lum * cs;
                total_cs += cs;
                ++count;
            }
        }
    }
    return {total / static_cast<double>(count), total_cs / static_cast<double>(count)};
}

}  // namespace

double mse(std::span<const float> pred, std::span<const float> truth) {
    same_size(pred, truth);
    if (pred.empty()) throw InvalidArgument("mse of empty volumes");
    double acc = 0.0;
    for (std::size_t p = 0; p < pred.size(); ++p) {
        const double d = static_cast<double>(pred[p]) - static_cast<double>(truth[p]);
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double iou(std::span<const float> pred, std::span<const float> truth, double threshold) {
    same_size(pred, truth);
    std::size_t inter = 0, uni = 0;
    for (std::size_t p = 0; p < pred.size(); ++p) {
        const bool a = pred[p] >= threshold;
        const bool b = truth[p] >= threshold;
        inter += (a && b) ? 1 : 0;
        uni += (a || b) ? 1 : 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double ssim3d(VolumeView pred, VolumeView truth, const MetricConfig& config) {
    return ssim_parts(pred, truth, config).full;
}

double ssim3d_contrast_structure(VolumeView pred, VolumeView truth, const MetricConfig& config) {
    return ssim_parts(pred, truth, config).cs;
}

double conservation_mass(std::span<const float> pred, std::span<const float> truth, const MetricConfig& config) {
    same_size(pred, truth);
    double sp = 0.0, st = 0.0;
    for (std::size_t p = 0; p < pred.size(); ++p) {
        sp += pred[p];
        st += truth[p];
    }
    if (config.cm_normalization == MassNormalization::Absolute) return std::abs(sp - st) * config.cell_volume;
    if (!(st > 0.0)) throw UndefinedMetric("relative mass conservation is undefined for zero total truth mass");
    return std::abs(sp - st) / st;
}

const std::vector<double>& MetricsReport::series(std::size_t r, std::size_t m) const {
    const auto& run = runs.at(r);
    switch (m) {
        case 0: return run.mse;
        case 1: return run.iou;
        case 2: return run.ssim;
        case 3: return run.cm;
    }
    throw InvalidArgument("metric index out of range");
}

MeanStd MetricsReport::aggregate(std::size_t m) const {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        for (double v : series(r, m)) {
            sum += v;
            ++n;
        }
    }
    if (n == 0) return {};
    const double mean = sum / static_cast<double>(n);
    for (std::size_t r = 0; r < runs.size(); ++r)
        for (double v : series(r, m)) sq += (v - mean) * (v - mean);
    return {mean, std::sqrt(sq / static_cast<double>(n))};
}

std::vector<MeanStd> MetricsReport::per_step(std::size_t m) const {
    std::vector<MeanStd> out;
    if (runs.empty()) return out;
    const std::size_t steps = series(0, m).size();
    for (std::size_t t = 0; t < steps; ++t) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t r = 0; r < runs.size(); ++r) sum += series(r, m).at(t);
        const double mean = sum / static_cast<double>(runs.size());
        for (std::size_t r = 0; r < runs.size(); ++r) sq += (series(r, m)[t] - mean) * (series(r, m)[t] - mean);
        out.push_back({mean, std::sqrt(sq / static_cast<double>(runs.size()))});
    }
    return out;
}

std::string MetricsReport::to_csv() const {
    std::ostringstream os;
    os << std::setprecision(10);
    os << "run,step,metric,value\n";
    for (std::size_t r = 0; r < runs.size(); ++r)
        for (std::size_t m = 0; m < 4; ++m) {
            const auto& s = series(r, m);
            for (std::size_t t = 0; t < s.size(); ++t)
                os << runs[r].run_id << ',' << t << ',' << kMetricNames[m] << ',' << s[t] << '\n';
        }
    return os.str();
}

nlohmann::json MetricsReport::aggregate_json() const {
    nlohmann::json j = {{"model", model}, {"runs", runs.size()}};
    for (std::size_t m = 0; m < 4; ++m) {
        const auto a = aggregate(m);
        j["metrics"][kMetricNames[m]] = {{"mean", a.mean}, {"std", a.std}};
    }
    return j;
}

RunMetrics evaluate_rollout(const ConcentrationSequence& pred, const ConcentrationSequence& truth,
                            const data::NormalizationSpec& norm, const MetricConfig& config,
                            const std::string& run_id) {
    config.validate();
    norm.validate();
    if (pred.steps() != truth.steps()) {
        throw InvalidArgument("misaligned sequences: " + std::to_string(pred.steps()) + " vs " +
                              std::to_string(truth.steps()) + " steps");
    }
    if (!(pred.grid() == truth.grid())) {
        throw InvalidArgument("grid mismatch " + pred.grid().str() + " vs " + truth.grid().str());
    }
    const double threshold = norm.normalized_log(config.iou_threshold);
    RunMetrics out;
    out.run_id = run_id;
    std::vector<float> lp, lt;
    for (std::int64_t t = 0; t < pred.steps(); ++t) {
        const auto p = pred.frame(t);
        const auto g = truth.frame(t);
        out.mse.push_back(mse(p, g));
        out.iou.push_back(iou(p, g, threshold));
        out.ssim.push_back(ssim3d(pred.view(t), truth.view(t), config));
        lp.assign(p.begin(), p.end());
        lt.assign(g.begin(), g.end());
        for (float& v : lp) v = norm.denormalize(v);
        for (float& v : lt) v = norm.denormalize(v);
        out.cm.push_back(conservation_mass(lp, lt, config));
    }
    return out;
}

}  // namespace plumesr::eval
