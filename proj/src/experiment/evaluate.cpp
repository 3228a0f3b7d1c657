#include <algorithm>
#include <cmath>

#include "plumesr/error.hpp"
#include "plumesr/experiment/datasets.hpp"
#include "plumesr/experiment/pipeline.hpp"
#include "plumesr/experiment/plots.hpp"

namespace plumesr::experiment {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

void say(const Logger& log, const std::string& s) {
    if (log) log(s);
}

}  // namespace

nn::FramePredictor temporal_predictor(nn::TemporalNet& model) {
    return [model](const std::vector<std::span<const float>>& window) mutable {
        const auto& s = model->config().input_shape;
        auto x = torch::empty({1, static_cast<std::int64_t>(window.size()), s.z, s.y, s.x});
        for (std::size_t k = 0; k < window.size(); ++k) {
            std::copy(window[k].begin(), window[k].end(), x.data_ptr<float>() + k * static_cast<std::size_t>(s.cells()));
        }
        auto y = nn::predict_step(model, x).contiguous();
        return std::vector<float>(y.data_ptr<float>(), y.data_ptr<float>() + y.numel());
    };
}

ConcentrationSequence super_resolve_sequence(nn::SRMNet& srm, const ConcentrationSequence& lr,
                                             const ConcentrationSequence& hr_like) {
    auto frames = to_tensor(lr);
    std::vector<torch::Tensor> out;
    for (std::int64_t s = 0; s < frames.size(0); s += 8) {
        out.push_back(nn::super_resolve(srm, frames.slice(0, s, std::min(frames.size(0), s + 8))));
    }
    return from_tensor(torch::cat(out), hr_like);
}

DualStageRollout rollout_dual_stage(ModelSet& models, const ConcentrationSequence& lr_truth,
                                    const ConcentrationSequence& hr_like, const nn::RolloutPlan& plan) {
    if (!models.tm || !models.srm) throw InvalidArgument("dual-stage rollout needs TM and SRM models");
    auto lr = nn::rollout(lr_truth, plan, temporal_predictor(models.tm));
    auto hr = super_resolve_sequence(models.srm, lr.frames, hr_like);
    return {std::move(lr), std::move(hr)};
}

nn::RolloutResult rollout_hrtm(ModelSet& models, const ConcentrationSequence& hr_truth, const nn::RolloutPlan& plan) {
    if (!models.hrtm) throw InvalidArgument("HRTM rollout needs an HRTM model");
    return nn::rollout(hr_truth, plan, temporal_predictor(models.hrtm));
}

double least_squares_slope(const std::vector<double>& v, std::size_t first, std::size_t last) {
    if (last >= v.size() || last <= first) throw InvalidArgument("slope range out of bounds");
    const double n = static_cast<double>(last - first + 1);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = first; i <= last; ++i) {
        const double x = static_cast<double>(i);
        sx += x;
        sy += v[i];
        sxx += x * x;
        sxy += x * v[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

void metric_plot(const std::filesystem::path& path, const std::map<std::string, eval::MetricsReport>& reports,
                 double dt_minutes) {
    std::vector<Panel> panels;
    for (std::size_t m = 0; m < 4; ++m) {
        Panel p{eval::kMetricNames[m], "time step", eval::kMetricNames[m], {}, {5.0}};
        int ci = 0;
        for (const auto& [name, rep] : reports) {
            const auto stats = rep.per_step(m);
            Series s;
            s.label = name;
            s.color = kColors[ci++ % 5];
            for (std::size_t t = 0; t < stats.size(); ++t) {
                s.x.push_back(static_cast<double>(t));
                s.y.push_back(stats[t].mean);
                s.lo.push_back(stats[t].mean - stats[t].std);
                s.hi.push_back(stats[t].mean + stats[t].std);
            }
            p.series.push_back(std::move(s));
        }
        p.xlabel = "time step (" + std::to_string(static_cast<int>(dt_minutes)) + " min)";
        panels.push_back(std::move(p));
    }
    write_svg(path, panels, 2);
}

/// Plane means and z slices of ground truth and each prediction, normalized colour scale [0, 1].
std::vector<std::filesystem::path> plane_figures(const std::filesystem::path& dir,
                                                 const std::vector<std::pair<std::string, const ConcentrationSequence*>>& rows) {
    std::vector<std::filesystem::path> out;
    const auto steps = rows.front().second->steps();
    std::vector<std::int64_t> times;
    for (std::int64_t t : {steps / 4, steps / 2, (3 * steps) / 4, steps - 1}) times.push_back(std::max<std::int64_t>(t, 0));
    const std::pair<const char*, PlaneAxis> axes[] = {{"x_mean", PlaneAxis::X}, {"y_mean", PlaneAxis::Y}, {"z_mean", PlaneAxis::Z}};
    for (const auto& [name, axis] : axes) {
        std::vector<std::vector<Image>> grid;
        for (const auto& [label, seq] : rows) {
            std::vector<Image> r;
            for (auto t : times) r.push_back(plane_mean(seq->view(t), axis));
            grid.push_back(std::move(r));
        }
        const auto p = dir / (std::string(name) + ".png");
        write_png_grid(p, grid, 0.0, 1.0);
        out.push_back(p);
    }
    std::vector<std::vector<Image>> grid;
    const auto z = rows.front().second->grid().z;
    for (const auto& [label, seq] : rows) {
        std::vector<Image> r;
        for (std::int64_t k : {std::int64_t{0}, z / 8, z / 4, z / 2}) r.push_back(z_slice(seq->view(steps - 1), k));
        grid.push_back(std::move(r));
    }
    const auto p = dir / "z_slices.png";
    write_png_grid(p, grid, 0.0, 1.0);
    out.push_back(p);
    nlohmann::json layout = {{"rows", nlohmann::json::array()}, {"plane_columns_time_steps", times},
                             {"z_slice_levels", {0, z / 8, z / 4, z / 2}}, {"z_slice_time_step", steps - 1},
                             {"colour_scale", "normalized log10 concentration, 0..1"}};
    for (const auto& r : rows) layout["rows"].push_back(r.first);
    data::write_text_atomic(dir / "layout.json", layout.dump(2));
    out.push_back(dir / "layout.json");
    return out;
}

}  // namespace

EvaluationOutcome cmd_rollout_evaluate(const ExperimentConfig& config, const EvaluateOptions& options) {
    const auto manifest = open_corpus(config);
    ModelSet models;
    const bool use_hrtm = config.evaluation.compare_hrtm;
    if (!options.bypass_models) models = load_models(config, true, use_hrtm);
    const auto norm = options.bypass_models ? manifest.normalization : models.normalization;
    auto tests = manifest.select(data::Split::Test);
    if (config.evaluation.max_test_runs > 0 && tests.size() > static_cast<std::size_t>(config.evaluation.max_test_runs)) {
        tests.resize(static_cast<std::size_t>(config.evaluation.max_test_runs));
    }
    const auto out_dir = config.eval_dir();
    EvaluationOutcome outcome;
    const std::string dual = "DST3D-UNet-SR";
    const std::string hrtm = "HRTM";
    double dt = 600.0;
    for (const auto* entry : tests) {
        const auto run = load_normalized_run(config.corpus_dir() / entry->file, norm);
        dt = run.hr.dt_output();
        nn::RolloutPlan plan{run.lr.steps() - nn::kWindow, {}};
        if (options.bypass_models) {
            outcome.reports[dual].runs.push_back(eval::evaluate_rollout(run.hr, run.hr, norm, config.evaluation.metrics, run.run_id));
            continue;
        }
        const auto ds = rollout_dual_stage(models, run.lr, run.hr, plan);
        outcome.reports[dual].runs.push_back(eval::evaluate_rollout(ds.hr, run.hr, norm, config.evaluation.metrics, run.run_id));
        if (use_hrtm) {
            const auto hr = rollout_hrtm(models, run.hr, plan);
            outcome.reports[hrtm].runs.push_back(eval::evaluate_rollout(hr.frames, run.hr, norm, config.evaluation.metrics, run.run_id));
        }
        say(options.log, "evaluated " + run.run_id);
    }
    nlohmann::json summary = {{"config_hash", config.hash()},
                              {"test_runs", tests.size()},
                              {"bypass_models", options.bypass_models},
                              {"normalization", data::to_json(norm)},
                              {"iou_threshold_log10", config.evaluation.metrics.iou_threshold},
                              {"models", nlohmann::json::object()}};
    for (auto& [name, rep] : outcome.reports) {
        rep.model = name;
        const auto file = out_dir / ("metrics_" + std::string(name == dual ? "dst3d" : "hrtm") + ".csv");
        data::write_text_atomic(file, rep.to_csv());
        outcome.artifacts.push_back(file);
        auto j = rep.aggregate_json();
        for (std::size_t m = 0; m < 4; ++m) {
            std::vector<double> means, stds;
            for (const auto& s : rep.per_step(m)) {
                means.push_back(s.mean);
                stds.push_back(s.std);
            }
            j["per_step"][eval::kMetricNames[m]] = {{"mean", means}, {"std", stds}};
        }
        const auto mse = j["per_step"]["MSE"]["mean"].get<std::vector<double>>();
        if (mse.size() > 30) {
            j["mse_slope_steps_2_6"] = least_squares_slope(mse, 2, 6);
            j["mse_slope_steps_10_30"] = least_squares_slope(mse, 10, 30);
        }
        summary["models"][name] = j;
    }
    const auto summary_path = out_dir / "metrics_summary.json";
    data::write_text_atomic(summary_path, summary.dump(2));
    outcome.artifacts.push_back(summary_path);

    if (config.output.plots && !outcome.reports.empty()) {
        const auto plot = out_dir / "plots" / "metrics.svg";
        metric_plot(plot, outcome.reports, dt / 60.0);
        outcome.artifacts.push_back(plot);
        if (!options.bypass_models) {
            // Showcase release outside the corpus for the plane-average figures.
            const auto terrain = corpus_terrain(config.data);
            auto sample = generate_sample(config.data, terrain, config.evaluation.showcase, "showcase", config.data.seed);
            const auto lr = data::log_normalize(sample.lr, norm);
            const auto hr = data::log_normalize(sample.hr, norm);
            nn::RolloutPlan plan{lr.steps() - nn::kWindow, {}};
            const auto ds = rollout_dual_stage(models, lr, hr, plan);
            std::vector<std::pair<std::string, const ConcentrationSequence*>> rows{{"ground truth", &hr}, {dual, &ds.hr}};
            std::optional<nn::RolloutResult> hr_roll;
            if (use_hrtm) {
                hr_roll = rollout_hrtm(models, hr, plan);
                rows.push_back({hrtm, &hr_roll->frames});
            }
            for (auto& p : plane_figures(out_dir / "plots" / "showcase", rows)) outcome.artifacts.push_back(p);
            eval::MetricsReport show;
            show.model = dual;
            show.runs.push_back(eval::evaluate_rollout(ds.hr, hr, norm, config.evaluation.metrics, "showcase"));
            data::write_text_atomic(out_dir / "plots" / "showcase" / "metrics_dst3d.csv", show.to_csv());
            say(options.log, "showcase figures written for w_s=" + std::to_string(config.evaluation.showcase.speed_ms) +
                                 " w_d=" + std::to_string(config.evaluation.showcase.direction_deg));
        }
    }
    return outcome;
}

}  // namespace plumesr::experiment
