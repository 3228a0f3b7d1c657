#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "plumesr/error.hpp"
#include "plumesr/experiment/datasets.hpp"
#include "plumesr/experiment/pipeline.hpp"
#include "plumesr/experiment/plots.hpp"

namespace plumesr::experiment {

namespace {

void say(const Logger& log, const std::string& s) {
    if (log) log(s);
}

ConcentrationSequence linear(const ConcentrationSequence& normalized, const data::NormalizationSpec& norm) {
    return data::log_denormalize(normalized, norm);
}

void trace_plot(const std::filesystem::path& path, const std::vector<sensors::SensorSpec>& specs,
                const std::map<std::string, std::vector<sensors::SensorTrace>>& traces) {
    static const std::map<std::string, std::pair<std::string, bool>> style{{"ground truth", {"#000000", false}},
                                                                           {"DST3D-UNet-SR", {"#1f77b4", false}},
                                                                           {"DST3D-UNet-SR updated", {"#ff7f0e", true}},
                                                                           {"HRTM", {"#2ca02c", false}}};
    std::vector<Panel> panels;
    for (std::size_t s = 0; s < specs.size(); ++s) {
        char title[96];
        std::snprintf(title, sizeof title, "%s (%.2f km)", specs[s].id.c_str(), specs[s].distance_to_source / 1000.0);
        Panel p{title, "hours after release", "z-mean log10 C", {}, {sensors::kUpdateBoundarySeconds / 3600.0}};
        for (const auto& [name, list] : traces) {
            Series ser;
            ser.label = name;
            auto it = style.find(name);
            if (it != style.end()) {
                ser.color = it->second.first;
                ser.dashed = it->second.second;
            }
            for (std::size_t t = 0; t < list[s].times.size(); ++t) {
                ser.x.push_back(list[s].times[t] / 3600.0);
                ser.y.push_back(list[s].values[t]);
            }
            p.series.push_back(std::move(ser));
        }
        panels.push_back(std::move(p));
    }
    write_svg(path, panels, 3);
}

}  // namespace

std::vector<sensors::SensorSpec> configured_sensors(const ExperimentConfig& config) {
    const auto& src = config.data.source;
    std::vector<sensors::SensorSpec> out;
    if (config.evaluation.sensor_file.empty()) {
        out = sensors::default_sensor_layout(src.x_release, src.y_release, config.evaluation.sensors_per_band);
    } else {
        out = sensors::read_sensor_list(config.evaluation.sensor_file);
    }
    for (auto& s : out) s.update_distance(src.x_release, src.y_release);
    return out;
}

SensorOutcome run_update_experiment(const ExperimentConfig& config, ModelSet& models, const Logger& log) {
    const auto manifest = open_corpus(config);
    const auto& norm = models.normalization;
    auto tests = manifest.select(data::Split::Test);
    if (config.evaluation.max_test_runs > 0 && tests.size() > static_cast<std::size_t>(config.evaluation.max_test_runs)) {
        tests.resize(static_cast<std::size_t>(config.evaluation.max_test_runs));
    }
    SensorOutcome outcome;
    outcome.sensors = configured_sensors(config);
    const std::set<std::int64_t> schedule(config.evaluation.update_schedule.begin(), config.evaluation.update_schedule.end());
    const auto dir = config.eval_dir() / "sensors";
    std::ostringstream errors_csv;
    errors_csv << "run,sensor,band,model,overall,before,after\n";
    for (const auto* entry : tests) {
        auto file = data::read_run_file(config.corpus_dir() / entry->file);
        const auto lr = data::log_normalize(file.sample.lr, norm);
        const auto hr = data::log_normalize(file.sample.hr, norm);
        const auto steps = lr.steps() - nn::kWindow;
        const auto plain = rollout_dual_stage(models, lr, hr, {steps, {}});
        const auto updated = rollout_dual_stage(models, lr, hr, {steps, schedule});

        SensorRunResult rr;
        rr.run_id = file.sample.run_id;
        const std::int64_t first = schedule.empty() ? plain.hr.steps() : *schedule.begin();
        for (std::int64_t t = 0; t < first && rr.prefix_equal; ++t) {
            const auto a = plain.hr.frame(t);
            const auto b = updated.hr.frame(t);
            rr.prefix_equal = std::equal(a.begin(), a.end(), b.begin());
        }
        std::map<std::string, std::vector<sensors::SensorTrace>> traces;
        traces["ground truth"] = sensors::extract_traces(file.sample.hr, outcome.sensors);
        traces["DST3D-UNet-SR"] = sensors::extract_traces(linear(plain.hr, norm), outcome.sensors);
        traces["DST3D-UNet-SR updated"] = sensors::extract_traces(linear(updated.hr, norm), outcome.sensors);
        if (models.hrtm) {
            const auto h = rollout_hrtm(models, hr, {steps, {}});
            traces["HRTM"] = sensors::extract_traces(linear(h.frames, norm), outcome.sensors);
        }
        std::map<std::string, std::vector<sensors::SensorTrace>> compared(traces);
        const auto truth = compared["ground truth"];
        compared.erase("ground truth");
        rr.errors = sensors::compare_traces(truth, compared);

        double plain_sum = 0, upd_sum = 0;
        int near = 0;
        for (const auto& e : rr.errors) {
            const auto& spec = *std::find_if(outcome.sensors.begin(), outcome.sensors.end(),
                                             [&](const auto& s) { return s.id == e.sensor_id; });
            errors_csv << rr.run_id << ',' << e.sensor_id << ',' << spec.band() << ',' << e.model << ',' << e.overall
                       << ',' << e.before << ',' << e.after << '\n';
            if (spec.band() != "near") continue;
            if (e.model == "DST3D-UNet-SR") {
                plain_sum += e.after;
                ++near;
            } else if (e.model == "DST3D-UNet-SR updated") {
                upd_sum += e.after;
            }
        }
        if (near == 0) throw InvalidConfig("no sensors in the near band (0-0.54 km)");
        rr.near_after_plain = plain_sum / near;
        rr.near_after_updated = upd_sum / near;
        if (rr.near_after_updated <= rr.near_after_plain) ++outcome.improved_runs;

        outcome.reports["plain"].runs.push_back(eval::evaluate_rollout(plain.hr, hr, norm, config.evaluation.metrics, rr.run_id));
        outcome.reports["updated"].runs.push_back(eval::evaluate_rollout(updated.hr, hr, norm, config.evaluation.metrics, rr.run_id));

        data::write_text_atomic(dir / ("traces_" + rr.run_id + ".csv"), sensors::traces_csv(traces));
        if (config.output.plots) trace_plot(dir / ("traces_" + rr.run_id + ".svg"), outcome.sensors, traces);
        say(log, rr.run_id + ": near-band error after 2.5 h " + std::to_string(rr.near_after_plain) + " -> " +
                     std::to_string(rr.near_after_updated) + " with updates");
        outcome.runs.push_back(std::move(rr));
    }

    // Per-sensor improvement table, averaged over runs.
    nlohmann::json table = nlohmann::json::array();
    for (const auto& spec : outcome.sensors) {
        double plain = 0, upd = 0;
        int n = 0;
        for (const auto& r : outcome.runs) {
            for (const auto& e : r.errors) {
                if (e.sensor_id != spec.id) continue;
                if (e.model == "DST3D-UNet-SR") plain += e.after, ++n;
                if (e.model == "DST3D-UNet-SR updated") upd += e.after;
            }
        }
        if (n == 0) continue;
        table.push_back({{"sensor", spec.id},
                         {"band", spec.band()},
                         {"distance_m", spec.distance_to_source},
                         {"after_error_plain", plain / n},
                         {"after_error_updated", upd / n},
                         {"improvement", (plain - upd) / n}});
    }
    nlohmann::json summary = {{"config_hash", config.hash()},
                              {"update_schedule", config.evaluation.update_schedule},
                              {"boundary_seconds", sensors::kUpdateBoundarySeconds},
                              {"sensors", nlohmann::json::array()},
                              {"runs", nlohmann::json::array()},
                              {"improved_runs", outcome.improved_runs},
                              {"test_runs", outcome.runs.size()},
                              {"strict_majority_improved", 2 * outcome.improved_runs > static_cast<int>(outcome.runs.size())},
                              {"per_sensor", table}};
    for (const auto& s : outcome.sensors)
        summary["sensors"].push_back({{"id", s.id}, {"x", s.x}, {"y", s.y}, {"distance_m", s.distance_to_source}, {"band", s.band()}});
    for (const auto& r : outcome.runs)
        summary["runs"].push_back({{"run", r.run_id},
                                   {"near_after_plain", r.near_after_plain},
                                   {"near_after_updated", r.near_after_updated},
                                   {"prefix_equal", r.prefix_equal}});
    for (auto& [name, rep] : outcome.reports) {
        rep.model = name;
        summary["metrics"][name] = rep.aggregate_json();
        data::write_text_atomic(dir / ("metrics_" + name + ".csv"), rep.to_csv());
    }
    sensors::write_sensor_list((dir / "sensors.csv").string(), outcome.sensors);
    data::write_text_atomic(dir / "errors.csv", errors_csv.str());
    data::write_text_atomic(dir / "summary.json", summary.dump(2));
    return outcome;
}

SensorOutcome cmd_sensors(const ExperimentConfig& config, const Logger& log) {
    const bool hrtm = config.evaluation.compare_hrtm && std::filesystem::exists(checkpoint_path(config, ModelKind::HRTM));
    auto models = load_models(config, true, hrtm);
    return run_update_experiment(config, models, log);
}

std::string hardware_string() {
    std::string model = "unknown cpu";
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("model name", 0) == 0) {
            model = line.substr(line.find(':') + 2);
            break;
        }
    }
    return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " logical cores, torch threads " +
           std::to_string(torch::get_num_threads());
}

nlohmann::json TimingRecord::to_json() const {
    return {{"model", model},       {"mean_s", mean_s},       {"std_s", std_s},   {"median_s", median_s},
            {"repetitions", repetitions}, {"warmup", warmup}, {"samples_s", samples}, {"hardware", hardware}};
}

TimingRecord time_steps(const std::string& model, int warmup, int repetitions, const std::function<void()>& fn) {
    if (repetitions < 1 || warmup < 0) throw InvalidArgument("invalid repetition counts");
    TimingRecord rec;
    rec.model = model;
    rec.warmup = warmup;
    rec.repetitions = repetitions;
    for (int i = 0; i < warmup + repetitions; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (i >= warmup) rec.samples.push_back(s);
    }
    rec.mean_s = std::accumulate(rec.samples.begin(), rec.samples.end(), 0.0) / repetitions;
    double sq = 0.0;
    for (double s : rec.samples) sq += (s - rec.mean_s) * (s - rec.mean_s);
    rec.std_s = std::sqrt(sq / repetitions);
    auto sorted = rec.samples;
    std::sort(sorted.begin(), sorted.end());
    rec.median_s = repetitions % 2 ? sorted[static_cast<std::size_t>(repetitions / 2)]
                                   : 0.5 * (sorted[static_cast<std::size_t>(repetitions / 2 - 1)] + sorted[static_cast<std::size_t>(repetitions / 2)]);
    rec.hardware = hardware_string();
    return rec;
}

BenchmarkOutcome benchmark_models(ModelSet& models, int warmup, int repetitions) {
    if (!models.tm || !models.srm || !models.hrtm) throw InvalidArgument("benchmark needs TM, SRM and HRTM");
    torch::manual_seed(0);
    const auto& ls = models.tm->config().input_shape;
    const auto& hs = models.hrtm->config().input_shape;
    const auto x_lr = torch::rand({1, models.tm->config().window, ls.z, ls.y, ls.x});
    const auto x_hr = torch::rand({1, models.hrtm->config().window, hs.z, hs.y, hs.x});
    BenchmarkOutcome out;
    out.dual_stage = time_steps("DST3D-UNet-SR (TM + SRM)", warmup, repetitions, [&] {
        auto lr = nn::predict_step(models.tm, x_lr);
        auto hr = nn::super_resolve(models.srm, lr.squeeze(1));
        (void)hr;
    });
    out.hrtm = time_steps("HRTM", warmup, repetitions, [&] { (void)nn::predict_step(models.hrtm, x_hr); });
    out.ratio = out.hrtm.median_s / out.dual_stage.median_s;
    return out;
}

BenchmarkOutcome cmd_benchmark(const ExperimentConfig& config, const Logger& log) {
    auto models = load_models(config, true, true);
    auto out = benchmark_models(models, config.evaluation.benchmark_warmup, config.evaluation.benchmark_repetitions);
    nlohmann::json j = {{"config_hash", config.hash()},
                        {"dual_stage", out.dual_stage.to_json()},
                        {"hrtm", out.hrtm.to_json()},
                        {"ratio_hrtm_over_dual_stage", out.ratio},
                        {"statistic", "median of repetitions, warm-up excluded"}};
    data::write_text_atomic(config.eval_dir() / "benchmark.json", j.dump(2));
    say(log, "per-step median: dual-stage " + std::to_string(out.dual_stage.median_s) + " s, HRTM " +
                 std::to_string(out.hrtm.median_s) + " s, ratio " + std::to_string(out.ratio));
    return out;
}

std::filesystem::path cmd_report(const ExperimentConfig& config) {
    nlohmann::json report = {{"config_hash", config.hash()}, {"hardware", hardware_string()}};
    auto load = [](const std::filesystem::path& p) -> std::optional<nlohmann::json> {
        if (!std::filesystem::exists(p)) return std::nullopt;
        std::ifstream in(p);
        return nlohmann::json::parse(in);
    };
    std::ostringstream md;
    md << "# plumesr experiment report\n\nconfig hash `" << config.hash() << "`\n\n";
    if (auto m = load(config.eval_dir() / "metrics_summary.json")) {
        report["metrics"] = *m;
        md << "## Metrics over " << (*m)["test_runs"] << " test run(s)\n\n| model | MSE | IoU | SSIM | CM |\n|---|---|---|---|---|\n";
        for (auto& [name, j] : (*m)["models"].items()) {
            md << "| " << name;
            for (const auto& k : eval::kMetricNames) {
                char buf[64];
                std::snprintf(buf, sizeof buf, " %.3g ± %.2g", j["metrics"][k]["mean"].get<double>(), j["metrics"][k]["std"].get<double>());
                md << " |" << buf;
            }
            md << " |\n";
        }
        md << '\n';
    }
    for (const char* kind : {"tm", "srm", "hrtm"}) {
        const auto p = config.models_dir() / (std::string(kind) + ".ckpt");
        if (!std::filesystem::exists(p)) continue;
        const auto info = nn::read_checkpoint_info(p);
        report["models"][kind] = {{"parameters", info.meta["parameter_count"]},
                                  {"epochs", info.meta["state"]["epoch"]},
                                  {"best_val_loss", info.meta["state"]["best_val_loss"]},
                                  {"best_epoch", info.meta["state"]["best_epoch"]}};
        md << "- " << kind << ": " << info.meta["parameter_count"] << " parameters, " << info.meta["state"]["epoch"]
           << " epochs, best val MSE " << info.meta["state"]["best_val_loss"] << "\n";
    }
    if (auto s = load(config.models_dir() / "srm_baseline.json")) report["srm_baseline"] = *s;
    if (auto s = load(config.eval_dir() / "sensors" / "summary.json")) {
        report["sensors"] = {{"improved_runs", (*s)["improved_runs"]}, {"test_runs", (*s)["test_runs"]},
                             {"per_sensor", (*s)["per_sensor"]}};
        md << "\n## Observational updates\n\nnear-band error after 2.5 h improved on " << (*s)["improved_runs"] << " of "
           << (*s)["test_runs"] << " test run(s)\n";
    }
    if (auto b = load(config.eval_dir() / "benchmark.json")) {
        report["benchmark"] = *b;
        md << "\n## Per-step inference\n\nDST3D-UNet-SR median " << (*b)["dual_stage"]["median_s"] << " s, HRTM median "
           << (*b)["hrtm"]["median_s"] << " s, ratio " << (*b)["ratio_hrtm_over_dual_stage"] << " on "
           << (*b)["dual_stage"]["hardware"] << "\n";
    }
    data::write_text_atomic(config.output_dir() / "report.json", report.dump(2));
    const auto md_path = config.output_dir() / "report.md";
    data::write_text_atomic(md_path, md.str());
    return md_path;
}

}  // namespace plumesr::experiment
