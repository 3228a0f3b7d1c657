#include "plumesr/experiment/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "plumesr/error.hpp"

namespace plumesr::experiment {

using nlohmann::json;

namespace {

json shape_json(Shape3 s) { return json::array({s.z, s.y, s.x}); }
Shape3 shape_from(const json& j) { return {j.at(0).get<std::int64_t>(), j.at(1).get<std::int64_t>(), j.at(2).get<std::int64_t>()}; }

json sim_json(const plume::SimConfig& s) {
    return {{"domain_extent_zyx", s.domain_extent_zyx},
            {"grid_cells", shape_json(s.grid_cells)},
            {"dt_solver", s.dt_solver},
            {"dt_output", s.dt_output},
            {"n_output_steps", s.n_output_steps},
            {"diffusivity", s.diffusivity},
            {"decay_halflife", s.decay_halflife},
            {"cfl_limit", s.cfl_limit},
            {"roughness_length", s.roughness_length},
            {"reference_height", s.reference_height},
            {"projection_tolerance", s.projection_tolerance},
            {"terrain",
             {{"amplitude_m", s.terrain.amplitude_m},
              {"correlation_length_m", s.terrain.correlation_length_m},
              {"features", s.terrain.features}}}};
}

plume::SimConfig sim_from(const json& j) {
    plume::SimConfig s;
    s.domain_extent_zyx = j.at("domain_extent_zyx").get<Vec3>();
    s.grid_cells = shape_from(j.at("grid_cells"));
    s.dt_solver = j.at("dt_solver").get<double>();
    s.dt_output = j.at("dt_output").get<double>();
    s.n_output_steps = j.at("n_output_steps").get<std::int64_t>();
    s.diffusivity = j.at("diffusivity").get<double>();
    s.decay_halflife = j.at("decay_halflife").get<double>();
    s.cfl_limit = j.at("cfl_limit").get<double>();
    s.roughness_length = j.at("roughness_length").get<double>();
    s.reference_height = j.at("reference_height").get<double>();
    s.projection_tolerance = j.at("projection_tolerance").get<double>();
    const auto& t = j.at("terrain");
    s.terrain.amplitude_m = t.at("amplitude_m").get<double>();
    s.terrain.correlation_length_m = t.at("correlation_length_m").get<double>();
    s.terrain.features = t.at("features").get<int>();
    s.validate();
    return s;
}

json metric_json(const eval::MetricConfig& m) {
    return {{"iou_threshold", m.iou_threshold},
            {"ssim_window", m.ssim_window},
            {"ssim_k1", m.ssim_k1},
            {"ssim_k2", m.ssim_k2},
            {"ssim_data_range", m.ssim_data_range},
            {"cm_normalization", m.cm_normalization == eval::MassNormalization::Relative ? "relative" : "absolute"},
            {"cell_volume", m.cell_volume}};
}

eval::MetricConfig metric_from(const json& j) {
    eval::MetricConfig m;
    m.iou_threshold = j.at("iou_threshold").get<double>();
    m.ssim_window = j.at("ssim_window").get<int>();
    m.ssim_k1 = j.at("ssim_k1").get<double>();
    m.ssim_k2 = j.at("ssim_k2").get<double>();
    m.ssim_data_range = j.at("ssim_data_range").get<double>();
    const auto mode = j.at("cm_normalization").get<std::string>();
    if (mode == "relative") {
        m.cm_normalization = eval::MassNormalization::Relative;
    } else if (mode == "absolute") {
        m.cm_normalization = eval::MassNormalization::Absolute;
    } else {
        throw InvalidConfig("cm_normalization must be relative or absolute");
    }
    m.cell_volume = j.at("cell_volume").get<double>();
    try {
        m.validate();
    } catch (const InvalidArgument& e) {
        throw InvalidConfig(e.what());
    }
    return m;
}

/// Every key of `user` must exist in `reference`; objects are checked recursively.
void check_keys(const json& user, const json& reference, const std::string& prefix) {
    if (!user.is_object()) return;
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!reference.is_object() || !reference.contains(it.key())) throw InvalidConfig("unknown config key '" + key + "'");
        if (it.value().is_object()) check_keys(it.value(), reference.at(it.key()), key);
    }
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
    tm.train.epochs = 1000;
    srm.train.epochs = 100;
    hrtm.train.epochs = 100;
    // Unit emission gives peak concentrations near 1e-4, so the plume outline
    // sits around 1e-7 rather than at the 10^1 of the original corpus.
    evaluation.metrics.iou_threshold = -7.0;
}

json ExperimentConfig::to_json() const {
    json j;
    j["data"] = {{"runs", data.runs},
                 {"seed", data.seed},
                 {"terrain_seed", data.terrain_seed},
                 {"split_seed", data.split_seed},
                 {"sim", sim_json(data.sim)},
                 {"source",
                  {{"x_release", data.source.x_release},
                   {"y_release", data.source.y_release},
                   {"z_release", data.source.z_release},
                   {"emission_rate", data.source.emission_rate}}},
                 {"ranges",
                  {{"speed_min", data.ranges.speed_min},
                   {"speed_max", data.ranges.speed_max},
                   {"direction_min", data.ranges.direction_min},
                   {"direction_max", data.ranges.direction_max}}},
                 {"crop_extent_zyx", data.crop_extent_zyx},
                 {"lr_shape", shape_json(data.lr_shape)},
                 {"hr_shape", shape_json(data.hr_shape)},
                 {"log_floor", data.log_floor},
                 {"corpus_dir", data.corpus_dir},
                 {"workers", data.workers}};
    j["tm"] = {{"model", nn::to_json(tm.model)}, {"train", nn::to_json(tm.train)}};
    j["srm"] = {{"model", nn::to_json(srm.model)}, {"train", nn::to_json(srm.train)}};
    j["hrtm"] = {{"model", nn::to_json(hrtm.model)}, {"train", nn::to_json(hrtm.train)}};
    j["evaluation"] = {{"metrics", metric_json(evaluation.metrics)},
                       {"sensor_file", evaluation.sensor_file},
                       {"sensors_per_band", evaluation.sensors_per_band},
                       {"update_schedule", evaluation.update_schedule},
                       {"showcase",
                        {{"speed_ms", evaluation.showcase.speed_ms}, {"direction_deg", evaluation.showcase.direction_deg}}},
                       {"compare_hrtm", evaluation.compare_hrtm},
                       {"benchmark_repetitions", evaluation.benchmark_repetitions},
                       {"benchmark_warmup", evaluation.benchmark_warmup},
                       {"max_test_runs", evaluation.max_test_runs}};
    j["output"] = {{"dir", output.dir}, {"plots", output.plots}};
    j["threads"] = threads;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& user) {
    const json reference = ExperimentConfig().to_json();
    check_keys(user, reference, "");
    json j = reference;
    j.merge_patch(user);
    ExperimentConfig c;
    try {
        const auto& d = j.at("data");
        c.data.runs = d.at("runs").get<int>();
        c.data.seed = d.at("seed").get<std::uint64_t>();
        c.data.terrain_seed = d.at("terrain_seed").get<std::uint64_t>();
        c.data.split_seed = d.at("split_seed").get<std::uint64_t>();
        c.data.sim = sim_from(d.at("sim"));
        const auto& s = d.at("source");
        c.data.source = {s.at("x_release").get<double>(), s.at("y_release").get<double>(),
                         s.at("z_release").get<double>(), s.at("emission_rate").get<double>()};
        const auto& r = d.at("ranges");
        c.data.ranges = {r.at("speed_min").get<double>(), r.at("speed_max").get<double>(),
                         r.at("direction_min").get<double>(), r.at("direction_max").get<double>()};
        c.data.crop_extent_zyx = d.at("crop_extent_zyx").get<Vec3>();
        c.data.lr_shape = shape_from(d.at("lr_shape"));
        c.data.hr_shape = shape_from(d.at("hr_shape"));
        c.data.log_floor = d.at("log_floor").get<double>();
        c.data.corpus_dir = d.at("corpus_dir").get<std::string>();
        c.data.workers = d.at("workers").get<int>();

        c.tm.model = nn::temporal_config_from_json(j.at("tm").at("model"));
        c.tm.train = nn::train_config_from_json(j.at("tm").at("train"));
        c.srm.model = nn::srm_config_from_json(j.at("srm").at("model"));
        c.srm.train = nn::train_config_from_json(j.at("srm").at("train"));
        c.hrtm.model = nn::hrtm_config_from_json(j.at("hrtm").at("model"));
        c.hrtm.train = nn::train_config_from_json(j.at("hrtm").at("train"));

        const auto& e = j.at("evaluation");
        c.evaluation.metrics = metric_from(e.at("metrics"));
        c.evaluation.sensor_file = e.at("sensor_file").get<std::string>();
        c.evaluation.sensors_per_band = e.at("sensors_per_band").get<int>();
        c.evaluation.update_schedule = e.at("update_schedule").get<std::vector<std::int64_t>>();
        c.evaluation.showcase = {e.at("showcase").at("speed_ms").get<double>(),
                                 e.at("showcase").at("direction_deg").get<double>()};
        c.evaluation.compare_hrtm = e.at("compare_hrtm").get<bool>();
        c.evaluation.benchmark_repetitions = e.at("benchmark_repetitions").get<int>();
        c.evaluation.benchmark_warmup = e.at("benchmark_warmup").get<int>();
        c.evaluation.max_test_runs = e.at("max_test_runs").get<int>();

        c.output.dir = j.at("output").at("dir").get<std::string>();
        c.output.plots = j.at("output").at("plots").get<bool>();
        c.threads = j.at("threads").get<int>();
    } catch (const json::exception& ex) {
        throw InvalidConfig(std::string("malformed config: ") + ex.what());
    }
    if (c.data.runs < 3) throw InvalidConfig("data.runs must be >= 3");
    if (c.data.workers < 1) throw InvalidConfig("data.workers must be >= 1");
    if (c.evaluation.benchmark_repetitions < 10) throw InvalidConfig("benchmark_repetitions must be >= 10");
    if (c.evaluation.benchmark_warmup < 0) throw InvalidConfig("benchmark_warmup must be >= 0");
    return c;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string ExperimentConfig::hash() const {
    // Locations and scheduling knobs do not change any result.
    json j = to_json();
    j.erase("output");
    j.erase("threads");
    j["data"].erase("corpus_dir");
    j["data"].erase("workers");
    return fnv1a_hex(j.dump());
}

std::filesystem::path ExperimentConfig::output_dir() const { return output.dir; }

std::filesystem::path ExperimentConfig::corpus_dir() const {
    const std::filesystem::path p(data.corpus_dir);
    return p.is_absolute() ? p : output_dir() / p;
}

void apply_environment(ExperimentConfig& config) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') config.output.dir = dir;
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    apply_environment(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& ex) {
        throw InvalidConfig("config " + path.string() + " is not valid JSON: " + ex.what());
    }
    auto c = ExperimentConfig::from_json(j);
    apply_environment(c);
    return c;
}

}  // namespace plumesr::experiment
