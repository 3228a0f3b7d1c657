#include "plumesr/experiment/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <thread>

#include "plumesr/data/split.hpp"
#include "plumesr/error.hpp"
#include "plumesr/plume/conditions.hpp"
#include "plumesr/plume/wind.hpp"
#include "plumesr/random.hpp"

namespace plumesr::experiment {

plume::TerrainField corpus_terrain(const DataSection& data) { return plume::generate_terrain(data.sim, data.terrain_seed); }

data::DualResolutionSample generate_sample(const DataSection& data, const plume::TerrainField& terrain,
                                           const plume::WindCondition& condition, const std::string& run_id,
                                           std::uint64_t seed, plume::SimulationResult* raw) {
    const auto wind = plume::build_wind_field(terrain, condition, data.sim);
    auto result = plume::simulate_release(terrain, wind, data.source, data.sim);
    const auto crop = data::southeast_crop(result.sequence, data.source.x_release, data.source.y_release,
                                           data.crop_extent_zyx);
    auto sample = data::build_sample(result.sequence, crop, data.lr_shape, data.hr_shape);
    sample.run_id = run_id;
    sample.condition = condition;
    sample.seed = seed;
    if (raw != nullptr) *raw = std::move(result);
    return sample;
}

std::string run_id_for(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "run_%03d", index);
    return buf;
}

namespace {

struct LogRange {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(const ConcentrationSequence& s, double floor) {
        for (float v : s.values()) {
            const double l = std::log10(std::max(static_cast<double>(v), floor));
            lo = std::min(lo, l);
            hi = std::max(hi, l);
        }
    }
};

}  // namespace

data::Manifest cmd_generate(const ExperimentConfig& config, const GenerateOptions& options) {
    const auto& d = config.data;
    const auto dir = config.corpus_dir();
    const auto manifest_path = dir / "manifest.json";
    if (std::filesystem::exists(manifest_path) && !options.force) {
        throw InvalidArgument("corpus already exists at " + dir.string() + "; pass --force to overwrite");
    }
    d.sim.validate();
    const auto conditions = plume::sample_conditions(d.runs, d.seed, d.ranges);
    const auto split = data::split_runs(static_cast<std::size_t>(d.runs), d.split_seed);
    const auto terrain = corpus_terrain(d);
    const std::string hash = config.hash();

    std::vector<LogRange> ranges(static_cast<std::size_t>(d.runs));
    std::atomic<int> next{0};
    std::mutex log_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (int i = next++; i < d.runs; i = next++) {
            try {
                const auto seed = mix_seed(d.seed, static_cast<std::uint64_t>(i));
                data::RunFile file;
                file.sample = generate_sample(d, terrain, conditions[static_cast<std::size_t>(i)], run_id_for(i), seed);
                file.provenance = {{"config_hash", hash},
                                   {"seed", d.seed},
                                   {"run_seed", seed},
                                   {"terrain_seed", d.terrain_seed},
                                   {"run_index", i}};
                ranges[static_cast<std::size_t>(i)].add(file.sample.lr, d.log_floor);
                ranges[static_cast<std::size_t>(i)].add(file.sample.hr, d.log_floor);
                data::write_run_file(dir / "runs" / (run_id_for(i) + ".plm"), file);
                if (options.log) {
                    std::lock_guard lock(log_mutex);
                    const auto& c = file.sample.condition;
                    char buf[128];
                    std::snprintf(buf, sizeof buf, "%s: w_s=%.3f m/s w_d=%.3f deg", run_id_for(i).c_str(), c.speed_ms,
                                  c.direction_deg);
                    options.log(buf);
                }
            } catch (...) {
                std::lock_guard lock(log_mutex);
                if (!failure) failure = std::current_exception();
                next = d.runs;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < std::min(d.workers, d.runs); ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    data::Manifest m;
    auto assign = [&](const std::vector<std::size_t>& ids, data::Split s) {
        for (auto i : ids) {
            const auto seed = mix_seed(d.seed, static_cast<std::uint64_t>(i));
            m.runs.push_back({run_id_for(static_cast<int>(i)), "runs/" + run_id_for(static_cast<int>(i)) + ".plm", s,
                              seed, conditions[i]});
        }
    };
    assign(split.train, data::Split::Train);
    assign(split.val, data::Split::Val);
    assign(split.test, data::Split::Test);
    std::sort(m.runs.begin(), m.runs.end(), [](const auto& a, const auto& b) { return a.run_id < b.run_id; });

    LogRange train;
    for (auto i : split.train) {
        train.lo = std::min(train.lo, ranges[i].lo);
        train.hi = std::max(train.hi, ranges[i].hi);
    }
    m.normalization = {d.log_floor, train.lo, train.hi};
    m.normalization.validate();
    m.provenance = {{"config_hash", hash},
                    {"seed", d.seed},
                    {"terrain_seed", d.terrain_seed},
                    {"split_seed", d.split_seed},
                    {"runs", d.runs},
                    {"command", "plumesr generate --config <config with hash " + hash + ">"},
                    {"config", config.to_json()["data"]}};
    m.provenance["config"].erase("corpus_dir");
    m.provenance["config"].erase("workers");
    data::write_manifest(manifest_path, m);
    return m;
}

data::Manifest open_corpus(const ExperimentConfig& config) {
    const auto dir = config.corpus_dir();
    const auto path = dir / "manifest.json";
    if (!std::filesystem::exists(path)) {
        throw IoError("no corpus at " + dir.string() + "; run `plumesr generate` first");
    }
    auto m = data::read_manifest(path);
    for (const auto& r : m.runs) {
        if (!std::filesystem::exists(dir / r.file)) throw IoError("corpus is missing run file " + (dir / r.file).string());
    }
    return m;
}

}  // namespace plumesr::experiment
