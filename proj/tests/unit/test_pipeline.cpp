#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "plumesr/error.hpp"
#include "plumesr/experiment/datasets.hpp"
#include "plumesr/experiment/pipeline.hpp"

// libtorch defines its own fatal CHECK; keep doctest's.
#undef CHECK
#define CHECK DOCTEST_CHECK

using namespace plumesr;
using namespace plumesr::experiment;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// A corpus of three small runs and models a few thousand parameters wide.
ExperimentConfig tiny_config(const std::filesystem::path& out) {
    ExperimentConfig c;
    c.output.dir = out.string();
    c.data.runs = 3;
    c.data.sim = testing::small_sim();
    c.data.sim.n_output_steps = 8;
    c.data.source.x_release = 1000.0;
    c.data.source.y_release = 1000.0;
    c.data.crop_extent_zyx = {500.0, 1000.0, 1000.0};
    c.data.lr_shape = {8, 8, 8};
    c.data.hr_shape = {32, 32, 32};
    c.tm.model.channels = {4, 8, 16};
    c.tm.model.input_shape = {8, 8, 8};
    c.srm.model.channels = {4, 8, 4};
    c.srm.model.input_shape = {8, 8, 8};
    c.srm.model.output_shape = {32, 32, 32};
    c.hrtm.model.num_layers = 1;
    c.hrtm.model.input_shape = {32, 32, 32};
    for (auto* t : {&c.tm.train, &c.srm.train, &c.hrtm.train}) {
        t->epochs = 1;
        t->batch_size = 4;
    }
    c.evaluation.update_schedule = {6};
    c.evaluation.showcase = {5.7, 350.5};
    c.evaluation.benchmark_repetitions = 10;
    c.evaluation.benchmark_warmup = 1;
    return c;
}

void write_sensors(const ExperimentConfig& c) {
    const auto p = c.output_dir() / "sensors.csv";
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p) << "id,x,y\nnear1,1200,900\nnear2,1100,700\n";
}

}  // namespace

TEST_CASE("generate is deterministic, refuses to overwrite and records provenance") {
    testing::TempDir dir("generate");
    auto c = tiny_config(dir.path / "a");
    CHECK_THROWS_AS(open_corpus(c), IoError);
    const auto m = cmd_generate(c);
    CHECK((m.split_counts() == std::array<std::size_t, 3>{1, 1, 1}));
    CHECK(m.provenance["config_hash"] == c.hash());
    CHECK_THROWS_AS(cmd_generate(c), InvalidArgument);

    auto d = tiny_config(dir.path / "b");
    cmd_generate(d);
    CHECK(slurp(c.corpus_dir() / "manifest.json") == slurp(d.corpus_dir() / "manifest.json"));
    for (const auto& r : m.runs) {
        CHECK(slurp(c.corpus_dir() / r.file) == slurp(d.corpus_dir() / r.file));
        const auto f = data::read_run_file(c.corpus_dir() / r.file);
        f.sample.validate(c.data.lr_shape, c.data.hr_shape);
        CHECK(f.provenance["config_hash"] == c.hash());
        CHECK(f.sample.lr.steps() == 8);
    }
    const auto train = m.select(data::Split::Train);
    CorpusFrames frames(c.corpus_dir(), train, m.normalization, data::Resolution::Low);
    const auto all = frames.sequence(0);
    CHECK(all.min().item<float>() >= 0.0f);
    CHECK(all.max().item<float>() <= 1.0f + 1e-6f);
}

TEST_CASE("train, evaluate, sensors, benchmark and report on a tiny corpus") {
    testing::TempDir dir("pipeline");
    auto c = tiny_config(dir.path / "out");
    CHECK_THROWS_AS(cmd_train(c, ModelKind::TM), IoError);
    cmd_generate(c);
    write_sensors(c);
    c.evaluation.sensor_file = (c.output_dir() / "sensors.csv").string();
    CHECK_THROWS_AS(load_models(c, true, false), IoError);

    const auto tm = cmd_train(c, ModelKind::TM);
    CHECK(tm.epochs == 1);
    CHECK(std::filesystem::exists(c.models_dir() / "tm.ckpt"));
    CHECK(std::filesystem::exists(c.models_dir() / "tm_history.csv"));
    c.tm.train.epochs = 2;
    const auto resumed = cmd_train(c, ModelKind::TM, {true, -1, {}});
    CHECK(resumed.epochs == 2);
    CHECK(resumed.history.size() == 2);

    const auto srm = cmd_train(c, ModelKind::SRM);
    CHECK(srm.baseline.contains("trilinear_val_mse"));
    CHECK(srm.baseline.contains("srm_val_mse"));
    cmd_train(c, ModelKind::HRTM);

    auto models = load_models(c, true, true);
    const auto bypass = cmd_rollout_evaluate(c, {true, {}});
    for (const auto& [name, rep] : bypass.reports) {
        REQUIRE(rep.runs.size() == 1);
        CHECK(rep.runs[0].mse.size() == 8);
        CHECK(rep.aggregate(0).mean == 0.0);
        CHECK(rep.aggregate(1).mean == 1.0);
        CHECK(rep.aggregate(2).mean == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rep.aggregate(3).mean == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }

    const auto ev = cmd_rollout_evaluate(c);
    REQUIRE(ev.reports.count("DST3D-UNet-SR") == 1);
    REQUIRE(ev.reports.count("HRTM") == 1);
    const auto& dual = ev.reports.at("DST3D-UNet-SR");
    CHECK(dual.runs[0].mse.size() == 8);
    {
        // Seeding frames are the SRM applied to ground truth.
        const auto m = open_corpus(c);
        const auto run = load_normalized_run(c.corpus_dir() / m.select(data::Split::Test).front()->file, models.normalization);
        const auto sr = super_resolve_sequence(models.srm, run.lr, run.hr);
        for (int t = 0; t < 5; ++t)
            CHECK(dual.runs[0].mse[t] == doctest::Approx(eval::mse(sr.frame(t), run.hr.frame(t))).epsilon(1e-9));
    }
    CHECK(ev.reports.at("HRTM").runs[0].mse[0] == 0.0);
    for (const char* f : {"metrics_dst3d.csv", "metrics_hrtm.csv", "metrics_summary.json", "plots/metrics.svg"})
        CHECK(std::filesystem::exists(c.eval_dir() / f));
    for (const char* f : {"x_mean.png", "y_mean.png", "z_mean.png", "z_slices.png"})
        CHECK(std::filesystem::exists(c.eval_dir() / "plots" / "showcase" / f));

    const auto sens = run_update_experiment(c, models);
    REQUIRE(sens.runs.size() == 1);
    CHECK(sens.runs[0].prefix_equal);
    CHECK(sens.sensors.size() == 2);
    CHECK(std::filesystem::exists(c.eval_dir() / "sensors" / "summary.json"));

    const auto bench = benchmark_models(models, 1, 10);
    CHECK(bench.dual_stage.samples.size() == 10);
    CHECK(bench.hrtm.repetitions == 10);
    CHECK(bench.ratio > 0.0);

    const auto md = cmd_report(c);
    CHECK(std::filesystem::exists(md));
    CHECK(std::filesystem::exists(c.output_dir() / "report.json"));
}

TEST_CASE("timing records exclude warm-up") {
    int calls = 0;
    const auto r = time_steps("x", 3, 10, [&] { ++calls; });
    CHECK(calls == 13);
    CHECK(r.samples.size() == 10);
    CHECK(r.median_s >= 0.0);
    CHECK(!r.hardware.empty());
    CHECK_THROWS_AS(time_steps("x", 0, 0, [] {}), InvalidArgument);
}

TEST_CASE("least-squares slope") {
    std::vector<double> v{0, 1, 4, 9, 16, 25};
    CHECK((least_squares_slope({1, 3, 5, 7}, 0, 3) == doctest::Approx(2.0)));
    CHECK((least_squares_slope(v, 2, 4) == doctest::Approx(6.0)));
    CHECK_THROWS_AS(least_squares_slope(v, 4, 9), InvalidArgument);
}
