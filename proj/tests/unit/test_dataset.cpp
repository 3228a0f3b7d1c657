#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "helpers.hpp"
#include "plumesr/data/container.hpp"
#include "plumesr/data/normalization.hpp"
#include "plumesr/data/split.hpp"
#include "plumesr/data/transforms.hpp"
#include "plumesr/data/windows.hpp"
#include "plumesr/error.hpp"

using namespace plumesr;
using namespace plumesr::data;

TEST_CASE("crop cell counts use floor division") {
    ConcentrationSequence paper(1, {200, 250, 250}, 600.0, {20.0, 40.0, 40.0});
    CHECK(crop_cells(paper, {}) == Shape3{100, 125, 125});
    ConcentrationSequence desk(1, {50, 125, 125}, 600.0, {80.0, 80.0, 80.0});
    CHECK(crop_cells(desk, {}) == Shape3{25, 62, 62});
}

TEST_CASE("crop equal to the domain is an identity copy") {
    auto s = testing::random_sequence(3, {4, 6, 5}, 1);
    CropSpec all{{40.0, 60.0, 50.0}, {0.0, 0.0, 0.0}};
    const auto c = crop_volume(s, all);
    CHECK(c.grid() == s.grid());
    CHECK(c.values() == s.values());
    CHECK(c.origin() == s.origin());
}

TEST_CASE("crop updates the origin and rejects oversized crops") {
    auto s = testing::random_sequence(2, {4, 8, 8}, 2);
    CropSpec q{{20.0, 40.0, 40.0}, {0.0, 30.0, 20.0}};
    const auto c = crop_volume(s, q);
    CHECK(c.grid() == Shape3{2, 4, 4});
    CHECK(c.origin()[1] == doctest::Approx(30.0));
    CHECK(c.origin()[2] == doctest::Approx(20.0));
    CHECK(c.at(1, 1, 2, 3) == s.at(1, 1, 5, 5));
    CHECK_THROWS_AS(crop_volume(s, CropSpec{{50.0, 40.0, 40.0}, {0, 0, 0}}), InvalidArgument);
    CHECK_THROWS_AS(crop_volume(s, CropSpec{{20.0, 40.0, 40.0}, {0, 50.0, 0}}), InvalidArgument);
}

TEST_CASE("southeast crop places the source in the north-west corner") {
    ConcentrationSequence desk(1, {50, 125, 125}, 600.0, {80.0, 80.0, 80.0});
    const auto spec = southeast_crop(desk, 5000.0, 5000.0);
    const auto c = crop_volume(desk, spec);
    CHECK(c.grid() == Shape3{25, 62, 62});
    const auto& o = c.origin();
    // source column is the last row (north) and first column (west) of the crop
    CHECK(std::floor((5000.0 - o[2]) / 80.0) == 0.0);
    CHECK(std::floor((5000.0 - o[1]) / 80.0) == 61.0);
    CHECK(o[0] == 0.0);
}

TEST_CASE("resize reaches the paired shapes and reproduces constants") {
    ConcentrationSequence s(3, {25, 62, 62}, 600.0, {80.0, 80.0, 80.0});
    std::fill(s.values().begin(), s.values().end(), 0.37f);
    const auto lr = resize_sequence(s, kLowResShape);
    const auto hr = resize_sequence(s, kHighResShape);
    CHECK(lr.grid() == Shape3{8, 32, 32});
    CHECK(hr.grid() == Shape3{32, 128, 128});
    CHECK(lr.steps() == 3);
    for (float v : lr.values()) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
    for (float v : hr.values()) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
    CHECK_THROWS_AS(resize_sequence(s, {0, 4, 4}), InvalidArgument);
}

TEST_CASE("average pooling") {
    const Shape3 hr{8, 8, 8};
    SUBCASE("constant") {
        std::vector<float> v(512, 2.5f);
        for (float x : average_pool(v, hr)) CHECK(x == 2.5f);
    }
    SUBCASE("one-hot of 64 becomes one") {
        std::vector<float> v(512, 0.0f);
        v[static_cast<std::size_t>((5 * 8 + 2) * 8 + 6)] = 64.0f;
        const auto p = average_pool(v, hr);
        REQUIRE(p.size() == 8);
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == (i == (1 * 2 + 0) * 2 + 1 ? 1.0f : 0.0f));
    }
    SUBCASE("mass preserved and repool idempotent") {
        auto s = testing::random_sequence(1, hr, 5);
        const auto p = average_pool(s.frame(0), hr);
        const double in = std::accumulate(s.values().begin(), s.values().end(), 0.0);
        const double out = std::accumulate(p.begin(), p.end(), 0.0);
        CHECK(out * 64.0 == doctest::Approx(in).epsilon(1e-6));
        const auto up = nearest_upsample(p, {2, 2, 2});
        CHECK(average_pool(up, hr) == p);
    }
    CHECK_THROWS_AS(average_pool(std::vector<float>(6 * 8 * 8), {6, 8, 8}), InvalidArgument);
}

TEST_CASE("log normalization") {
    NormalizationSpec n{1e-10, -10.0, -2.0};
    CHECK(n.normalize(0.0f) == doctest::Approx(0.0));
    CHECK(n.normalize(1e-6f) == doctest::Approx(0.5));
    for (float v : {1e-9f, 3.3e-7f, 1e-4f, 0.0099f}) CHECK(n.denormalize(n.normalize(v)) == doctest::Approx(v).epsilon(1e-6));
    float prev = -1.0f;
    for (float v = 2e-10f; v < 1e-2f; v *= 1.7f) {
        CHECK(n.normalize(v) > prev);
        prev = n.normalize(v);
    }
    CHECK_THROWS_AS((NormalizationSpec{1e-10, 1.0, 1.0}.validate()), InvalidSpec);
    CHECK_THROWS_AS((NormalizationSpec{1e-10, 2.0, 1.0}.validate()), InvalidSpec);

    auto s = testing::random_sequence(2, {2, 3, 4}, 9, 0.0f, 1e-3f);
    const ConcentrationSequence* ptrs[] = {&s};
    const auto fit = fit_normalization(ptrs);
    const auto z = log_normalize(s, fit);
    for (float v : z.values()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("sliding windows") {
    CHECK(make_windows(33).size() == 28);
    const auto one = make_windows(6);
    REQUIRE(one.size() == 1);
    CHECK(one[0].input_frames() == std::array<std::int64_t, 5>{0, 1, 2, 3, 4});
    CHECK(one[0].target_frame() == 5);
    CHECK_THROWS_AS(make_windows(5), InvalidArgument);

    auto s = testing::random_sequence(9, {1, 2, 2}, 4);
    const auto ws = make_windows(s);
    for (std::size_t k = 0; k < ws.size(); ++k) {
        CHECK(ws[k].start_index == static_cast<std::int64_t>(k));
        const auto in = window_inputs(s, ws[k]);
        const auto tgt = window_target(s, ws[k]);
        for (int f = 0; f < 5; ++f)
            for (int c = 0; c < 4; ++c) CHECK(in[f * 4 + c] == s.frame(static_cast<std::int64_t>(k) + f)[c]);
        for (int c = 0; c < 4; ++c) CHECK(tgt[c] == s.frame(static_cast<std::int64_t>(k) + 5)[c]);
    }
}

TEST_CASE("run splits") {
    CHECK(split_sizes(100) == std::array<std::size_t, 3>{80, 10, 10});
    CHECK(split_sizes(10) == std::array<std::size_t, 3>{8, 1, 1});
    const auto a = split_runs(100, 11);
    const auto b = split_runs(100, 11);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    std::set<std::size_t> all;
    for (auto* part : {&a.train, &a.val, &a.test}) all.insert(part->begin(), part->end());
    CHECK(all.size() == 100);
    CHECK(*all.rbegin() == 99);
    CHECK_THROWS_AS(split_runs(2, 1), InvalidArgument);
}

TEST_CASE("run file and manifest roundtrip") {
    testing::TempDir dir("container");
    RunFile f;
    f.sample.run_id = "run_004";
    f.sample.seed = 99;
    f.sample.condition = {4.25, 351.5};
    f.sample.lr = testing::random_sequence(6, {2, 4, 4}, 1);
    f.sample.hr = testing::random_sequence(6, {8, 16, 16}, 2);
    f.sample.hr.set_origin({0.0, 40.0, 80.0});
    f.normalization = NormalizationSpec{1e-10, -9.5, -3.25};
    f.provenance = {{"config_hash", "abc"}, {"seed", 99}};
    const auto path = dir.path / "r.plm";
    write_run_file(path, f);
    const auto g = read_run_file(path);
    CHECK(g.sample.run_id == f.sample.run_id);
    CHECK(g.sample.seed == f.sample.seed);
    CHECK(g.sample.condition == f.sample.condition);
    CHECK(g.sample.lr.values() == f.sample.lr.values());
    CHECK(g.sample.hr.values() == f.sample.hr.values());
    CHECK(g.sample.hr.origin() == f.sample.hr.origin());
    CHECK(g.sample.hr.cell_size() == f.sample.hr.cell_size());
    CHECK(g.sample.lr.dt_output() == f.sample.lr.dt_output());
    CHECK(*g.normalization == *f.normalization);
    CHECK(g.provenance == f.provenance);

    std::ifstream raw(path, std::ios::binary);
    char magic[4];
    raw.read(magic, 4);
    CHECK(std::string(magic, 4) == "PLM1");

    RunFileReader reader(path);
    CHECK(reader.steps() == 6);
    CHECK(reader.shape(Resolution::High) == Shape3{8, 16, 16});
    const auto fr = reader.frame(Resolution::High, 4);
    CHECK(std::equal(fr.begin(), fr.end(), f.sample.hr.frame(4).begin()));
    const auto fl = reader.frame(Resolution::Low, 5);
    CHECK(std::equal(fl.begin(), fl.end(), f.sample.lr.frame(5).begin()));
    CHECK_THROWS_AS(reader.frame(Resolution::Low, 6), InvalidArgument);

    Manifest m;
    m.runs.push_back({"run_000", "runs/run_000.plm", Split::Train, 1, {2.0, 345.0}});
    m.runs.push_back({"run_001", "runs/run_001.plm", Split::Test, 2, {9.0, 359.0}});
    m.normalization = *f.normalization;
    m.provenance = {{"config_hash", "x"}};
    write_manifest(dir.path / "manifest.json", m);
    const auto n = read_manifest(dir.path / "manifest.json");
    REQUIRE(n.runs.size() == 2);
    CHECK(n.runs[1].split == Split::Test);
    CHECK(n.runs[1].condition == m.runs[1].condition);
    CHECK(n.normalization == m.normalization);
    CHECK(n.split_counts() == std::array<std::size_t, 3>{1, 0, 1});

    CHECK_THROWS_AS(read_run_file(dir.path / "missing.plm"), IoError);
    std::ofstream(dir.path / "junk.plm") << "not a run file";
    CHECK_THROWS_AS(read_run_file(dir.path / "junk.plm"), IoError);
}

TEST_CASE("sample validation checks the paired shapes") {
    DualResolutionSample s;
    s.lr = ConcentrationSequence(33, kLowResShape, 600.0, {250.0, 156.25, 156.25});
    s.hr = ConcentrationSequence(33, kHighResShape, 600.0, {62.5, 39.0625, 39.0625});
    CHECK_NOTHROW(s.validate());
    s.hr = ConcentrationSequence(32, kHighResShape, 600.0, {62.5, 39.0625, 39.0625});
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
}
