// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
//   plumesr_acceptance <work_dir> [--reuse]
//
// The desk experiment (10-run corpus, TM/SRM/HRTM training, rollout
// evaluation, sensors, benchmark) is written under <work_dir>/desk. --reuse
// keeps an existing corpus and checkpoints when their config hash matches.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "plumesr/data/transforms.hpp"
#include "plumesr/error.hpp"
#include "plumesr/eval/metrics.hpp"
#include "plumesr/experiment/datasets.hpp"
#include "plumesr/experiment/pipeline.hpp"
#include "plumesr/plume/conditions.hpp"
#include "plumesr/plume/solver.hpp"

namespace fs = std::filesystem;
using namespace plumesr;
using namespace plumesr::experiment;
using nlohmann::json;

namespace {

struct Result {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    double budget = 0.0;
};

std::vector<Result> results;

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

void log_line(const std::string& s) { std::cerr << "  " << s << std::endl; }

/// Runs one check, timing it; an exception is a failure with its message as detail.
void criterion(int id, const std::string& title, double budget_s, const std::function<std::pair<bool, std::string>()>& fn) {
    std::cerr << "[criterion " << id << "] " << title << std::endl;
    Result r{id, title, false, "", 0.0, budget_s};
    const auto t0 = std::chrono::steady_clock::now();
    try {
        auto [ok, detail] = fn();
        r.pass = ok;
        r.detail = detail;
    } catch (const std::exception& e) {
        r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.id << "  " << r.title << "  (" << fmt("%.1f", r.seconds)
              << " s)  " << r.detail << std::endl;
    results.push_back(r);
}

std::string shape_str(const torch::Tensor& t) {
    std::ostringstream os;
    os << t.sizes();
    return os.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

json read_json(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw IoError("missing " + p.string());
    return json::parse(is);
}

/// Desk experiment settings: paper architectures and data shapes, epoch and
/// batch caps sized for a single CPU.
ExperimentConfig desk_config(const fs::path& out) {
    ExperimentConfig c;
    c.output.dir = out.string();
    c.data.runs = 10;
    c.threads = 0;
    c.tm.train.epochs = 30;
    c.tm.train.plateau_patience = 3;
    c.tm.train.max_batches_per_epoch = 0;
    c.srm.train.epochs = 30;
    c.srm.train.batch_size = 8;
    c.srm.train.max_batches_per_epoch = 20;
    c.srm.train.max_val_samples = 16;
    c.hrtm.train.epochs = 2;
    c.hrtm.train.batch_size = 4;
    c.hrtm.train.max_batches_per_epoch = 8;
    c.hrtm.train.max_val_samples = 8;
    c.evaluation.benchmark_repetitions = 10;
    c.evaluation.benchmark_warmup = 2;
    return c;
}

bool checkpoint_current(const ExperimentConfig& c, ModelKind kind, int epochs) {
    const auto p = checkpoint_path(c, kind);
    if (!fs::exists(p)) return false;
    const auto info = nn::read_checkpoint_info(p);
    return info.meta.at("provenance").value("config_hash", "") == c.hash() &&
           info.meta.at("state").at("epoch").get<int>() >= epochs;
}

/// Trains on one sample until the eval-mode MSE on that sample drops below `target`.
std::pair<int, double> overfit(torch::nn::Module& module, const std::function<torch::Tensor(const torch::Tensor&)>& fwd,
                               const torch::Tensor& x, const torch::Tensor& y, int max_epochs, double lr, double target) {
    torch::optim::Adam opt(module.parameters(), torch::optim::AdamOptions(lr));
    double mse = std::numeric_limits<double>::infinity();
    for (int e = 1; e <= max_epochs; ++e) {
        module.train();
        auto loss = torch::mse_loss(fwd(x), y);
        opt.zero_grad();
        loss.backward();
        opt.step();
        if (e % 10 == 0 || e == max_epochs) {
            torch::NoGradGuard ng;
            module.eval();
            mse = torch::mse_loss(fwd(x), y).item<double>();
            if (mse < target) return {e, mse};
        }
    }
    return {max_epochs, mse};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: plumesr_acceptance <work_dir> [--reuse]\n";
        return 2;
    }
    const fs::path work = argv[1];
    const bool reuse = argc > 2 && std::string(argv[2]) == "--reuse";
    torch::manual_seed(0);
    auto config = desk_config(work / "desk");
    fs::create_directories(config.output_dir());
    data::write_text_atomic(config.output_dir() / "acceptance_config.json", config.to_json().dump(2));

    // ---- 1. shape contracts
    criterion(1, "shape contracts", 1.0, [] {
        torch::NoGradGuard ng;
        auto tm = nn::build_tm();
        auto srm = nn::build_srm();
        auto hrtm = nn::build_hrtm();
        tm->eval();
        srm->eval();
        hrtm->eval();
        const auto a = tm->forward(torch::rand({2, 5, 8, 32, 32}));
        const auto b = srm->forward(torch::rand({2, 8, 32, 32}));
        const auto c = hrtm->forward(torch::rand({1, 5, 32, 128, 128}));
        const bool ok = a.sizes() == torch::IntArrayRef{2, 1, 8, 32, 32} && b.sizes() == torch::IntArrayRef{2, 32, 128, 128} &&
                        c.sizes() == torch::IntArrayRef{1, 1, 32, 128, 128};
        return std::make_pair(ok, "TM " + shape_str(a) + ", SRM " + shape_str(b) + ", HRTM " + shape_str(c));
    });

    // ---- 4. metric oracles (cheap, independent of the corpus)
    criterion(4, "metric oracles", 1.0, [] {
        std::vector<std::string> bad;
        auto near = [&](double got, double want, double tol, const std::string& what) {
            if (!(std::abs(got - want) <= tol)) bad.push_back(what + "=" + fmt("%.12g", got));
        };
        eval::MetricConfig mc;
        mc.ssim_window = 3;
        std::vector<float> f(4 * 4 * 4);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.05f + 0.9f * static_cast<float>((i * 37) % 64) / 64.0f;
        const Shape3 s{4, 4, 4};
        near(eval::mse(f, f), 0.0, 1e-12, "MSE(f,f)");
        near(eval::iou(f, f, 0.5), 1.0, 1e-12, "IoU(f,f)");
        near(eval::ssim3d({f, s}, {f, s}, mc), 1.0, 1e-12, "SSIM(f,f)");
        near(eval::conservation_mass(f, f, mc), 0.0, 1e-12, "CM(f,f)");
        // two cells above threshold in each mask, one shared: 1 / 3
        std::vector<float> p{2, 2, 0, 0}, t{0, 2, 2, 0};
        near(eval::iou(p, t, 1.0), 1.0 / 3.0, 1e-9, "IoU two-cell");
        // two voxels differing by 2 out of four: (4 + 4) / 4
        std::vector<float> a{0, 0, 0, 0}, b{2, -2, 0, 0};
        near(eval::mse(a, b), 2.0, 1e-9, "MSE two-voxel");
        // constant fields c1, c2: SSIM = (2 c1 c2 + C1) / (c1^2 + c2^2 + C1)
        std::vector<float> c1(64, 0.2f), c2(64, 0.6f);
        const double C1 = (mc.ssim_k1 * mc.ssim_data_range) * (mc.ssim_k1 * mc.ssim_data_range);
        const double x = 0.2f, y = 0.6f;
        near(eval::ssim3d({c1, s}, {c2, s}, mc), (2 * x * y + C1) / (x * x + y * y + C1), 1e-9, "SSIM constant");
        std::vector<float> tr{1, 2, 3, 4}, pr{2, 4, 6, 8};
        near(eval::conservation_mass(pr, tr, mc), 1.0, 1e-9, "CM 2x");
        return std::make_pair(bad.empty(), bad.empty() ? std::string("identity, IoU 1/3, MSE 2, SSIM closed form, CM 1")
                                                       : "mismatch: " + bad.front());
    });

    // ---- 2. rollout protocol on a full-size TM
    criterion(2, "rollout protocol", 10.0, [] {
        torch::manual_seed(3);
        auto tm = nn::build_tm();
        tm->eval();
        ConcentrationSequence gt(33, {8, 32, 32}, 600.0, {250.0, 156.25, 156.25});
        auto& v = gt.values();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>((i * 2654435761u) % 1000) / 1000.0f;
        std::vector<std::string> bad;
        const auto pred = temporal_predictor(tm);

        const auto plain = nn::rollout(gt, {28, {}}, pred);
        for (std::int64_t f = 0; f < 33; ++f)
            if (plain.frame_is_gt[static_cast<std::size_t>(f)] != (f < 5)) bad.push_back("plain provenance frame " + std::to_string(f));
        for (std::size_t s = 1; s < plain.window_frames.size(); ++s)
            for (int k = 0; k < 4; ++k)
                if (plain.window_frames[s][static_cast<std::size_t>(k)] != plain.window_frames[s - 1][static_cast<std::size_t>(k + 1)])
                    bad.push_back("window recurrence at step " + std::to_string(s + 1));
        if (plain.gt_slots(1) != 5) bad.push_back("first window not all ground truth");
        for (std::int64_t st = 6; st <= 28; ++st)
            if (plain.gt_slots(st) != 0) bad.push_back("step " + std::to_string(st) + " not fully predictive");

        const auto upd = nn::rollout(gt, {28, {6, 9, 15}}, pred);
        std::vector<std::int64_t> gt_frames;
        for (std::int64_t f = 0; f < 33; ++f)
            if (upd.frame_is_gt[static_cast<std::size_t>(f)]) gt_frames.push_back(f);
        if (gt_frames != std::vector<std::int64_t>{0, 1, 2, 3, 4, 6, 9, 15}) bad.push_back("scheduled provenance");
        for (std::int64_t f : {6, 9, 15}) {
            const auto a = upd.frames.frame(f);
            const auto b = gt.frame(f);
            if (!std::equal(a.begin(), a.end(), b.begin())) bad.push_back("frame " + std::to_string(f) + " differs from GT");
        }
        for (std::int64_t f = 0; f < 6; ++f) {
            const auto a = upd.frames.frame(f);
            const auto b = plain.frames.frame(f);
            if (!std::equal(a.begin(), a.end(), b.begin())) bad.push_back("prefix frame " + std::to_string(f));
        }
        return std::make_pair(bad.empty(), bad.empty() ? std::string("GT window, recurrence, predictive from step 6, GT at {6,9,15}")
                                                       : bad.front());
    });

    // ---- 3. solver mass balance on 10 LHS conditions at desk scale
    criterion(3, "solver mass balance", 120.0, [&config] {
        const auto terrain = corpus_terrain(config.data);
        const auto conds = plume::sample_conditions(10, 97);
        double worst = 0.0, worst_recount = 0.0;
        for (const auto& c : conds) {
            const auto wind = plume::build_wind_field(terrain, c, config.data.sim);
            const auto sim = plume::simulate_release(terrain, wind, config.data.source, config.data.sim);
            const auto& cell = sim.sequence.cell_size();
            const double vol = cell[0] * cell[1] * cell[2];
            for (std::int64_t t = 0; t < sim.sequence.steps(); ++t) {
                const auto& b = sim.balance[static_cast<std::size_t>(t)];
                const double injected = config.data.source.emission_rate * static_cast<double>(t) * sim.sequence.dt_output();
                double retained = 0.0;
                for (float v : sim.sequence.frame(t)) retained += static_cast<double>(v) * vol;
                if (injected > 0.0) {
                    worst = std::max(worst, std::abs(injected - retained - b.outflow - b.decayed) / injected);
                    worst_recount = std::max(worst_recount, std::abs(retained - b.retained) / injected);
                }
            }
            log_line(fmt("w_s %.2f  w_d %.1f  worst so far %.2e", c.speed_ms, c.direction_deg, worst));
        }
        return std::make_pair(worst < 1e-6 && worst_recount < 1e-6,
                              fmt("max |injected - retained - outflow| / injected = %.2e (retained recounted from frames, "
                                  "ledger drift %.2e)",
                                  worst, worst_recount));
    });

    // ---- desk corpus
    std::string pipeline_error;
    bool corpus_ok = false;
    try {
        bool have = false;
        if (reuse && fs::exists(config.corpus_dir() / "manifest.json")) {
            const auto m = data::read_manifest(config.corpus_dir() / "manifest.json");
            have = m.provenance.value("config_hash", "") == config.hash();
        }
        if (!have) {
            std::cerr << "[pipeline] generate" << std::endl;
            cmd_generate(config, {true, log_line});
        }
        corpus_ok = true;
    } catch (const std::exception& e) {
        pipeline_error = std::string("generate failed: ") + e.what();
    }

    // ---- 5. single-sample overfit at full size
    criterion(5, "single-window overfit", 600.0, [&] {
        if (!corpus_ok) throw std::runtime_error(pipeline_error);
        const auto m = open_corpus(config);
        const auto train = m.select(data::Split::Train);
        const std::vector<const data::ManifestEntry*> one{train.front()};
        CorpusFrames lr(config.corpus_dir(), one, m.normalization, data::Resolution::Low);
        CorpusFrames hr(config.corpus_dir(), one, m.normalization, data::Resolution::High);
        // A window from the early, transient part of the run.
        auto [tx, ty] = window_dataset(lr).batch({0});
        auto [hx, hy] = window_dataset(hr).batch({0});
        auto [sx, sy] = srm_dataset(hr).batch({8});
        std::vector<std::string> parts;
        bool ok = true;
        torch::manual_seed(5);
        {
            auto net = nn::build_tm();
            auto [e, mse] = overfit(*net, [&](const torch::Tensor& x) { return net->forward(x); }, tx, ty, 2000, 1e-3, 1e-4);
            ok = ok && mse < 1e-4;
            parts.push_back(fmt("TM %.2e @%g", mse, e));
            log_line(parts.back());
        }
        {
            auto net = nn::build_srm();
            auto [e, mse] = overfit(*net, [&](const torch::Tensor& x) { return net->forward(x); }, sx, sy, 2000, 1e-3, 1e-4);
            ok = ok && mse < 1e-4;
            parts.push_back(fmt("SRM %.2e @%g", mse, e));
            log_line(parts.back());
        }
        {
            auto net = nn::build_hrtm();
            auto [e, mse] = overfit(*net, [&](const torch::Tensor& x) { return net->forward(x); }, hx, hy, 2000, 1e-3, 1e-4);
            ok = ok && mse < 1e-4;
            parts.push_back(fmt("HRTM %.2e @%g", mse, e));
            log_line(parts.back());
        }
        return std::make_pair(ok, "eval-mode MSE on the training sample (epochs): " + parts[0] + ", " + parts[1] + ", " + parts[2]);
    });

    // ---- desk pipeline: train, evaluate, sensors, benchmark
    bool trained = false;
    if (corpus_ok) {
        try {
            const std::pair<ModelKind, int> jobs[] = {{ModelKind::TM, config.tm.train.epochs},
                                                      {ModelKind::SRM, config.srm.train.epochs},
                                                      {ModelKind::HRTM, config.hrtm.train.epochs}};
            for (const auto& [kind, epochs] : jobs) {
                if (reuse && checkpoint_current(config, kind, epochs)) continue;
                std::cerr << "[pipeline] train " << to_string(kind) << std::endl;
                if (kind == ModelKind::SRM) fs::remove(config.models_dir() / "srm_baseline.json");
                fs::remove(checkpoint_path(config, kind));
                cmd_train(config, kind, {false, -1, log_line});
            }
            trained = true;
            std::cerr << "[pipeline] rollout-eval" << std::endl;
            cmd_rollout_evaluate(config, {false, log_line});
        } catch (const std::exception& e) {
            pipeline_error = std::string("pipeline failed: ") + e.what();
        }
    }

    criterion(6, "SRM beats trilinear", 1800.0, [&] {
        if (!trained) throw std::runtime_error(pipeline_error);
        const auto j = read_json(config.models_dir() / "srm_baseline.json");
        const double srm = j.at("srm_val_mse"), tri = j.at("trilinear_val_mse");
        const double sc = j.at("srm_consistency_mse"), tc = j.at("trilinear_consistency_mse");
        return std::make_pair(srm < tri && sc < tc,
                              fmt("val MSE SRM %.3e vs trilinear %.3e", srm, tri) +
                                  fmt("; consistency SRM %.3e vs trilinear %.3e", sc, tc));
    });

    criterion(7, "end-to-end desk experiment", 7200.0, [&] {
        if (!trained) throw std::runtime_error(pipeline_error);
        const auto m = open_corpus(config);
        const auto counts = m.split_counts();
        std::vector<std::string> bad;
        if (counts != std::array<std::size_t, 3>{8, 1, 1}) bad.push_back("split is not 8/1/1");
        const auto csv = slurp(config.eval_dir() / "metrics_dst3d.csv");
        const auto lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
        // Long format: one row per (run, step, metric).
        if (lines != 1 + 4 * 33 * counts[2]) bad.push_back("metrics CSV has " + std::to_string(lines) + " lines");
        const auto summary = read_json(config.eval_dir() / "metrics_summary.json");
        const auto& dual = summary.at("models").at("DST3D-UNet-SR");
        for (const auto* name : {"MSE", "IoU", "SSIM", "CM"})
            if (dual.at("per_step").at(name).at("mean").size() != 33) bad.push_back(std::string(name) + " curve length");
        for (const auto* f : {"plots/metrics.svg", "plots/showcase/x_mean.png", "plots/showcase/y_mean.png",
                              "plots/showcase/z_mean.png", "plots/showcase/z_slices.png"})
            if (!fs::exists(config.eval_dir() / f)) bad.push_back(std::string("missing ") + f);
        const double early = dual.at("mse_slope_steps_2_6"), late = dual.at("mse_slope_steps_10_30");
        if (!(early > late)) bad.push_back("two-slope structure absent");
        return std::make_pair(bad.empty(), fmt("MSE slope steps 2-6 %.3e, steps 10-30 %.3e", early, late) +
                                               (bad.empty() ? "; 4 metrics x 33 steps, plots present" : "; " + bad.front()));
    });

    criterion(8, "efficiency direction", 300.0, [&] {
        if (!trained) throw std::runtime_error(pipeline_error);
        const auto b = cmd_benchmark(config, log_line);
        return std::make_pair(b.ratio > 1.0, fmt("TM+SRM %.3f s/step, HRTM %.3f s/step, ratio %.2f", b.dual_stage.median_s,
                                                 b.hrtm.median_s, b.ratio) +
                                                 " on " + b.hrtm.hardware);
    });

    criterion(9, "update-injection benefit", 1200.0, [&] {
        if (!trained) throw std::runtime_error(pipeline_error);
        const auto s = cmd_sensors(config, log_line);
        std::string runs;
        for (const auto& r : s.runs) runs += fmt(" %.3f->%.3f", r.near_after_plain, r.near_after_updated);
        const bool ok = 2 * s.improved_runs > static_cast<int>(s.runs.size());
        return std::make_pair(ok, std::to_string(s.improved_runs) + " of " + std::to_string(s.runs.size()) +
                                      " test runs improved; near-band post-2.5 h error plain->updated:" + runs);
    });

    criterion(10, "determinism and provenance", 600.0, [&] {
        if (!corpus_ok || !trained) throw std::runtime_error(pipeline_error);
        auto again = config;
        again.output.dir = (work / "desk_regen").string();
        fs::remove_all(again.output_dir());
        cmd_generate(again, {false, log_line});
        const auto m = open_corpus(config);
        std::size_t same = 0;
        for (const auto& r : m.runs) same += slurp(config.corpus_dir() / r.file) == slurp(again.corpus_dir() / r.file);
        const bool manifest = slurp(config.corpus_dir() / "manifest.json") == slurp(again.corpus_dir() / "manifest.json");
        fs::remove_all(again.output_dir());

        // Reload the TM checkpoint and recompute its recorded validation loss.
        const auto path = checkpoint_path(config, ModelKind::TM);
        const auto info = nn::read_checkpoint_info(path);
        auto tm = nn::build_tm(nn::temporal_config_from_json(info.model_config));
        nn::load_checkpoint_weights(*tm, path);
        CorpusFrames val(config.corpus_dir(), m.select(data::Split::Val), info.normalization, data::Resolution::Low);
        nn::Trainer trainer(tm.ptr(), [tm](const torch::Tensor& x) mutable { return tm->forward(x); },
                            nn::train_config_from_json(info.meta.at("train_config")));
        const double stored = info.meta.at("state").at("best_val_loss");
        const double recomputed = trainer.evaluate(window_dataset(val), trainer.config().max_val_samples);
        const bool ok = same == m.runs.size() && manifest && std::abs(stored - recomputed) <= 1e-6;
        return std::make_pair(ok, std::to_string(same) + "/" + std::to_string(m.runs.size()) + " run files and " +
                                      (manifest ? "the manifest" : "NOT the manifest") + " byte-identical; TM val loss " +
                                      fmt("stored %.9e, reloaded %.9e", stored, recomputed));
    });

    if (trained) {
        try {
            cmd_report(config);
        } catch (const std::exception& e) {
            std::cerr << "report failed: " << e.what() << std::endl;
        }
    }

    std::sort(results.begin(), results.end(), [](const Result& a, const Result& b) { return a.id < b.id; });
    std::cout << "\nsummary\n";
    int failed = 0;
    json j = json::array();
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.id << "  " << r.title << "  " << fmt("%.1f s", r.seconds)
                  << (r.seconds > r.budget ? fmt(" (budget %.0f s exceeded)", r.budget) : std::string()) << '\n';
        failed += !r.pass;
        j.push_back({{"criterion", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail},
                     {"seconds", r.seconds}, {"budget_seconds", r.budget}});
    }
    data::write_text_atomic(config.output_dir() / "acceptance.json", j.dump(2));
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
