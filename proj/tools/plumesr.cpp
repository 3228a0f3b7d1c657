#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "plumesr/error.hpp"
#include "plumesr/experiment/config.hpp"
#include "plumesr/experiment/corpus.hpp"
#include "plumesr/experiment/pipeline.hpp"

namespace {

using namespace plumesr;

experiment::ExperimentConfig resolve(const std::string& path, int runs) {
    auto c = path.empty() ? experiment::default_config() : experiment::load_config(path);
    experiment::apply_environment(c);
    if (runs > 0) c.data.runs = runs;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plumesr: dual-stage plume surrogate experiments"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("-c,--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);

    auto* gen = app.add_subcommand("generate", "simulate the corpus and write run files plus manifest");
    int runs = 0;
    bool force = false;
    gen->add_option("--runs", runs, "override data.runs");
    gen->add_flag("--force", force, "overwrite an existing corpus");

    auto* train = app.add_subcommand("train", "train one model (tm, srm or hrtm)");
    std::string model;
    bool resume = false;
    int epochs = -1;
    train->add_option("--model", model, "tm | srm | hrtm")->required()->check(CLI::IsMember({"tm", "srm", "hrtm"}));
    train->add_flag("--resume", resume, "continue from the existing checkpoint");
    train->add_option("--epochs", epochs, "override the configured epoch count");

    auto* roll = app.add_subcommand("rollout-eval", "roll out the test runs and score MSE, IoU, SSIM, CM");
    bool bypass = false;
    roll->add_flag("--bypass", bypass, "score ground truth against itself (pipeline check)");

    auto* sens = app.add_subcommand("sensors", "sensor traces with and without observational updates");
    auto* bench = app.add_subcommand("benchmark", "per-step inference timing, dual-stage vs HRTM");
    auto* report = app.add_subcommand("report", "collect artifacts into report.json and report.md");

    CLI11_PARSE(app, argc, argv);
    try {
        auto config = resolve(config_path, runs);
        auto log = [](const std::string& s) { std::cerr << s << '\n'; };
        if (config.threads > 0) nn::configure_threads(config.threads);
        if (*gen) {
            auto m = experiment::cmd_generate(config, {force, log});
            const auto c = m.split_counts();
            std::cout << "corpus " << config.corpus_dir().string() << ": " << m.runs.size() << " runs, split (" << c[0]
                      << ',' << c[1] << ',' << c[2] << ")\n";
        } else if (*train) {
            const auto kind = experiment::model_kind_from_string(model);
            auto out = experiment::cmd_train(config, kind, {resume, epochs, log});
            std::cout << model << ": " << out.epochs << " epochs, best val MSE " << out.best_val_loss << " at epoch "
                      << out.best_epoch << ", " << out.parameters << " parameters -> " << out.checkpoint.string() << '\n';
            if (!out.baseline.is_null()) std::cout << out.baseline.dump(2) << '\n';
        } else if (*roll) {
            auto out = experiment::cmd_rollout_evaluate(config, {bypass, log});
            for (const auto& [name, rep] : out.reports) {
                std::cout << name;
                for (std::size_t m = 0; m < eval::kMetricNames.size(); ++m) {
                    const auto a = rep.aggregate(m);
                    std::cout << "  " << eval::kMetricNames[m] << ' ' << a.mean << " +- " << a.std;
                }
                std::cout << '\n';
            }
        } else if (*sens) {
            auto out = experiment::cmd_sensors(config, log);
            std::cout << "updates improved near-band error after 2.5 h on " << out.improved_runs << " of "
                      << out.runs.size() << " test runs\n";
        } else if (*bench) {
            auto out = experiment::cmd_benchmark(config, log);
            std::cout << "dual-stage " << out.dual_stage.median_s << " s/step, HRTM " << out.hrtm.median_s
                      << " s/step, ratio " << out.ratio << '\n';
        } else if (*report) {
            std::cout << experiment::cmd_report(config).string() << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "error[" << e.kind() << "]: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
