#include <cmath>
#include <cstdio>

#include "plumesr/error.hpp"
#include "plumesr/experiment/datasets.hpp"
#include "plumesr/experiment/pipeline.hpp"

namespace plumesr::experiment {

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::TM: return "tm";
        case ModelKind::SRM: return "srm";
        case ModelKind::HRTM: return "hrtm";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "tm") return ModelKind::TM;
    if (s == "srm") return ModelKind::SRM;
    if (s == "hrtm") return ModelKind::HRTM;
    throw InvalidArgument("unknown model '" + s + "' (expected tm, srm or hrtm)");
}

std::filesystem::path checkpoint_path(const ExperimentConfig& config, ModelKind kind) {
    return config.models_dir() / (to_string(kind) + ".ckpt");
}

NormalizedRun load_normalized_run(const std::filesystem::path& file, const data::NormalizationSpec& norm) {
    auto rf = data::read_run_file(file);
    return {rf.sample.run_id, rf.sample.condition, data::log_normalize(rf.sample.lr, norm),
            data::log_normalize(rf.sample.hr, norm)};
}

namespace {

void say(const Logger& log, const std::string& s) {
    if (log) log(s);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double consistency(nn::SRMNet& model, const nn::Dataset& val, int batch, int cap) {
    torch::NoGradGuard guard;
    model->eval();
    const std::size_t n = cap > 0 ? std::min<std::size_t>(val.size, static_cast<std::size_t>(cap)) : val.size;
    double sse = 0.0, count = 0.0;
    for (std::size_t s = 0; s < n; s += static_cast<std::size_t>(batch)) {
        std::vector<std::size_t> idx;
        for (std::size_t i = s; i < std::min(n, s + static_cast<std::size_t>(batch)); ++i) idx.push_back(i);
        auto [x, y] = val.batch(idx);
        sse += (pool4(model->forward(x)) - x).to(torch::kDouble).pow(2).sum().item<double>();
        count += static_cast<double>(x.numel());
    }
    return sse / count;
}

}  // namespace

nlohmann::json srm_baseline(const ExperimentConfig& config, nn::SRMNet* model) {
    const auto m = open_corpus(config);
    CorpusFrames val(config.corpus_dir(), m.select(data::Split::Val), m.normalization, data::Resolution::High);
    const auto ds = srm_dataset(val);
    double tri = 0.0, tri_cons = 0.0, srm = 0.0, srm_cons = 0.0, count = 0.0, lr_count = 0.0;
    torch::NoGradGuard guard;
    if (model) (*model)->eval();
    for (std::size_t s = 0; s < ds.size; s += 8) {
        std::vector<std::size_t> idx;
        for (std::size_t i = s; i < std::min(ds.size, s + 8); ++i) idx.push_back(i);
        auto [x, y] = ds.batch(idx);
        auto up = trilinear4(x);
        tri += (up - y).to(torch::kDouble).pow(2).sum().item<double>();
        tri_cons += (pool4(up) - x).to(torch::kDouble).pow(2).sum().item<double>();
        if (model) {
            auto sr = (*model)->forward(x);
            srm += (sr - y).to(torch::kDouble).pow(2).sum().item<double>();
            srm_cons += (pool4(sr) - x).to(torch::kDouble).pow(2).sum().item<double>();
        }
        count += static_cast<double>(y.numel());
        lr_count += static_cast<double>(x.numel());
    }
    nlohmann::json j = {{"trilinear_val_mse", tri / count}, {"trilinear_consistency_mse", tri_cons / lr_count},
                        {"val_frames", ds.size}};
    if (model) {
        j["srm_val_mse"] = srm / count;
        j["srm_consistency_mse"] = srm_cons / lr_count;
    }
    return j;
}

TrainOutcome cmd_train(const ExperimentConfig& config, ModelKind kind, const TrainOptions& options) {
    nn::configure_threads(config.threads);
    const auto manifest = open_corpus(config);
    const auto& norm = manifest.normalization;
    const auto dir = config.corpus_dir();
    const auto train_runs = manifest.select(data::Split::Train);
    const auto val_runs = manifest.select(data::Split::Val);
    const auto ckpt = checkpoint_path(config, kind);
    const auto name = to_string(kind);

    nn::TrainConfig tc = kind == ModelKind::TM ? config.tm.train : kind == ModelKind::SRM ? config.srm.train : config.hrtm.train;
    if (options.epochs >= 0) tc.epochs = options.epochs;
    torch::manual_seed(tc.seed);

    const auto res = kind == ModelKind::TM ? data::Resolution::Low : data::Resolution::High;
    CorpusFrames train_frames(dir, train_runs, norm, res);
    CorpusFrames val_frames(dir, val_runs, norm, res);

    std::shared_ptr<torch::nn::Module> module;
    nn::Trainer::Forward forward;
    nlohmann::json model_config;
    nn::Dataset train_ds, val_ds;
    std::int64_t reference = 0;
    nn::SRMNet srm{nullptr};
    std::vector<nn::StageShape> audit;
    if (kind == ModelKind::SRM) {
        srm = nn::build_srm(config.srm.model);
        module = srm.ptr();
        forward = [srm](const torch::Tensor& x) mutable { return srm->forward(x); };
        model_config = nn::to_json(config.srm.model);
        train_ds = srm_dataset(train_frames);
        val_ds = srm_dataset(val_frames);
        reference = nn::kReferenceSrmParameters;
        audit = srm->audit();
    } else {
        auto net = kind == ModelKind::TM ? nn::build_tm(config.tm.model) : nn::build_hrtm(config.hrtm.model);
        module = net.ptr();
        forward = [net](const torch::Tensor& x) mutable { return net->forward(x); };
        model_config = kind == ModelKind::TM ? nn::to_json(config.tm.model) : nn::to_json(config.hrtm.model);
        train_ds = window_dataset(train_frames, net->config().window);
        val_ds = window_dataset(val_frames, net->config().window);
        reference = kind == ModelKind::TM ? nn::kReferenceTmParameters : nn::kReferenceHrtmParameters;
        audit = net->audit();
    }
    for (const auto& st : audit) say(options.log, name + " " + st.str());
    const auto params = nn::count_parameters(*module);
    say(options.log, name + ": " + std::to_string(params) + " trainable parameters (reference " +
                         std::to_string(reference) + ")");

    nn::Trainer trainer(module, forward, tc);
    if (kind == ModelKind::SRM) {
        trainer.set_extra_metric("downsample_consistency", [srm, &val_ds, tc]() mutable {
            return consistency(srm, val_ds, tc.batch_size, tc.max_val_samples);
        });
    }
    if (options.resume && std::filesystem::exists(ckpt)) {
        const auto info = nn::read_checkpoint_info(ckpt);
        if (info.kind != name) throw InvalidArgument("checkpoint " + ckpt.string() + " holds a " + info.kind + " model");
        if (info.model_config != model_config) throw InvalidArgument("checkpoint architecture differs from the config");
        trainer.resume(ckpt);
        say(options.log, name + ": resumed after epoch " + std::to_string(trainer.completed_epochs()));
    }
    const nlohmann::json provenance = {{"config_hash", config.hash()},
                                       {"corpus_hash", manifest.provenance.value("config_hash", "")},
                                       {"data_seed", config.data.seed},
                                       {"train_seed", tc.seed},
                                       {"command", "plumesr train --model " + name}};
    auto persist = [&] {
        trainer.save_checkpoint(ckpt, name, model_config, norm, provenance);
        data::write_text_atomic(config.models_dir() / (name + "_history.csv"), trainer.history_csv());
    };
    trainer.fit(train_ds, val_ds, [&](const nn::EpochRecord& r) {
        persist();
        std::string line = name + fmt(" epoch %4.0f  train %.6e  val %.6e  lr %.2e", r.epoch, r.train_loss, r.val_loss, r.lr);
        if (std::isfinite(r.extra)) line += fmt("  consistency %.6e", r.extra);
        say(options.log, line);
    });
    persist();

    TrainOutcome out;
    out.checkpoint = ckpt;
    out.parameters = params;
    out.best_val_loss = trainer.best_val_loss();
    out.best_epoch = trainer.best_epoch();
    out.epochs = trainer.completed_epochs();
    out.history = trainer.history();
    if (kind == ModelKind::SRM) {
        trainer.restore_best();
        out.baseline = srm_baseline(config, &srm);
        data::write_text_atomic(config.models_dir() / "srm_baseline.json", out.baseline.dump(2));
        say(options.log, "srm baseline: " + out.baseline.dump());
    }
    return out;
}

ModelSet load_models(const ExperimentConfig& config, bool tm_srm, bool hrtm) {
    nn::configure_threads(config.threads);
    ModelSet set;
    bool have_norm = false;
    auto open = [&](ModelKind kind) {
        const auto path = checkpoint_path(config, kind);
        if (!std::filesystem::exists(path)) {
            throw IoError("missing " + to_string(kind) + " checkpoint " + path.string() + "; run `plumesr train --model " +
                          to_string(kind) + "` first");
        }
        auto info = nn::read_checkpoint_info(path);
        if (info.kind != to_string(kind)) throw IoError(path.string() + " holds a " + info.kind + " model");
        if (!have_norm) {
            set.normalization = info.normalization;
            have_norm = true;
        } else if (info.normalization.min_val != set.normalization.min_val ||
                   info.normalization.max_val != set.normalization.max_val) {
            throw InvalidArgument("checkpoints were trained with different normalizations");
        }
        return std::make_pair(path, info);
    };
    if (tm_srm) {
        auto [p, info] = open(ModelKind::TM);
        set.tm = nn::build_tm(nn::temporal_config_from_json(info.model_config));
        nn::load_checkpoint_weights(*set.tm, p);
        set.tm->eval();
        auto [q, sinfo] = open(ModelKind::SRM);
        set.srm = nn::build_srm(nn::srm_config_from_json(sinfo.model_config));
        nn::load_checkpoint_weights(*set.srm, q);
        set.srm->eval();
    }
    if (hrtm) {
        auto [p, info] = open(ModelKind::HRTM);
        set.hrtm = nn::build_hrtm(nn::hrtm_config_from_json(info.model_config));
        nn::load_checkpoint_weights(*set.hrtm, p);
        set.hrtm->eval();
    }
    return set;
}

}  // namespace plumesr::experiment
