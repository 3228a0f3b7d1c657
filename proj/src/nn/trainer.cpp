#include "plumesr/nn/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "plumesr/data/container.hpp"
#include "plumesr/error.hpp"
#include "plumesr/nn/models.hpp"
#include "plumesr/random.hpp"

namespace plumesr::nn {

PlateauScheduler::PlateauScheduler(double factor, int patience, double min_lr)
    : factor_(factor), patience_(patience), min_lr_(min_lr) {}

double PlateauScheduler::step(double metric, double lr) {
    if (metric < best_ * (1.0 - 1.0e-4)) {
        best_ = metric;
        bad_ = 0;
        return lr;
    }
    if (++bad_ > patience_) {
        bad_ = 0;
        return std::max(lr * factor_, min_lr_);
    }
    return lr;
}

nlohmann::json PlateauScheduler::state() const {
    return {{"best", std::isfinite(best_) ? nlohmann::json(best_) : nlohmann::json(nullptr)}, {"bad_epochs", bad_}};
}

void PlateauScheduler::load_state(const nlohmann::json& j) {
    best_ = j.at("best").is_null() ? std::numeric_limits<double>::infinity() : j.at("best").get<double>();
    bad_ = j.at("bad_epochs").get<int>();
}

std::map<std::string, torch::Tensor> snapshot_state(const torch::nn::Module& model) {
    std::map<std::string, torch::Tensor> out;
    for (const auto& p : model.named_parameters()) out[p.key()] = p.value().detach().clone();
    for (const auto& b : model.named_buffers()) out[b.key()] = b.value().detach().clone();
    return out;
}

void load_state(torch::nn::Module& model, const std::map<std::string, torch::Tensor>& state) {
    torch::NoGradGuard guard;
    auto assign = [&](const std::string& name, torch::Tensor& dst) {
        auto it = state.find(name);
        if (it == state.end()) throw IoError("checkpoint lacks tensor '" + name + "'");
        if (!it->second.sizes().equals(dst.sizes())) throw IoError("checkpoint tensor '" + name + "' has the wrong shape");
        dst.copy_(it->second);
    };
    for (auto& p : model.named_parameters()) assign(p.key(), p.value());
    for (auto& b : model.named_buffers()) assign(b.key(), b.value());
}

namespace {

void write_state(torch::serialize::OutputArchive& ar, const std::map<std::string, torch::Tensor>& state) {
    for (const auto& [name, t] : state) ar.write(name, t);
}

std::map<std::string, torch::Tensor> read_state(torch::serialize::InputArchive& ar, const torch::nn::Module& like) {
    std::map<std::string, torch::Tensor> out;
    auto grab = [&](const std::string& name) {
        torch::Tensor t;
        if (!ar.try_read(name, t)) throw IoError("checkpoint lacks tensor '" + name + "'");
        out[name] = t;
    };
    for (const auto& p : like.named_parameters()) grab(p.key());
    for (const auto& b : like.named_buffers()) grab(b.key());
    return out;
}

nlohmann::json record_json(const EpochRecord& r) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"epoch", r.epoch}, {"train_loss", num(r.train_loss)}, {"val_loss", num(r.val_loss)}, {"lr", r.lr},
            {"extra", num(r.extra)}};
}

EpochRecord record_from(const nlohmann::json& j) {
    auto num = [](const nlohmann::json& v) {
        return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    return {j.at("epoch").get<int>(), num(j.at("train_loss")), num(j.at("val_loss")), j.at("lr").get<double>(),
            num(j.at("extra"))};
}

torch::serialize::InputArchive open_archive(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
    torch::serialize::InputArchive ar;
    try {
        ar.load_from(path.string());
    } catch (const c10::Error& e) {
        throw IoError("cannot read checkpoint " + path.string() + ": " + e.what_without_backtrace());
    }
    return ar;
}

nlohmann::json read_meta(torch::serialize::InputArchive& ar) {
    c10::IValue v;
    if (!ar.try_read("meta", v) || !v.isString()) throw IoError("checkpoint has no metadata");
    return nlohmann::json::parse(v.toStringRef());
}

}  // namespace

Trainer::Trainer(std::shared_ptr<torch::nn::Module> model, Forward forward, TrainConfig config)
    : model_(std::move(model)),
      forward_(std::move(forward)),
      config_(config),
      optimizer_(model_->parameters(), torch::optim::AdamOptions(config.learning_rate)),
      scheduler_(config.plateau_factor, config.plateau_patience, config.min_learning_rate) {
    config_.validate();
}

void Trainer::set_extra_metric(std::string name, std::function<double()> fn) {
    extra_name_ = std::move(name);
    extra_ = std::move(fn);
}

double Trainer::learning_rate() const {
    return static_cast<const torch::optim::AdamOptions&>(optimizer_.param_groups().front().options()).lr();
}

double Trainer::evaluate(const Dataset& ds, int max_samples) const {
    if (ds.size == 0) throw InvalidArgument("cannot evaluate an empty dataset");
    torch::NoGradGuard guard;
    model_->eval();
    const std::size_t n = max_samples > 0 ? std::min<std::size_t>(ds.size, static_cast<std::size_t>(max_samples)) : ds.size;
    double sse = 0.0;
    double count = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config_.batch_size)) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(n, start + static_cast<std::size_t>(config_.batch_size)); ++i) idx.push_back(i);
        auto [x, y] = ds.batch(idx);
        auto pred = forward_(x);
        sse += (pred - y).to(torch::kDouble).pow(2).sum().item<double>();
        count += static_cast<double>(y.numel());
    }
    return sse / count;
}

EpochRecord Trainer::run_epoch(const Dataset& train, const Dataset& val) {
    if (train.size == 0 || val.size == 0) throw InvalidArgument("training and validation splits must be non-empty");
    const int epoch = epoch_;
    torch::manual_seed(config_.seed + static_cast<std::uint64_t>(epoch));
    std::vector<std::size_t> order(train.size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(config_.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    model_->train();
    const auto bs = static_cast<std::size_t>(config_.batch_size);
    std::size_t batches = (order.size() + bs - 1) / bs;
    if (config_.max_batches_per_epoch > 0) batches = std::min<std::size_t>(batches, static_cast<std::size_t>(config_.max_batches_per_epoch));
    double sse = 0.0, count = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(b * bs),
                                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), (b + 1) * bs)));
        auto [x, y] = train.batch(idx);
        optimizer_.zero_grad();
        auto loss = torch::mse_loss(forward_(x), y);
        const double value = loss.item<double>();
        if (!std::isfinite(value)) {
            throw NumericalFailure("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(b),
                                   static_cast<long>(b));
        }
        loss.backward();
        if (config_.grad_clip > 0.0) torch::nn::utils::clip_grad_norm_(model_->parameters(), config_.grad_clip);
        optimizer_.step();
        sse += value * static_cast<double>(y.numel());
        count += static_cast<double>(y.numel());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = sse / count;
    rec.lr = learning_rate();
    rec.val_loss = evaluate(val, config_.max_val_samples);
    if (!std::isfinite(rec.val_loss)) throw NumericalFailure("non-finite validation loss at epoch " + std::to_string(epoch));
    if (extra_) rec.extra = extra_();
    if (rec.val_loss < best_val_) {
        best_val_ = rec.val_loss;
        best_epoch_ = epoch;
        best_state_ = snapshot_state(*model_);
    }
    const double next_lr = scheduler_.step(rec.val_loss, rec.lr);
    for (auto& g : optimizer_.param_groups()) static_cast<torch::optim::AdamOptions&>(g.options()).lr(next_lr);
    history_.push_back(rec);
    ++epoch_;
    model_->train();
    return rec;
}

void Trainer::fit(const Dataset& train, const Dataset& val, const std::function<void(const EpochRecord&)>& on_epoch) {
    while (epoch_ < config_.epochs) {
        const auto rec = run_epoch(train, val);
        if (on_epoch) on_epoch(rec);
    }
}

void Trainer::restore_best() {
    if (!best_state_.empty()) load_state(*model_, best_state_);
}

std::string Trainer::history_csv() const {
    std::ostringstream os;
    os << std::setprecision(10) << "epoch,train_loss,val_loss,lr";
    if (!extra_name_.empty()) os << ',' << extra_name_;
    os << '\n';
    for (const auto& r : history_) {
        os << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.lr;
        if (!extra_name_.empty()) os << ',' << r.extra;
        os << '\n';
    }
    return os.str();
}

void Trainer::save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                              const nlohmann::json& model_config, const data::NormalizationSpec& norm,
                              const nlohmann::json& provenance) const {
    nlohmann::json meta;
    meta["format"] = "plumesr-checkpoint-1";
    meta["kind"] = kind;
    meta["model_config"] = model_config;
    meta["normalization"] = data::to_json(norm);
    meta["train_config"] = to_json(config_);
    meta["parameter_count"] = count_parameters(*model_);
    meta["history"] = nlohmann::json::array();
    for (const auto& r : history_) meta["history"].push_back(record_json(r));
    meta["extra_metric"] = extra_name_;
    meta["state"] = {{"epoch", epoch_},
                     {"best_val_loss", std::isfinite(best_val_) ? nlohmann::json(best_val_) : nlohmann::json(nullptr)},
                     {"best_epoch", best_epoch_},
                     {"learning_rate", learning_rate()},
                     {"scheduler", scheduler_.state()}};
    meta["provenance"] = provenance;

    torch::serialize::OutputArchive root, best, latest, opt;
    write_state(best, best_state_.empty() ? snapshot_state(*model_) : best_state_);
    write_state(latest, snapshot_state(*model_));
    optimizer_.save(opt);
    root.write("meta", c10::IValue(meta.dump()));
    root.write("model", best);
    root.write("latest_model", latest);
    root.write("optimizer", opt);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    root.save_to(tmp.string());
    std::filesystem::rename(tmp, path);
}

void Trainer::resume(const std::filesystem::path& path) {
    auto root = open_archive(path);
    const auto meta = read_meta(root);
    torch::serialize::InputArchive latest, best, opt;
    if (!root.try_read("latest_model", latest) || !root.try_read("model", best) || !root.try_read("optimizer", opt)) {
        throw IoError("checkpoint " + path.string() + " lacks trainer state");
    }
    load_state(*model_, read_state(latest, *model_));
    best_state_ = read_state(best, *model_);
    optimizer_.load(opt);
    const auto& st = meta.at("state");
    epoch_ = st.at("epoch").get<int>();
    best_val_ = st.at("best_val_loss").is_null() ? std::numeric_limits<double>::infinity() : st.at("best_val_loss").get<double>();
    best_epoch_ = st.at("best_epoch").get<int>();
    scheduler_.load_state(st.at("scheduler"));
    const double lr = st.at("learning_rate").get<double>();
    for (auto& g : optimizer_.param_groups()) static_cast<torch::optim::AdamOptions&>(g.options()).lr(lr);
    history_.clear();
    for (const auto& r : meta.at("history")) history_.push_back(record_from(r));
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
    auto root = open_archive(path);
    CheckpointInfo info;
    info.meta = read_meta(root);
    info.kind = info.meta.at("kind").get<std::string>();
    info.model_config = info.meta.at("model_config");
    info.normalization = data::normalization_from_json(info.meta.at("normalization"));
    return info;
}

void load_checkpoint_weights(torch::nn::Module& model, const std::filesystem::path& path, const std::string& which) {
    auto root = open_archive(path);
    torch::serialize::InputArchive sub;
    if (!root.try_read(which, sub)) throw IoError("checkpoint " + path.string() + " has no '" + which + "' weights");
    load_state(model, read_state(sub, model));
}

}  // namespace plumesr::nn
