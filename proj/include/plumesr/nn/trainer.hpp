#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>
#include <json.hpp>

#include "plumesr/data/normalization.hpp"
#include "plumesr/nn/config.hpp"

namespace plumesr::nn {

/// Reduce-on-plateau for a minimized quantity, relative threshold 1e-4.
class PlateauScheduler {
public:
    PlateauScheduler(double factor = 0.5, int patience = 20, double min_lr = 0.0);
    /// Returns the learning rate to use for the next epoch.
    double step(double metric, double lr);

    nlohmann::json state() const;
    void load_state(const nlohmann::json& j);
    int bad_epochs() const { return bad_; }
    double best() const { return best_; }

private:
    double factor_;
    int patience_;
    double min_lr_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_ = 0;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
    double extra = std::numeric_limits<double>::quiet_NaN();
};

/// Random-access supervised dataset producing (input, target) batches.
struct Dataset {
    std::size_t size = 0;
    std::function<std::pair<torch::Tensor, torch::Tensor>(const std::vector<std::size_t>&)> batch;
};

/// MSE / Adam / plateau trainer with best-validation tracking and exact resume
/// at epoch boundaries (RNG state is re-derived from the seed every epoch).
class Trainer {
public:
    using Forward = std::function<torch::Tensor(const torch::Tensor&)>;

    Trainer(std::shared_ptr<torch::nn::Module> model, Forward forward, TrainConfig config);

    /// Optional per-epoch validation metric (evaluated in eval mode) stored as EpochRecord::extra.
    void set_extra_metric(std::string name, std::function<double()> fn);

    EpochRecord run_epoch(const Dataset& train, const Dataset& val);
    /// Runs until config.epochs epochs are complete (counting resumed ones).
    void fit(const Dataset& train, const Dataset& val, const std::function<void(const EpochRecord&)>& on_epoch = {});
    /// Mean squared error over the dataset, eval mode, no grad.
    double evaluate(const Dataset& ds, int max_samples = 0) const;

    int completed_epochs() const { return epoch_; }
    const std::vector<EpochRecord>& history() const { return history_; }
    double best_val_loss() const { return best_val_; }
    int best_epoch() const { return best_epoch_; }
    double learning_rate() const;
    const TrainConfig& config() const { return config_; }
    void set_epochs(int epochs) { config_.epochs = epochs; }

    /// Copies the best-validation weights into the live model.
    void restore_best();

    std::string history_csv() const;

    /// Single-file checkpoint: best weights, latest weights, optimizer state and JSON metadata.
    void save_checkpoint(const std::filesystem::path& path, const std::string& kind, const nlohmann::json& model_config,
                         const data::NormalizationSpec& norm, const nlohmann::json& provenance = {}) const;
    /// Restores latest weights, optimizer, scheduler and history for continued training.
    void resume(const std::filesystem::path& path);

private:
    std::shared_ptr<torch::nn::Module> model_;
    Forward forward_;
    TrainConfig config_;
    torch::optim::Adam optimizer_;
    PlateauScheduler scheduler_;
    std::vector<EpochRecord> history_;
    int epoch_ = 0;
    double best_val_ = std::numeric_limits<double>::infinity();
    int best_epoch_ = -1;
    std::map<std::string, torch::Tensor> best_state_;
    std::string extra_name_;
    std::function<double()> extra_;
};

/// Named parameters and buffers, detached clones.
std::map<std::string, torch::Tensor> snapshot_state(const torch::nn::Module& model);
void load_state(torch::nn::Module& model, const std::map<std::string, torch::Tensor>& state);

struct CheckpointInfo {
    std::string kind;
    nlohmann::json model_config;
    data::NormalizationSpec normalization;
    nlohmann::json meta;  ///< full metadata document
};

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);
/// which: "model" (best validation) or "latest_model".
void load_checkpoint_weights(torch::nn::Module& model, const std::filesystem::path& path,
                             const std::string& which = "model");

}  // namespace plumesr::nn
