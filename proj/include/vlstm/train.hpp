#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vlstm/data.hpp"
#include "vlstm/model.hpp"

namespace vlstm::train {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 128;
    int max_epochs = 1000;
    int patience = 5;
    uint64_t seed = 0;
    bool shuffle = true;
    double clip_norm = 10.0;  // global gradient norm; <= 0 disables

    void validate() const;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double wall_time_s = 0.0;
};

struct TrainResult {
    int epochs_run = 0;
    bool converged = false;  // early-stopping predicate fired
    bool diverged = false;   // non-finite loss; aborted
    std::string diagnostic;
    std::vector<double> train_curve;  // mean minibatch loss per epoch
    std::vector<double> val_curve;
    double best_val_loss = 0.0;
    int best_epoch = 0;  // 1-based
    int clip_events = 0;
    nd::NamedTensors best_params;  // state restored into the model
};

// True once the last `patience` epochs bring no improvement over the
// best loss seen before them (requires at least patience+1 entries).
bool early_stop(const std::vector<double>& val_curve, int patience);

// Adam with bias-corrected moments (beta1 = 0.9, beta2 = 0.999,
// eps = 1e-8).
struct AdamState {
    nd::NamedTensors m;
    nd::NamedTensors v;
    long step = 0;
};
void optimizer_step(nd::NamedTensors& params, const nd::NamedTensors& grads, AdamState& state,
                    double learning_rate);

// Scales gradients so their global L2 norm is at most max_norm.
// Returns true when clipping occurred.
bool clip_global_norm(nd::NamedTensors& grads, double max_norm);

// Full-split MSE, deterministic, chunked to bound memory.
double evaluate(const model::ForecastModel& m, const data::WindowedDataset& ds, data::Split split);

// Mini-batch training with early stopping on validation loss and
// best-epoch weight restoration. The model is left holding the
// best-validation parameters.
TrainResult train_model(model::ForecastModel& m, const data::WindowedDataset& ds,
                        const TrainConfig& cfg,
                        const std::function<void(const EpochStats&)>& on_epoch = nullptr);

}  // namespace vlstm::train
