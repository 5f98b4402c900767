#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "vlstm/cells.hpp"
#include "vlstm/graph.hpp"

namespace vlstm::model {

struct ModelConfig {
    cells::CellConfig cell;
    int t_seq = 10;

    void validate() const;
};

// Recurrent cell unrolled over a window of t_seq steps, a dense sigmoid
// layer of size n_h, and a final dense linear layer emitting the
// standardized log-volatility forecast. Head layers always carry biases,
// regardless of the cell bias mode.
struct ForecastModel {
    ModelConfig config;
    nd::NamedTensors params;  // cell blocks + head1.w/head1.b/head2.w/head2.b
};

ForecastModel make_model(const ModelConfig& cfg, uint64_t seed);

// Builds the unrolled forward graph. Binding names: x<t> for each step
// (B x n_x), the cell state inputs, and "target" (B x 1) when with_loss.
// Outputs: "pred" (B x 1) and, when requested, "loss" (1 x 1).
std::unique_ptr<nd::Graph> build_graph(const ModelConfig& cfg, bool with_loss);

// Bindings for a batch of windows (each t_seq x n_x, flattened row-major).
void bind_batch(const ModelConfig& cfg, const std::vector<const double*>& windows,
                nd::NamedTensors& bindings);

double predict(const ForecastModel& m, const nd::Tensor& window);
std::vector<double> predict_batch(const ForecastModel& m, const std::vector<nd::Tensor>& windows);
double loss(const ForecastModel& m, const std::vector<nd::Tensor>& windows,
            const std::vector<double>& targets);

// Model archive: parameter tensors plus the config echoed as meta.*
// scalar entries (same named-tensor format).
void save_model(const std::filesystem::path& path, const ForecastModel& m);
ForecastModel load_model(const std::filesystem::path& path);

}  // namespace vlstm::model
