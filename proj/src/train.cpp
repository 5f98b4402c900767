#include "vlstm/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vlstm/rng.hpp"

namespace vlstm::train {

using data::Split;
using data::WindowedDataset;
using model::ForecastModel;
using nd::NamedTensors;
using nd::Tensor;

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
}

bool early_stop(const std::vector<double>& val_curve, int patience) {
    if (patience < 1) throw std::invalid_argument("early_stop: patience must be >= 1");
    const int n = static_cast<int>(val_curve.size());
    if (n < patience + 1) return false;
    double best_before = val_curve[0];
    for (int i = 1; i < n - patience; ++i) best_before = std::min(best_before, val_curve[i]);
    double best_window = val_curve[n - patience];
    for (int i = n - patience + 1; i < n; ++i) best_window = std::min(best_window, val_curve[i]);
    return best_window >= best_before;
}

void optimizer_step(NamedTensors& params, const NamedTensors& grads, AdamState& state,
                    double learning_rate) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (auto& [name, grad] : grads) {
        Tensor& theta = params.at(name);
        if (!theta.same_shape(grad))
            throw std::invalid_argument("optimizer_step: gradient shape mismatch for " + name);
        Tensor& m = state.m.try_emplace(name, Tensor(grad.rows(), grad.cols())).first->second;
        Tensor& v = state.v.try_emplace(name, Tensor(grad.rows(), grad.cols())).first->second;
        for (std::size_t i = 0; i < grad.numel(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            theta[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

bool clip_global_norm(NamedTensors& grads, double max_norm) {
    if (max_norm <= 0.0) return false;
    double sq = 0.0;
    for (const auto& [name, g] : grads)
        for (std::size_t i = 0; i < g.numel(); ++i) sq += g[i] * g[i];
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return false;
    const double scale = max_norm / norm;
    for (auto& [name, g] : grads)
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= scale;
    return true;
}

namespace {

// Evaluation and training share one batch pump so the arithmetic is
// identical everywhere.
class BatchRunner {
public:
    BatchRunner(const model::ModelConfig& cfg, const NamedTensors& params)
        : cfg_(cfg), graph_(model::build_graph(cfg, true)), bindings_(params) {}

    void set_params(const NamedTensors& params) {
        for (const auto& [name, t] : params) bindings_[name] = t;
    }

    double run_loss(const WindowedDataset& ds, const std::vector<int>& idx, std::size_t lo,
                    std::size_t hi) {
        bind(ds, idx, lo, hi);
        return graph_->evaluate(bindings_).at("loss")[0];
    }

    NamedTensors backward() { return graph_->backward("loss"); }

private:
    void bind(const WindowedDataset& ds, const std::vector<int>& idx, std::size_t lo,
              std::size_t hi) {
        windows_.clear();
        targets_.clear();
        for (std::size_t i = lo; i < hi; ++i) {
            const data::Sample& s = ds.samples[idx[i]];
            windows_.push_back(s.window.data());
            targets_.push_back(s.target);
        }
        model::bind_batch(cfg_, windows_, bindings_);
        bindings_["target"] = Tensor::column(targets_);
    }

    model::ModelConfig cfg_;
    std::unique_ptr<nd::Graph> graph_;
    NamedTensors bindings_;
    std::vector<const double*> windows_;
    std::vector<double> targets_;
};

void fisher_yates(std::vector<int>& v, rng::Stream& stream) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[stream.bounded(i)]);
}

}  // namespace

double evaluate(const ForecastModel& m, const WindowedDataset& ds, Split split) {
    const std::vector<int>& idx = ds.split(split);
    if (idx.empty())
        throw std::invalid_argument("evaluate: split '" + data::to_string(split) + "' is empty");
    BatchRunner runner(m.config, m.params);
    // weighted mean over chunks equals the full-batch mean
    constexpr std::size_t kChunk = 1024;
    double acc = 0.0;
    for (std::size_t lo = 0; lo < idx.size(); lo += kChunk) {
        std::size_t hi = std::min(idx.size(), lo + kChunk);
        acc += runner.run_loss(ds, idx, lo, hi) * static_cast<double>(hi - lo);
    }
    return acc / static_cast<double>(idx.size());
}

TrainResult train_model(ForecastModel& m, const WindowedDataset& ds, const TrainConfig& cfg,
                        const std::function<void(const EpochStats&)>& on_epoch) {
    cfg.validate();
    if (ds.split(Split::Train).empty()) throw std::invalid_argument("train_model: empty train split");
    if (ds.split(Split::Validation).empty())
        throw std::invalid_argument("train_model: empty validation split");
    if (ds.t_seq != m.config.t_seq)
        throw std::invalid_argument("train_model: dataset t_seq " + std::to_string(ds.t_seq) +
                                    " does not match model " + std::to_string(m.config.t_seq));

    TrainResult result;
    BatchRunner runner(m.config, m.params);
    AdamState adam;
    rng::Stream shuffle_stream(rng::derive(cfg.seed, "shuffle"));

    std::vector<int> order = ds.split(Split::Train);
    const std::size_t n_train = order.size();
    const auto t_start = std::chrono::steady_clock::now();

    result.best_val_loss = std::numeric_limits<double>::infinity();
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        if (cfg.shuffle) fisher_yates(order, shuffle_stream);

        double train_acc = 0.0;
        bool finite = true;
        for (std::size_t lo = 0; lo < n_train && finite; lo += cfg.batch_size) {
            const std::size_t hi = std::min(n_train, lo + cfg.batch_size);
            const double batch_loss = runner.run_loss(ds, order, lo, hi);
            if (!std::isfinite(batch_loss)) {
                finite = false;
                result.diagnostic = "non-finite training loss in epoch " + std::to_string(epoch);
                break;
            }
            train_acc += batch_loss * static_cast<double>(hi - lo);
            NamedTensors grads = runner.backward();
            if (clip_global_norm(grads, cfg.clip_norm)) ++result.clip_events;
            optimizer_step(m.params, grads, adam, cfg.learning_rate);
            runner.set_params(m.params);
        }
        if (!finite) {
            result.diverged = true;
            result.converged = false;
            break;
        }

        result.train_curve.push_back(train_acc / static_cast<double>(n_train));
        const double val_loss = evaluate(m, ds, Split::Validation);
        if (!std::isfinite(val_loss)) {
            result.diagnostic = "non-finite validation loss in epoch " + std::to_string(epoch);
            result.diverged = true;
            result.converged = false;
            break;
        }
        result.val_curve.push_back(val_loss);
        result.epochs_run = epoch;

        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            result.best_params = m.params;
        }

        if (on_epoch) {
            EpochStats stats;
            stats.epoch = epoch;
            stats.train_loss = result.train_curve.back();
            stats.val_loss = val_loss;
            stats.wall_time_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
            on_epoch(stats);
        }

        if (early_stop(result.val_curve, cfg.patience)) {
            result.converged = true;
            break;
        }
    }

    if (!result.best_params.empty()) m.params = result.best_params;
    return result;
}

}  // namespace vlstm::train
