#include "vlstm/model.hpp"

#include <cmath>
#include <stdexcept>

#include "vlstm/archive.hpp"
#include "vlstm/rng.hpp"

namespace vlstm::model {

using cells::Arch;
using cells::CellConfig;
using cells::CellGraph;
using nd::Graph;
using nd::NamedTensors;
using nd::Tensor;

void ModelConfig::validate() const {
    cell.validate();
    if (t_seq < 1) throw std::invalid_argument("t_seq must be >= 1");
}

namespace {

Tensor head_glorot(int rows, int cols, uint64_t seed, const std::string& key) {
    rng::Stream stream(rng::derive(seed, key));
    const double s = std::sqrt(6.0 / (rows + cols));
    Tensor t(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t.at(i, j) = stream.uniform(-s, s);
    return t;
}

}  // namespace

ForecastModel make_model(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    ForecastModel m;
    m.config = cfg;
    m.params = cells::init_cell_params(cfg.cell, seed);
    const int nh = cfg.cell.n_h;
    m.params["head1.w"] = head_glorot(nh, nh, seed, "head1.w");
    m.params["head1.b"] = Tensor(1, nh);
    m.params["head2.w"] = head_glorot(1, nh, seed, "head2.w");
    m.params["head2.b"] = Tensor(1, 1);
    return m;
}

std::unique_ptr<Graph> build_graph(const ModelConfig& cfg, bool with_loss) {
    cfg.validate();
    auto g = std::make_unique<Graph>();
    CellGraph cell(*g, cfg.cell);

    cells::StepNodes state = cell.initial_state();
    for (int t = 0; t < cfg.t_seq; ++t) {
        Graph::NodeId x_t = g->input("x" + std::to_string(t), Graph::kBatch, cfg.cell.n_x);
        state = cell.step(x_t, state, "t" + std::to_string(t));
    }

    const int nh = cfg.cell.n_h;
    Graph::NodeId h1w = g->param("head1.w", nh, nh);
    Graph::NodeId h1b = g->param("head1.b", 1, nh);
    Graph::NodeId h2w = g->param("head2.w", 1, nh);
    Graph::NodeId h2b = g->param("head2.b", 1, 1);
    Graph::NodeId hidden = g->sigmoid(g->affine(state.h, h1w, h1b, "head1"), "head1.act");
    Graph::NodeId pred = g->affine(hidden, h2w, h2b, "head2");
    g->mark_output("pred", pred);

    if (with_loss) {
        Graph::NodeId target = g->input("target", Graph::kBatch, 1);
        g->mark_output("loss", g->mse(pred, target, "mse"));
    }
    return g;
}

void bind_batch(const ModelConfig& cfg, const std::vector<const double*>& windows,
                NamedTensors& bindings) {
    const int batch = static_cast<int>(windows.size());
    if (batch == 0) throw std::invalid_argument("bind_batch: empty batch");
    const int nx = cfg.cell.n_x;
    for (int t = 0; t < cfg.t_seq; ++t) {
        Tensor& x = bindings["x" + std::to_string(t)];
        x.resize(batch, nx);
        for (int r = 0; r < batch; ++r)
            for (int j = 0; j < nx; ++j) x.at(r, j) = windows[r][t * nx + j];
    }
    cells::bind_zero_state(cfg.cell, batch, bindings);
}

double predict(const ForecastModel& m, const Tensor& window) {
    if (window.rows() != m.config.t_seq || window.cols() != m.config.cell.n_x)
        throw std::invalid_argument("predict: window " + window.shape_str() + " does not match " +
                                    std::to_string(m.config.t_seq) + "x" +
                                    std::to_string(m.config.cell.n_x));
    auto g = build_graph(m.config, false);
    NamedTensors bindings = m.params;
    bind_batch(m.config, {window.data()}, bindings);
    return g->evaluate(bindings).at("pred")[0];
}

std::vector<double> predict_batch(const ForecastModel& m, const std::vector<Tensor>& windows) {
    if (windows.empty()) return {};
    std::vector<const double*> ptrs;
    ptrs.reserve(windows.size());
    for (const Tensor& w : windows) {
        if (w.rows() != m.config.t_seq || w.cols() != m.config.cell.n_x)
            throw std::invalid_argument("predict_batch: window shape mismatch");
        ptrs.push_back(w.data());
    }
    auto g = build_graph(m.config, false);
    NamedTensors bindings = m.params;
    bind_batch(m.config, ptrs, bindings);
    Tensor pred = g->evaluate(bindings).at("pred");
    std::vector<double> out(pred.numel());
    for (std::size_t i = 0; i < pred.numel(); ++i) out[i] = pred[i];
    return out;
}

double loss(const ForecastModel& m, const std::vector<Tensor>& windows,
            const std::vector<double>& targets) {
    if (windows.empty()) throw std::invalid_argument("loss: empty batch");
    if (windows.size() != targets.size())
        throw std::invalid_argument("loss: window/target count mismatch");
    std::vector<const double*> ptrs;
    ptrs.reserve(windows.size());
    for (const Tensor& w : windows) ptrs.push_back(w.data());
    auto g = build_graph(m.config, true);
    NamedTensors bindings = m.params;
    bind_batch(m.config, ptrs, bindings);
    bindings["target"] = Tensor::column(targets);
    return g->evaluate(bindings).at("loss")[0];
}

namespace {

constexpr double kArchCode[] = {0.0, 1.0, 2.0};

double arch_code(Arch a) { return kArchCode[static_cast<int>(a)]; }

}  // namespace

void save_model(const std::filesystem::path& path, const ForecastModel& m) {
    NamedTensors all = m.params;
    all["meta.arch"] = Tensor::scalar(arch_code(m.config.cell.arch));
    all["meta.n_x"] = Tensor::scalar(m.config.cell.n_x);
    all["meta.n_h"] = Tensor::scalar(m.config.cell.n_h);
    all["meta.n_scales"] = Tensor::scalar(m.config.cell.n_scales);
    all["meta.bias"] = Tensor::scalar(m.config.cell.bias == cells::BiasMode::On ? 1.0 : 0.0);
    all["meta.coupling"] =
        Tensor::scalar(m.config.cell.coupling == cells::GateCoupling::Tied ? 1.0 : 0.0);
    all["meta.t_seq"] = Tensor::scalar(m.config.t_seq);
    archive::save(path, all);
}

ForecastModel load_model(const std::filesystem::path& path) {
    NamedTensors all = archive::load(path);
    auto take_meta = [&](const std::string& key) {
        auto it = all.find(key);
        if (it == all.end()) throw std::runtime_error("model archive missing " + key);
        double v = it->second[0];
        all.erase(it);
        return v;
    };
    ForecastModel m;
    const int arch = static_cast<int>(take_meta("meta.arch"));
    if (arch < 0 || arch > 2) throw std::runtime_error("model archive: bad arch code");
    m.config.cell.arch = static_cast<Arch>(arch);
    m.config.cell.n_x = static_cast<int>(take_meta("meta.n_x"));
    m.config.cell.n_h = static_cast<int>(take_meta("meta.n_h"));
    m.config.cell.n_scales = static_cast<int>(take_meta("meta.n_scales"));
    m.config.cell.bias = take_meta("meta.bias") != 0.0 ? cells::BiasMode::On : cells::BiasMode::Off;
    m.config.cell.coupling = take_meta("meta.coupling") != 0.0 ? cells::GateCoupling::Tied
                                                               : cells::GateCoupling::Independent;
    m.config.t_seq = static_cast<int>(take_meta("meta.t_seq"));
    m.config.validate();
    m.params = std::move(all);
    return m;
}

}  // namespace vlstm::model
