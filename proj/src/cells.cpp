#include "vlstm/cells.hpp"

#include <cmath>
#include <stdexcept>

#include "vlstm/linalg.hpp"
#include "vlstm/rng.hpp"

namespace vlstm::cells {

using nd::Graph;
using nd::NamedTensors;
using nd::Tensor;

std::string to_string(Arch a) {
    switch (a) {
        case Arch::Lstm: return "lstm";
        case Arch::Vlstm: return "vlstm";
        case Arch::MsGru: return "msgru";
    }
    return "?";
}

std::string to_string(BiasMode b) { return b == BiasMode::On ? "on" : "off"; }

std::string to_string(GateCoupling c) {
    return c == GateCoupling::Independent ? "independent" : "tied";
}

Arch arch_from_string(const std::string& s) {
    if (s == "lstm") return Arch::Lstm;
    if (s == "vlstm") return Arch::Vlstm;
    if (s == "msgru") return Arch::MsGru;
    throw std::invalid_argument("unknown architecture '" + s + "'");
}

BiasMode bias_from_string(const std::string& s) {
    if (s == "on") return BiasMode::On;
    if (s == "off") return BiasMode::Off;
    throw std::invalid_argument("unknown bias mode '" + s + "'");
}

GateCoupling coupling_from_string(const std::string& s) {
    if (s == "independent") return GateCoupling::Independent;
    if (s == "tied") return GateCoupling::Tied;
    throw std::invalid_argument("unknown gate coupling '" + s + "'");
}

void CellConfig::validate() const {
    if (n_x < 1 || n_h < 1) throw std::invalid_argument("cell dims must be >= 1");
    if (n_scales < 1) throw std::invalid_argument("n_scales must be >= 1");
    if (arch == Arch::Lstm && n_scales != 1)
        throw std::invalid_argument("LSTM has a single timescale per dimension");
}

namespace {

// Blocks are keyed by role name; the scale index is folded in so that an
// LSTM block and the matching VLSTM scale-0 block share a stream.
std::string stream_key(const std::string& role, int scale) {
    return role + "#" + std::to_string(scale);
}

Tensor glorot_uniform(int rows, int cols, int fan_in, int fan_out, rng::Stream& stream) {
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor t(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t.at(i, j) = stream.uniform(-s, s);
    return t;
}

// One gate block: input weights (n_h x n_x), recurrent weights (n_h x
// n_h, orthogonal), optional bias row.
void init_gate_block(NamedTensors& p, const CellConfig& cfg, uint64_t seed,
                     const std::string& role, int scale, const std::string& name_suffix,
                     double bias_value) {
    const std::string key = stream_key(role, scale);
    rng::Stream w_stream(rng::derive(seed, "w_" + key));
    p["w_" + role + name_suffix] = glorot_uniform(cfg.n_h, cfg.n_x, cfg.n_x, cfg.n_h, w_stream);
    p["u_" + role + name_suffix] = linalg::random_orthogonal(cfg.n_h, rng::derive(seed, "u_" + key));
    if (cfg.bias == BiasMode::On) {
        Tensor b(1, cfg.n_h);
        b.fill(bias_value);
        p["b_" + role + name_suffix] = std::move(b);
    }
}

}  // namespace

nd::NamedTensors init_cell_params(const CellConfig& cfg, uint64_t seed) {
    cfg.validate();
    NamedTensors p;
    switch (cfg.arch) {
        case Arch::Lstm:
            init_gate_block(p, cfg, seed, "c", 0, "", 0.0);
            init_gate_block(p, cfg, seed, "o", 0, "", 0.0);
            init_gate_block(p, cfg, seed, "f", 0, "", 1.0);
            init_gate_block(p, cfg, seed, "i", 0, "", 0.0);
            break;
        case Arch::Vlstm: {
            init_gate_block(p, cfg, seed, "c", 0, "", 0.0);
            init_gate_block(p, cfg, seed, "o", 0, "", 0.0);
            for (int k = 0; k < cfg.n_scales; ++k) {
                const std::string sfx = "." + std::to_string(k);
                init_gate_block(p, cfg, seed, "f", k, sfx, 1.0);
                if (cfg.coupling == GateCoupling::Independent)
                    init_gate_block(p, cfg, seed, "i", k, sfx, 0.0);
            }
            if (cfg.n_scales == 2) {
                p["mix_a"] = Tensor(1, cfg.n_h);  // alpha = sigmoid(0) = 0.5
            } else if (cfg.n_scales > 2) {
                p["mix_a"] = Tensor(cfg.n_scales, cfg.n_h);  // softmax of zeros = 1/n
            }
            break;
        }
        case Arch::MsGru: {
            init_gate_block(p, cfg, seed, "r", 0, "", 0.0);
            init_gate_block(p, cfg, seed, "c", 0, "", 0.0);
            for (int k = 0; k < cfg.n_scales; ++k)
                init_gate_block(p, cfg, seed, "l", k, "." + std::to_string(k), 0.0);
            if (cfg.n_scales >= 2) p["mix_w"] = Tensor(cfg.n_scales, cfg.n_h);
            break;
        }
    }
    return p;
}

int param_count(const nd::NamedTensors& params) {
    std::size_t total = 0;
    for (const auto& [name, t] : params) total += t.numel();
    return static_cast<int>(total);
}

// -- graph building ----------------------------------------------------------

CellGraph::CellGraph(Graph& g, const CellConfig& cfg) : g_(g), cfg_(cfg) {
    cfg_.validate();
    const NamedTensors shapes = init_cell_params(cfg_, 0);  // layout only
    for (const auto& [name, t] : shapes) params_[name] = g_.param(name, t.rows(), t.cols());

    if (cfg_.arch == Arch::Vlstm && cfg_.n_scales == 2) {
        alpha_ = g_.sigmoid(params_.at("mix_a"), "mix_alpha");
    } else if (cfg_.arch == Arch::Vlstm && cfg_.n_scales > 2) {
        Graph::NodeId sm = g_.softmax_scales(params_.at("mix_a"), "mix_softmax");
        for (int k = 0; k < cfg_.n_scales; ++k)
            mix_rows_.push_back(g_.row_slice(sm, k, "mix_w." + std::to_string(k)));
    } else if (cfg_.arch == Arch::MsGru && cfg_.n_scales >= 2) {
        Graph::NodeId sm = g_.softmax_scales(params_.at("mix_w"), "mix_softmax");
        for (int k = 0; k < cfg_.n_scales; ++k)
            mix_rows_.push_back(g_.row_slice(sm, k, "mix_w." + std::to_string(k)));
    }

    state0_.c_scales.resize(cfg_.scales());
    for (int k = 0; k < cfg_.scales(); ++k)
        state0_.c_scales[k] = g_.input("c0." + std::to_string(k), Graph::kBatch, cfg_.n_h);
    if (cfg_.arch == Arch::MsGru) {
        // carried state is the mix of the scale states
        state0_.c_mixed = mix(state0_.c_scales, "t_init");
        state0_.h = state0_.c_mixed;
    } else {
        state0_.h = g_.input("h0", Graph::kBatch, cfg_.n_h);
        state0_.c_mixed = state0_.c_scales[0];
    }
}

StepNodes CellGraph::initial_state() const { return state0_; }

Graph::NodeId CellGraph::gate(Graph::NodeId x, const std::string& w, Graph::NodeId h,
                              const std::string& u, const std::string& b,
                              const std::string& tag) const {
    Graph::NodeId from_x = g_.affine(x, params_.at(w), Graph::kNone, tag + ".wx");
    Graph::NodeId bias = cfg_.bias == BiasMode::On ? params_.at(b) : Graph::kNone;
    Graph::NodeId from_h = g_.affine(h, params_.at(u), bias, tag + ".uh");
    return g_.add(from_x, from_h, tag + ".pre");
}

Graph::NodeId CellGraph::mix(const std::vector<Graph::NodeId>& c, const std::string& tag) const {
    if (c.size() == 1) return c[0];
    if (cfg_.arch == Arch::Vlstm && cfg_.n_scales == 2) {
        // c_mixed = alpha (.) c0 + (1 - alpha) (.) c1
        Graph::NodeId lhs = g_.hadamard(alpha_, c[0], tag + ".mix0");
        Graph::NodeId one_minus = g_.scalar_mix(alpha_, -1.0, 1.0, tag + ".one_minus_alpha");
        Graph::NodeId rhs = g_.hadamard(one_minus, c[1], tag + ".mix1");
        return g_.add(lhs, rhs, tag + ".mixed");
    }
    Graph::NodeId acc = g_.hadamard(mix_rows_[0], c[0], tag + ".mix0");
    for (std::size_t k = 1; k < c.size(); ++k) {
        Graph::NodeId term = g_.hadamard(mix_rows_[k], c[k], tag + ".mix" + std::to_string(k));
        acc = g_.add(acc, term, tag + ".mixacc" + std::to_string(k));
    }
    return acc;
}

StepNodes CellGraph::step_lstm(Graph::NodeId x_t, const StepNodes& prev,
                               const std::string& tag) const {
    Graph::NodeId cand = g_.tanh(gate(x_t, "w_c", prev.h, "u_c", "b_c", tag + ".c"), tag + ".cand");
    Graph::NodeId out = g_.sigmoid(gate(x_t, "w_o", prev.h, "u_o", "b_o", tag + ".o"), tag + ".og");
    Graph::NodeId f = g_.sigmoid(gate(x_t, "w_f", prev.h, "u_f", "b_f", tag + ".f"), tag + ".fg");
    Graph::NodeId i = g_.sigmoid(gate(x_t, "w_i", prev.h, "u_i", "b_i", tag + ".i"), tag + ".ig");
    Graph::NodeId keep = g_.hadamard(f, prev.c_scales[0], tag + ".keep");
    Graph::NodeId update = g_.hadamard(i, cand, tag + ".update");
    Graph::NodeId c = g_.add(keep, update, tag + ".cell");
    Graph::NodeId h = g_.hadamard(out, g_.tanh(c, tag + ".cell_act"), tag + ".h");
    return {h, {c}, c};
}

StepNodes CellGraph::step_vlstm(Graph::NodeId x_t, const StepNodes& prev,
                                const std::string& tag) const {
    Graph::NodeId cand = g_.tanh(gate(x_t, "w_c", prev.h, "u_c", "b_c", tag + ".c"), tag + ".cand");
    Graph::NodeId out = g_.sigmoid(gate(x_t, "w_o", prev.h, "u_o", "b_o", tag + ".o"), tag + ".og");
    std::vector<Graph::NodeId> c_scales(cfg_.n_scales);
    for (int k = 0; k < cfg_.n_scales; ++k) {
        const std::string s = "." + std::to_string(k);
        Graph::NodeId f =
            g_.sigmoid(gate(x_t, "w_f" + s, prev.h, "u_f" + s, "b_f" + s, tag + ".f" + s),
                       tag + ".fg" + s);
        Graph::NodeId i;
        if (cfg_.coupling == GateCoupling::Independent) {
            i = g_.sigmoid(gate(x_t, "w_i" + s, prev.h, "u_i" + s, "b_i" + s, tag + ".i" + s),
                           tag + ".ig" + s);
        } else {
            i = g_.scalar_mix(f, -1.0, 1.0, tag + ".ig" + s);  // i = 1 - f
        }
        Graph::NodeId keep = g_.hadamard(f, prev.c_scales[k], tag + ".keep" + s);
        Graph::NodeId update = g_.hadamard(i, cand, tag + ".update" + s);
        c_scales[k] = g_.add(keep, update, tag + ".cell" + s);
    }
    Graph::NodeId mixed = mix(c_scales, tag);
    Graph::NodeId h = g_.hadamard(out, g_.tanh(mixed, tag + ".cell_act"), tag + ".h");
    return {h, std::move(c_scales), mixed};
}

StepNodes CellGraph::step_msgru(Graph::NodeId x_t, const StepNodes& prev,
                                const std::string& tag) const {
    // prev.h carries the previous mixed state
    Graph::NodeId r = g_.sigmoid(gate(x_t, "w_r", prev.h, "u_r", "b_r", tag + ".r"), tag + ".rg");
    Graph::NodeId gated_prev = g_.hadamard(prev.h, r, tag + ".reset_prev");
    Graph::NodeId from_x = g_.affine(x_t, params_.at("w_c"), Graph::kNone, tag + ".c.wx");
    Graph::NodeId bias = cfg_.bias == BiasMode::On ? params_.at("b_c") : Graph::kNone;
    Graph::NodeId from_h = g_.affine(gated_prev, params_.at("u_c"), bias, tag + ".c.uh");
    Graph::NodeId cand = g_.tanh(g_.add(from_x, from_h, tag + ".c.pre"), tag + ".cand");

    std::vector<Graph::NodeId> c_scales(cfg_.n_scales);
    for (int k = 0; k < cfg_.n_scales; ++k) {
        const std::string s = "." + std::to_string(k);
        Graph::NodeId lam =
            g_.sigmoid(gate(x_t, "w_l" + s, prev.c_scales[k], "u_l" + s, "b_l" + s, tag + ".l" + s),
                       tag + ".lg" + s);
        Graph::NodeId one_minus = g_.scalar_mix(lam, -1.0, 1.0, tag + ".keepg" + s);
        Graph::NodeId keep = g_.hadamard(prev.c_scales[k], one_minus, tag + ".keep" + s);
        Graph::NodeId update = g_.hadamard(lam, cand, tag + ".update" + s);
        c_scales[k] = g_.add(keep, update, tag + ".cell" + s);
    }
    Graph::NodeId mixed = mix(c_scales, tag);
    return {mixed, std::move(c_scales), mixed};
}

StepNodes CellGraph::step(Graph::NodeId x_t, const StepNodes& prev, const std::string& tag) const {
    if (static_cast<int>(prev.c_scales.size()) != cfg_.scales())
        throw std::invalid_argument("cell step: expected " + std::to_string(cfg_.scales()) +
                                    " scale states, got " + std::to_string(prev.c_scales.size()));
    switch (cfg_.arch) {
        case Arch::Lstm: return step_lstm(x_t, prev, tag);
        case Arch::Vlstm: return step_vlstm(x_t, prev, tag);
        case Arch::MsGru: return step_msgru(x_t, prev, tag);
    }
    throw std::logic_error("unreachable");
}

void bind_zero_state(const CellConfig& cfg, int batch, nd::NamedTensors& bindings) {
    if (cfg.arch != Arch::MsGru) bindings["h0"] = Tensor(batch, cfg.n_h);
    for (int k = 0; k < cfg.scales(); ++k)
        bindings["c0." + std::to_string(k)] = Tensor(batch, cfg.n_h);
}

// -- single-step wrappers ----------------------------------------------------

namespace {

struct OneStep {
    Graph graph;
    CellConfig cfg;
    nd::NamedTensors out;

    OneStep(const CellConfig& c, const NamedTensors& params, const Tensor& x,
            const Tensor* h_prev, const std::vector<Tensor>& c_prev) : cfg(c) {
        CellGraph cell(graph, cfg);
        Graph::NodeId x_t = graph.input("x", Graph::kBatch, cfg.n_x);
        StepNodes next = cell.step(x_t, cell.initial_state(), "t0");
        graph.mark_output("h", next.h);
        graph.mark_output("c_mixed", next.c_mixed);
        for (int k = 0; k < cfg.scales(); ++k)
            graph.mark_output("c." + std::to_string(k), next.c_scales[k]);

        NamedTensors bindings = params;
        bindings["x"] = x;
        const int batch = x.rows();
        if (cfg.arch != Arch::MsGru) bindings["h0"] = h_prev ? *h_prev : Tensor(batch, cfg.n_h);
        if (static_cast<int>(c_prev.size()) != cfg.scales())
            throw std::invalid_argument("expected " + std::to_string(cfg.scales()) +
                                        " scale states, got " + std::to_string(c_prev.size()));
        for (int k = 0; k < cfg.scales(); ++k) bindings["c0." + std::to_string(k)] = c_prev[k];
        out = graph.evaluate(bindings);
    }
};

}  // namespace

LstmStepResult lstm_step(const CellConfig& cfg, const NamedTensors& params, const Tensor& x,
                         const Tensor& h_prev, const Tensor& c_prev) {
    if (cfg.arch != Arch::Lstm) throw std::invalid_argument("lstm_step: config is not an LSTM");
    OneStep run(cfg, params, x, &h_prev, {c_prev});
    return {run.out.at("h"), run.out.at("c.0")};
}

VlstmStepResult vlstm_step(const CellConfig& cfg, const NamedTensors& params, const Tensor& x,
                           const Tensor& h_prev, const std::vector<Tensor>& c_prev_scales) {
    if (cfg.arch != Arch::Vlstm) throw std::invalid_argument("vlstm_step: config is not a VLSTM");
    OneStep run(cfg, params, x, &h_prev, c_prev_scales);
    VlstmStepResult res;
    res.h = run.out.at("h");
    for (int k = 0; k < cfg.scales(); ++k) res.c_scales.push_back(run.out.at("c." + std::to_string(k)));
    res.c_mixed = run.out.at("c_mixed");
    return res;
}

MsGruStepResult msgru_step(const CellConfig& cfg, const NamedTensors& params, const Tensor& x,
                           const std::vector<Tensor>& c_prev_scales) {
    if (cfg.arch != Arch::MsGru) throw std::invalid_argument("msgru_step: config is not an msGRU");
    OneStep run(cfg, params, x, nullptr, c_prev_scales);
    MsGruStepResult res;
    for (int k = 0; k < cfg.scales(); ++k) res.c_scales.push_back(run.out.at("c." + std::to_string(k)));
    res.c_mixed = run.out.at("c_mixed");
    return res;
}

}  // namespace vlstm::cells
