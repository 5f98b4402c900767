#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vlstm/graph.hpp"

namespace vlstm::cells {

enum class Arch { Lstm, Vlstm, MsGru };
enum class BiasMode { On, Off };
enum class GateCoupling { Independent, Tied };

std::string to_string(Arch a);
std::string to_string(BiasMode b);
std::string to_string(GateCoupling c);
Arch arch_from_string(const std::string& s);
BiasMode bias_from_string(const std::string& s);
GateCoupling coupling_from_string(const std::string& s);

struct CellConfig {
    Arch arch = Arch::Lstm;
    int n_x = 1;
    int n_h = 1;
    int n_scales = 1;  // VLSTM / msGRU only; LSTM forces 1
    BiasMode bias = BiasMode::On;
    GateCoupling coupling = GateCoupling::Independent;  // VLSTM only

    int scales() const { return arch == Arch::Lstm ? 1 : n_scales; }
    void validate() const;
};

// Parameter tensors, keyed by block name. Blocks:
//   LSTM : w_i u_i [b_i]  w_f u_f [b_f]  w_o u_o [b_o]  w_c u_c [b_c]
//   VLSTM: w_c u_c [b_c]  w_o u_o [b_o]  per scale k: w_f.k u_f.k [b_f.k]
//          (+ w_i.k u_i.k [b_i.k] when independent), mix_a when n >= 2
//   msGRU: w_r u_r [b_r]  w_c u_c [b_c]  per scale k: w_l.k u_l.k [b_l.k],
//          mix_w when n >= 2
//
// Initialization: input weights Glorot uniform, recurrent weights
// orthogonal, biases zero except forget-gate biases at 1, mixing
// pre-activations zero. Each block draws from its own seed-derived
// stream, so layouts that share a block (e.g. VLSTM n=1 and LSTM) get
// identical values for the same seed.
nd::NamedTensors init_cell_params(const CellConfig& cfg, uint64_t seed);

// Total scalar count over all tensors.
int param_count(const nd::NamedTensors& params);

// -- graph building ---------------------------------------------------------

struct StepNodes {
    nd::Graph::NodeId h = nd::Graph::kNone;              // cell output fed forward
    std::vector<nd::Graph::NodeId> c_scales;             // per-scale states
    nd::Graph::NodeId c_mixed = nd::Graph::kNone;        // convex combination of the scales
};

// Declares parameter leaves plus any step-invariant nodes (mixing
// activations) and remembers what the unrolled steps need.
class CellGraph {
public:
    CellGraph(nd::Graph& g, const CellConfig& cfg);

    // Initial state: h0 / c0.<k> inputs (msGRU derives its carried state
    // from the c0.<k> inputs and has no h0 leaf).
    StepNodes initial_state() const;
    // Appends one recurrence step; x_t is a (B x n_x) input node.
    StepNodes step(nd::Graph::NodeId x_t, const StepNodes& prev, const std::string& tag) const;

    const CellConfig& config() const { return cfg_; }

private:
    nd::Graph::NodeId gate(nd::Graph::NodeId x, const std::string& w, nd::Graph::NodeId h,
                           const std::string& u, const std::string& b,
                           const std::string& tag) const;
    nd::Graph::NodeId mix(const std::vector<nd::Graph::NodeId>& c_scales,
                          const std::string& tag) const;

    StepNodes step_lstm(nd::Graph::NodeId x_t, const StepNodes& prev, const std::string& tag) const;
    StepNodes step_vlstm(nd::Graph::NodeId x_t, const StepNodes& prev, const std::string& tag) const;
    StepNodes step_msgru(nd::Graph::NodeId x_t, const StepNodes& prev, const std::string& tag) const;

    nd::Graph& g_;
    CellConfig cfg_;
    std::map<std::string, nd::Graph::NodeId> params_;
    nd::Graph::NodeId alpha_ = nd::Graph::kNone;              // sigmoid(mix_a), VLSTM n=2
    std::vector<nd::Graph::NodeId> mix_rows_;                 // softmax rows, n > 2 / msGRU
    StepNodes state0_;
};

// Zero-state bindings ("h0", "c0.<k>") for a batch of the given size.
void bind_zero_state(const CellConfig& cfg, int batch, nd::NamedTensors& bindings);

// -- single-step reference API ----------------------------------------------
// Thin wrappers that run one recurrence step through the graph engine.

struct LstmStepResult {
    nd::Tensor h;
    nd::Tensor c;
};
LstmStepResult lstm_step(const CellConfig& cfg, const nd::NamedTensors& params, const nd::Tensor& x,
                         const nd::Tensor& h_prev, const nd::Tensor& c_prev);

struct VlstmStepResult {
    nd::Tensor h;
    std::vector<nd::Tensor> c_scales;
    nd::Tensor c_mixed;
};
VlstmStepResult vlstm_step(const CellConfig& cfg, const nd::NamedTensors& params,
                           const nd::Tensor& x, const nd::Tensor& h_prev,
                           const std::vector<nd::Tensor>& c_prev_scales);

struct MsGruStepResult {
    std::vector<nd::Tensor> c_scales;
    nd::Tensor c_mixed;
};
MsGruStepResult msgru_step(const CellConfig& cfg, const nd::NamedTensors& params,
                           const nd::Tensor& x, const std::vector<nd::Tensor>& c_prev_scales);

}  // namespace vlstm::cells
