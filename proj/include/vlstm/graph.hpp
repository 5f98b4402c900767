#pragma once

#include <map>
#include <string>
#include <vector>

#include "vlstm/tensor.hpp"

namespace vlstm::nd {

using NamedTensors = std::map<std::string, Tensor>;

// Define-then-run computation graph with reverse-mode differentiation.
//
// The primitive set is closed and small: affine transform, elementwise
// sigmoid/tanh, Hadamard product, addition, elementwise scalar mix
// (a*x + b), per-column softmax over scales, row slicing, and a
// mean-squared-error reduction. Each primitive carries a paired
// forward/backward definition; anything new must come with both plus a
// gradient-check test.
//
// Leaves (inputs and parameters) are named; evaluate() binds named
// tensors and caches every intermediate, backward() walks the node list
// in exact reverse order and returns one gradient per parameter.
//
// A Graph instance holds evaluation state and is single-threaded;
// distinct instances are independent.
class Graph {
public:
    using NodeId = int;
    static constexpr NodeId kNone = -1;
    // Placeholder row count for leaves whose leading dimension is the
    // batch size, resolved when tensors are bound.
    static constexpr int kBatch = -1;

    // -- construction ------------------------------------------------------
    NodeId input(const std::string& name, int rows, int cols);
    NodeId param(const std::string& name, int rows, int cols);

    // y = x . w^T (+ bias, broadcast over rows); x: (B x in), w: (out x in), b: (1 x out)
    NodeId affine(NodeId x, NodeId w, NodeId b = kNone, const std::string& label = {});
    NodeId sigmoid(NodeId x, const std::string& label = {});
    NodeId tanh(NodeId x, const std::string& label = {});
    // elementwise; one operand may be (1 x N) and is broadcast over rows
    NodeId add(NodeId a, NodeId b, const std::string& label = {});
    NodeId hadamard(NodeId a, NodeId b, const std::string& label = {});
    // y = scale * x + shift, elementwise
    NodeId scalar_mix(NodeId x, double scale, double shift, const std::string& label = {});
    // column-wise softmax of an (n x N) matrix; rows index scales
    NodeId softmax_scales(NodeId a, const std::string& label = {});
    // row k of an (n x N) matrix as (1 x N)
    NodeId row_slice(NodeId m, int row, const std::string& label = {});
    // mean over all elements of (pred - target)^2; result is 1x1
    NodeId mse(NodeId pred, NodeId target, const std::string& label = {});

    void mark_output(const std::string& name, NodeId id);

    // -- execution ---------------------------------------------------------
    // Binds every named leaf, runs all nodes in topological order and
    // returns the marked outputs. Shape mismatches name the failing node.
    NamedTensors evaluate(const NamedTensors& bindings);
    // Seeds d(seed_output) = 1 and walks the tape in reverse; returns one
    // gradient tensor per parameter (zeros for parameters the output does
    // not depend on). Requires a prior evaluate() on the same bindings.
    NamedTensors backward(const std::string& seed_output);

    const Tensor& value(NodeId id) const;
    const Tensor& value(const std::string& output_name) const;
    // gradient of the seed output w.r.t. any named leaf (input or param)
    const Tensor& gradient(const std::string& leaf_name) const;

    std::vector<std::string> param_names() const;
    int node_count() const { return static_cast<int>(nodes_.size()); }

private:
    enum class Op {
        Input,
        Param,
        Affine,
        Sigmoid,
        Tanh,
        Add,
        Hadamard,
        ScalarMix,
        SoftmaxScales,
        RowSlice,
        Mse,
    };

    struct Node {
        Op op;
        std::string label;
        NodeId a = kNone;
        NodeId b = kNone;
        NodeId c = kNone;   // affine bias
        double scale = 0.0; // ScalarMix
        double shift = 0.0;
        int row = 0;        // RowSlice
        int decl_rows = 0;  // leaves: declared shape (rows may be kBatch)
        int decl_cols = 0;
        Tensor value;
        Tensor grad;
    };

    NodeId add_node(Node n);
    NodeId leaf(Op op, const std::string& name, int rows, int cols);
    void check_operand(NodeId id, const char* what) const;
    [[noreturn]] void fail(NodeId id, const std::string& message) const;
    std::string describe(NodeId id) const;

    void forward_node(NodeId id);
    void backward_node(NodeId id);

    std::vector<Node> nodes_;
    std::map<std::string, NodeId> leaves_;
    std::map<std::string, NodeId> outputs_;
    bool evaluated_ = false;
    bool back_done_ = false;
};

// Worst-case relative error between reverse-mode gradients and central
// finite differences over every parameter component. The denominator is
// max(|analytic|, |numeric|, 1e-8). epsilon must lie in (0, 1e-2].
double grad_check(Graph& graph, const NamedTensors& bindings, const std::string& loss_output,
                  double epsilon);

}  // namespace vlstm::nd
