#include "vlstm/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace vlstm::nd {

namespace {

const char* op_name(int op) {
    static const char* names[] = {"input",      "param",     "affine",     "sigmoid",
                                  "tanh",       "add",       "hadamard",   "scalar_mix",
                                  "softmax_scales", "row_slice", "mse"};
    return names[op];
}

}  // namespace

Graph::NodeId Graph::add_node(Node n) {
    nodes_.push_back(std::move(n));
    evaluated_ = false;
    return static_cast<NodeId>(nodes_.size() - 1);
}

Graph::NodeId Graph::leaf(Op op, const std::string& name, int rows, int cols) {
    if (name.empty()) throw std::invalid_argument("graph leaf needs a name");
    if (leaves_.count(name)) throw std::invalid_argument("duplicate leaf name '" + name + "'");
    if (cols <= 0 || (rows <= 0 && rows != kBatch))
        throw std::invalid_argument("leaf '" + name + "': invalid shape");
    Node n;
    n.op = op;
    n.label = name;
    n.decl_rows = rows;
    n.decl_cols = cols;
    NodeId id = add_node(std::move(n));
    leaves_[name] = id;
    return id;
}

Graph::NodeId Graph::input(const std::string& name, int rows, int cols) {
    return leaf(Op::Input, name, rows, cols);
}

Graph::NodeId Graph::param(const std::string& name, int rows, int cols) {
    return leaf(Op::Param, name, rows, cols);
}

void Graph::check_operand(NodeId id, const char* what) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
        throw std::invalid_argument(std::string("unknown operand node for ") + what);
}

Graph::NodeId Graph::affine(NodeId x, NodeId w, NodeId b, const std::string& label) {
    check_operand(x, "affine");
    check_operand(w, "affine");
    if (b != kNone) check_operand(b, "affine");
    Node n;
    n.op = Op::Affine;
    n.label = label;
    n.a = x;
    n.b = w;
    n.c = b;
    return add_node(std::move(n));
}

Graph::NodeId Graph::sigmoid(NodeId x, const std::string& label) {
    check_operand(x, "sigmoid");
    Node n;
    n.op = Op::Sigmoid;
    n.label = label;
    n.a = x;
    return add_node(std::move(n));
}

Graph::NodeId Graph::tanh(NodeId x, const std::string& label) {
    check_operand(x, "tanh");
    Node n;
    n.op = Op::Tanh;
    n.label = label;
    n.a = x;
    return add_node(std::move(n));
}

Graph::NodeId Graph::add(NodeId a, NodeId b, const std::string& label) {
    check_operand(a, "add");
    check_operand(b, "add");
    Node n;
    n.op = Op::Add;
    n.label = label;
    n.a = a;
    n.b = b;
    return add_node(std::move(n));
}

Graph::NodeId Graph::hadamard(NodeId a, NodeId b, const std::string& label) {
    check_operand(a, "hadamard");
    check_operand(b, "hadamard");
    Node n;
    n.op = Op::Hadamard;
    n.label = label;
    n.a = a;
    n.b = b;
    return add_node(std::move(n));
}

Graph::NodeId Graph::scalar_mix(NodeId x, double scale, double shift, const std::string& label) {
    check_operand(x, "scalar_mix");
    Node n;
    n.op = Op::ScalarMix;
    n.label = label;
    n.a = x;
    n.scale = scale;
    n.shift = shift;
    return add_node(std::move(n));
}

Graph::NodeId Graph::softmax_scales(NodeId a, const std::string& label) {
    check_operand(a, "softmax_scales");
    Node n;
    n.op = Op::SoftmaxScales;
    n.label = label;
    n.a = a;
    return add_node(std::move(n));
}

Graph::NodeId Graph::row_slice(NodeId m, int row, const std::string& label) {
    check_operand(m, "row_slice");
    if (row < 0) throw std::invalid_argument("row_slice: negative row");
    Node n;
    n.op = Op::RowSlice;
    n.label = label;
    n.a = m;
    n.row = row;
    return add_node(std::move(n));
}

Graph::NodeId Graph::mse(NodeId pred, NodeId target, const std::string& label) {
    check_operand(pred, "mse");
    check_operand(target, "mse");
    Node n;
    n.op = Op::Mse;
    n.label = label;
    n.a = pred;
    n.b = target;
    return add_node(std::move(n));
}

void Graph::mark_output(const std::string& name, NodeId id) {
    check_operand(id, "mark_output");
    outputs_[name] = id;
}

std::string Graph::describe(NodeId id) const {
    const Node& n = nodes_[id];
    std::string s = std::string(op_name(static_cast<int>(n.op))) + "#" + std::to_string(id);
    if (!n.label.empty()) s += "(" + n.label + ")";
    return s;
}

void Graph::fail(NodeId id, const std::string& message) const {
    throw std::runtime_error("graph node " + describe(id) + ": " + message);
}

void Graph::forward_node(NodeId id) {
    Node& n = nodes_[id];
    switch (n.op) {
        case Op::Input:
        case Op::Param:
            return;  // bound by evaluate()
        case Op::Affine: {
            const Tensor& x = nodes_[n.a].value;
            const Tensor& w = nodes_[n.b].value;
            if (x.cols() != w.cols())
                fail(id, "input cols " + x.shape_str() + " vs weight " + w.shape_str());
            const Tensor* bias = nullptr;
            if (n.c != kNone) {
                bias = &nodes_[n.c].value;
                if (bias->rows() != 1 || bias->cols() != w.rows())
                    fail(id, "bias shape " + bias->shape_str() + " vs weight " + w.shape_str());
            }
            const int B = x.rows(), in = x.cols(), out = w.rows();
            n.value.resize(B, out);
            for (int r = 0; r < B; ++r) {
                const double* xr = x.data() + static_cast<std::size_t>(r) * in;
                double* yr = n.value.data() + static_cast<std::size_t>(r) * out;
                for (int o = 0; o < out; ++o) {
                    const double* wo = w.data() + static_cast<std::size_t>(o) * in;
                    double acc = bias ? bias->at(0, o) : 0.0;
                    for (int i = 0; i < in; ++i) acc += xr[i] * wo[i];
                    yr[o] = acc;
                }
            }
            return;
        }
        case Op::Sigmoid: {
            const Tensor& x = nodes_[n.a].value;
            n.value.resize(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.numel(); ++i) n.value[i] = 1.0 / (1.0 + std::exp(-x[i]));
            return;
        }
        case Op::Tanh: {
            const Tensor& x = nodes_[n.a].value;
            n.value.resize(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.numel(); ++i) n.value[i] = std::tanh(x[i]);
            return;
        }
        case Op::Add:
        case Op::Hadamard: {
            const Tensor& a = nodes_[n.a].value;
            const Tensor& b = nodes_[n.b].value;
            if (a.cols() != b.cols() || (a.rows() != b.rows() && a.rows() != 1 && b.rows() != 1))
                fail(id, "shape mismatch " + a.shape_str() + " vs " + b.shape_str());
            const int B = std::max(a.rows(), b.rows());
            const int N = a.cols();
            n.value.resize(B, N);
            const bool bc_a = a.rows() == 1 && B > 1;
            const bool bc_b = b.rows() == 1 && B > 1;
            for (int r = 0; r < B; ++r) {
                const double* ar = a.data() + static_cast<std::size_t>(bc_a ? 0 : r) * N;
                const double* br = b.data() + static_cast<std::size_t>(bc_b ? 0 : r) * N;
                double* yr = n.value.data() + static_cast<std::size_t>(r) * N;
                if (n.op == Op::Add)
                    for (int j = 0; j < N; ++j) yr[j] = ar[j] + br[j];
                else
                    for (int j = 0; j < N; ++j) yr[j] = ar[j] * br[j];
            }
            return;
        }
        case Op::ScalarMix: {
            const Tensor& x = nodes_[n.a].value;
            n.value.resize(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.numel(); ++i) n.value[i] = n.scale * x[i] + n.shift;
            return;
        }
        case Op::SoftmaxScales: {
            const Tensor& a = nodes_[n.a].value;
            const int K = a.rows(), N = a.cols();
            n.value.resize(K, N);
            for (int j = 0; j < N; ++j) {
                double m = a.at(0, j);
                for (int k = 1; k < K; ++k) m = std::max(m, a.at(k, j));
                double sum = 0.0;
                for (int k = 0; k < K; ++k) {
                    double e = std::exp(a.at(k, j) - m);
                    n.value.at(k, j) = e;
                    sum += e;
                }
                for (int k = 0; k < K; ++k) n.value.at(k, j) /= sum;
            }
            return;
        }
        case Op::RowSlice: {
            const Tensor& m = nodes_[n.a].value;
            if (n.row >= m.rows())
                fail(id, "row " + std::to_string(n.row) + " out of range for " + m.shape_str());
            n.value.resize(1, m.cols());
            for (int j = 0; j < m.cols(); ++j) n.value.at(0, j) = m.at(n.row, j);
            return;
        }
        case Op::Mse: {
            const Tensor& p = nodes_[n.a].value;
            const Tensor& t = nodes_[n.b].value;
            if (!p.same_shape(t))
                fail(id, "prediction " + p.shape_str() + " vs target " + t.shape_str());
            if (p.numel() == 0) fail(id, "empty batch");
            double acc = 0.0;
            for (std::size_t i = 0; i < p.numel(); ++i) {
                double d = p[i] - t[i];
                acc += d * d;
            }
            n.value.resize(1, 1);
            n.value[0] = acc / static_cast<double>(p.numel());
            return;
        }
    }
}

NamedTensors Graph::evaluate(const NamedTensors& bindings) {
    for (const auto& [name, id] : leaves_) {
        auto it = bindings.find(name);
        if (it == bindings.end()) fail(id, "no tensor bound for leaf '" + name + "'");
        const Tensor& t = it->second;
        const Node& n = nodes_[id];
        if (t.cols() != n.decl_cols || (n.decl_rows != kBatch && t.rows() != n.decl_rows))
            fail(id, "bound tensor " + t.shape_str() + " does not match declared " +
                         (n.decl_rows == kBatch ? std::string("Bx") : std::to_string(n.decl_rows) + "x") +
                         std::to_string(n.decl_cols));
        if (n.decl_rows == kBatch && t.rows() <= 0) fail(id, "empty batch bound");
        nodes_[id].value = t;
    }
    for (const auto& [name, t] : bindings)
        if (!leaves_.count(name))
            throw std::invalid_argument("binding '" + name + "' does not name a graph leaf");

    for (NodeId id = 0; id < static_cast<NodeId>(nodes_.size()); ++id) forward_node(id);

    evaluated_ = true;
    back_done_ = false;
    NamedTensors out;
    for (const auto& [name, id] : outputs_) out[name] = nodes_[id].value;
    return out;
}

void Graph::backward_node(NodeId id) {
    Node& n = nodes_[id];
    const Tensor& dy = n.grad;
    switch (n.op) {
        case Op::Input:
        case Op::Param:
            return;
        case Op::Affine: {
            const Tensor& x = nodes_[n.a].value;
            const Tensor& w = nodes_[n.b].value;
            Tensor& dx = nodes_[n.a].grad;
            Tensor& dw = nodes_[n.b].grad;
            const int B = x.rows(), in = x.cols(), out = w.rows();
            for (int r = 0; r < B; ++r) {
                const double* dyr = dy.data() + static_cast<std::size_t>(r) * out;
                const double* xr = x.data() + static_cast<std::size_t>(r) * in;
                double* dxr = dx.data() + static_cast<std::size_t>(r) * in;
                for (int o = 0; o < out; ++o) {
                    const double g = dyr[o];
                    if (g == 0.0) continue;
                    const double* wo = w.data() + static_cast<std::size_t>(o) * in;
                    double* dwo = dw.data() + static_cast<std::size_t>(o) * in;
                    for (int i = 0; i < in; ++i) {
                        dxr[i] += g * wo[i];
                        dwo[i] += g * xr[i];
                    }
                }
            }
            if (n.c != kNone) {
                Tensor& db = nodes_[n.c].grad;
                for (int r = 0; r < B; ++r)
                    for (int o = 0; o < out; ++o) db.at(0, o) += dy.at(r, o);
            }
            return;
        }
        case Op::Sigmoid: {
            Tensor& dx = nodes_[n.a].grad;
            for (std::size_t i = 0; i < dy.numel(); ++i) {
                double y = n.value[i];
                dx[i] += dy[i] * y * (1.0 - y);
            }
            return;
        }
        case Op::Tanh: {
            Tensor& dx = nodes_[n.a].grad;
            for (std::size_t i = 0; i < dy.numel(); ++i) {
                double y = n.value[i];
                dx[i] += dy[i] * (1.0 - y * y);
            }
            return;
        }
        case Op::Add:
        case Op::Hadamard: {
            const Tensor& a = nodes_[n.a].value;
            const Tensor& b = nodes_[n.b].value;
            Tensor& da = nodes_[n.a].grad;
            Tensor& db = nodes_[n.b].grad;
            const int B = dy.rows(), N = dy.cols();
            const bool bc_a = a.rows() == 1 && B > 1;
            const bool bc_b = b.rows() == 1 && B > 1;
            for (int r = 0; r < B; ++r) {
                const double* dyr = dy.data() + static_cast<std::size_t>(r) * N;
                double* dar = da.data() + static_cast<std::size_t>(bc_a ? 0 : r) * N;
                double* dbr = db.data() + static_cast<std::size_t>(bc_b ? 0 : r) * N;
                if (n.op == Op::Add) {
                    for (int j = 0; j < N; ++j) {
                        dar[j] += dyr[j];
                        dbr[j] += dyr[j];
                    }
                } else {
                    const double* ar = a.data() + static_cast<std::size_t>(bc_a ? 0 : r) * N;
                    const double* br = b.data() + static_cast<std::size_t>(bc_b ? 0 : r) * N;
                    for (int j = 0; j < N; ++j) {
                        dar[j] += dyr[j] * br[j];
                        dbr[j] += dyr[j] * ar[j];
                    }
                }
            }
            return;
        }
        case Op::ScalarMix: {
            Tensor& dx = nodes_[n.a].grad;
            for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] += n.scale * dy[i];
            return;
        }
        case Op::SoftmaxScales: {
            Tensor& dx = nodes_[n.a].grad;
            const Tensor& w = n.value;
            const int K = w.rows(), N = w.cols();
            for (int j = 0; j < N; ++j) {
                double dot = 0.0;
                for (int k = 0; k < K; ++k) dot += dy.at(k, j) * w.at(k, j);
                for (int k = 0; k < K; ++k) dx.at(k, j) += w.at(k, j) * (dy.at(k, j) - dot);
            }
            return;
        }
        case Op::RowSlice: {
            Tensor& dm = nodes_[n.a].grad;
            for (int j = 0; j < dy.cols(); ++j) dm.at(n.row, j) += dy.at(0, j);
            return;
        }
        case Op::Mse: {
            const Tensor& p = nodes_[n.a].value;
            const Tensor& t = nodes_[n.b].value;
            Tensor& dp = nodes_[n.a].grad;
            Tensor& dt = nodes_[n.b].grad;
            const double g = dy[0] * 2.0 / static_cast<double>(p.numel());
            for (std::size_t i = 0; i < p.numel(); ++i) {
                double d = g * (p[i] - t[i]);
                dp[i] += d;
                dt[i] -= d;
            }
            return;
        }
    }
}

NamedTensors Graph::backward(const std::string& seed_output) {
    if (!evaluated_) throw std::runtime_error("backward called before evaluate");
    auto it = outputs_.find(seed_output);
    if (it == outputs_.end())
        throw std::invalid_argument("backward: no output named '" + seed_output + "'");
    NodeId seed = it->second;
    if (nodes_[seed].value.numel() != 1)
        fail(seed, "backward seed must be a scalar, got " + nodes_[seed].value.shape_str());

    for (Node& n : nodes_) {
        n.grad.resize(n.value.rows(), n.value.cols());
    }
    nodes_[seed].grad[0] = 1.0;
    for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id) backward_node(id);
    back_done_ = true;

    NamedTensors grads;
    for (const auto& [name, id] : leaves_)
        if (nodes_[id].op == Op::Param) grads[name] = nodes_[id].grad;
    return grads;
}

const Tensor& Graph::value(NodeId id) const {
    check_operand(id, "value");
    return nodes_[id].value;
}

const Tensor& Graph::value(const std::string& output_name) const {
    auto it = outputs_.find(output_name);
    if (it == outputs_.end())
        throw std::invalid_argument("no output named '" + output_name + "'");
    return nodes_[it->second].value;
}

const Tensor& Graph::gradient(const std::string& leaf_name) const {
    if (!back_done_) throw std::runtime_error("gradient queried before backward");
    auto it = leaves_.find(leaf_name);
    if (it == leaves_.end()) throw std::invalid_argument("no leaf named '" + leaf_name + "'");
    return nodes_[it->second].grad;
}

std::vector<std::string> Graph::param_names() const {
    std::vector<std::string> names;
    for (const auto& [name, id] : leaves_)
        if (nodes_[id].op == Op::Param) names.push_back(name);
    return names;
}

double grad_check(Graph& graph, const NamedTensors& bindings, const std::string& loss_output,
                  double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1e-2))
        throw std::invalid_argument("grad_check: epsilon must lie in (0, 1e-2]");

    auto loss_of = [&](const NamedTensors& b) {
        Tensor out = graph.evaluate(b).at(loss_output);
        if (out.numel() != 1) throw std::runtime_error("grad_check: loss output is not scalar");
        double v = out[0];
        if (!std::isfinite(v)) throw std::runtime_error("grad_check: non-finite loss");
        return v;
    };

    loss_of(bindings);
    NamedTensors analytic = graph.backward(loss_output);

    NamedTensors work = bindings;
    double worst = 0.0;
    for (auto& [name, grad] : analytic) {
        Tensor& theta = work.at(name);
        for (std::size_t i = 0; i < theta.numel(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + epsilon;
            double up = loss_of(work);
            theta[i] = saved - epsilon;
            double down = loss_of(work);
            theta[i] = saved;
            double numeric = (up - down) / (2.0 * epsilon);
            double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-8});
            worst = std::max(worst, std::abs(numeric - grad[i]) / denom);
        }
    }
    // leave the graph in the state matching the original bindings
    loss_of(bindings);
    graph.backward(loss_output);
    return worst;
}

}  // namespace vlstm::nd
