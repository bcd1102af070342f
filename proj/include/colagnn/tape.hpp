#pragma once

#include <cstdint>
#include <vector>

#include "colagnn/tensor.hpp"

namespace colagnn {

enum class OpKind : std::uint8_t {
    Leaf,
    MatMul,
    Add,
    Hadamard,
    ScalarMul,
    Tanh,
    Sigmoid,
    Elu,
    Relu,
    ConcatRows,
    RowLpNormScale,
    Conv1dValid,
    MaxPoolFull,
    Sum,
    SumAbs,
    Transpose,
    BroadcastAddRow,
};

// Handle to a node on a Tape. Only valid for the tape that issued it.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Define-by-run expression graph. Nodes are appended in evaluation order, so
// reverse creation order is a reverse topological order and backward() walks
// it once. A tape is confined to one worker; tensors copied out of it are
// plain values and safe to share.
class Tape {
public:
    Tape() = default;

    // Leaves. `constant` marks data that never needs a gradient (inputs,
    // masks, selectors); `leaf` is a differentiable parameter.
    Var leaf(Tensor value);
    Var constant(Tensor value);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scalar_mul(Var a, double c);
    Var tanh(Var a);
    Var sigmoid(Var a);
    Var elu(Var a);
    Var relu(Var a);
    Var concat_rows(const std::vector<Var>& parts);
    Var row_lp_norm_scale(Var a, double p, double eps);
    Var conv1d_valid(Var x, Var filter);
    Var maxpool_full(Var a);
    Var sum(Var a);
    Var sum_abs(Var a);
    Var transpose(Var a);
    Var broadcast_add_row(Var a, Var row);

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    // Gradient accumulated by backward(); zeros tensor if never touched.
    const Tensor& grad(Var v) const;

    // Reverse-mode sweep from a scalar (1x1) output. Gradients accumulate
    // into the nodes; call zero_grad() between independent sweeps.
    void backward(Var output);
    void zero_grad();

    std::size_t node_count() const { return nodes_.size(); }
    // Drops all nodes but keeps allocated capacity for reuse.
    void clear();

private:
    struct Node {
        OpKind kind = OpKind::Leaf;
        int a = -1;
        int b = -1;
        double attr0 = 0.0;  // scalar multiplier / norm order p
        double attr1 = 0.0;  // norm floor eps
        bool requires_grad = false;
        bool has_grad = false;
        Tensor value;
        Tensor grad;
        std::vector<int> extra;  // concat inputs or max-pool argmax memo
    };

    int push(Node n);
    Node& node(Var v) { return nodes_[v.id]; }
    const Node& node(Var v) const { return nodes_[v.id]; }
    void check_var(Var v, const char* op) const;
    Tensor& grad_buf(int id);
    void backward_step(int id);

    std::vector<Node> nodes_;
    mutable Tensor empty_grad_;
};

}  // namespace colagnn
