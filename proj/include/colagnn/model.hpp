#pragma once

#include <memory>
#include <string>
#include <vector>

#include "colagnn/dataset.hpp"
#include "colagnn/rng.hpp"
#include "colagnn/tape.hpp"
#include "colagnn/tensor.hpp"

namespace colagnn {

enum class RunMode { Train, Eval };

// Named view of one trainable tensor. Biases are excluded from weight decay
// and initialized to zero.
struct ParamRef {
    std::string name;
    Tensor* tensor;
    bool is_bias;
};

// Common surface for anything trained by the L1/Adam loop.
class ForecastModel {
public:
    virtual ~ForecastModel() = default;

    virtual std::vector<ParamRef> params() = 0;

    // Creates parameter leaves (and shared constants) on a fresh tape. Must
    // be called once per tape before predict_var.
    virtual void bind(Tape& tape) = 0;

    // Builds the prediction graph for one sample; returns normalized yhat as
    // N x 1. Dropout draws from `rng` in Train mode.
    virtual Var predict_var(Tape& tape, const WindowSample& sample, RunMode mode, Rng* rng) = 0;

    // Leaf handles aligned with params(), valid for the currently bound tape.
    virtual const std::vector<Var>& bound_vars() const = 0;

    // Eval-mode prediction on a throwaway tape.
    Tensor predict(const WindowSample& sample);
};

struct ColaGnnConfig {
    int hidden = 20;               // D
    int attention_dim = -1;        // d_a; -1 derives D/2
    int filters = 10;              // K
    int filter_len = -1;           // Q; -1 derives W
    int graph_layers = 2;          // L
    std::vector<int> graph_widths; // F^(1..L); empty derives K per layer
    double norm_order = 2.0;       // p in the row normalization
    double norm_eps = 1e-12;
    double dropout = 0.2;
    bool use_temporal_conv = true;
    bool use_location_attention = true;

    // Fills derived defaults against a window size and validates ranges.
    ColaGnnConfig resolved(int window) const;
};

// All trainable tensors of the model for a fixed location count.
struct ColaGnnParams {
    Tensor rnn_w;    // 1 x D
    Tensor rnn_u;    // D x D
    Tensor rnn_b;    // 1 x D
    Tensor attn_ws;  // d_a x D
    Tensor attn_wt;  // d_a x D
    Tensor attn_v;   // d_a x 1
    Tensor attn_bs;  // 1 x d_a
    Tensor attn_bv;  // 1 x 1
    Tensor gate_wm;  // N x N
    Tensor gate_bm;  // 1 x 1
    std::vector<Tensor> conv_filters;   // K of 1 x Q
    std::vector<Tensor> graph_weights;  // W^(l): F^(l+1) x F^(l)
    std::vector<Tensor> graph_biases;   // 1 x F^(l+1)
    Tensor out_theta;  // (D + F^(L)) x 1
    Tensor out_btheta; // 1 x 1
};

// Attention pieces of one forward pass: post-normalization scores, the
// elementwise gate, and the fused matrix used for message passing.
struct AttentionMatrix {
    Tensor raw;    // A after row normalization
    Tensor gate;   // M, entries in (0,1)
    Tensor fused;  // Ahat
    bool present = false;
};

// Shared per-tape constants used by the attention assembly.
struct TapeWorkspace {
    int n = 0;
    std::vector<Var> row_selectors;  // e_i as 1 x N
    Var ones_row;  // 1 x N
    Var ones_mat;  // N x N
};

TapeWorkspace make_workspace(Tape& tape, int n);

Tensor make_dropout_mask(int rows, int cols, double rate, Rng& rng);

// The individual model stages, composable on any tape. Weight-matrix
// arguments arrive pre-transposed where the graph consumes the transpose.
namespace model_ops {

// Eq.-style vanilla RNN over the window columns; returns final states N x D.
Var rnn_encode(Tape& tape, Var w_row, Var u_t, Var b_row, const Tensor& x_window);

// Additive attention scores a_ij = v^T ELU(Ws h_i + Wt h_j + bs) + bv.
Var attention_scores(Tape& tape, Var h, Var ws_t, Var wt_t, Var v_col, Var bs_row, Var bv,
                     const TapeWorkspace& ws);

Var normalize_rows(Tape& tape, Var a_raw, double p, double eps);

struct FusedAttention {
    Var a;     // normalized scores (pass-through)
    Var gate;  // M
    Var fused; // Ahat
};

FusedAttention fuse_attention(Tape& tape, Var a, Var adj_norm_const, Var wm, Var bm,
                              const TapeWorkspace& ws);

// Per-filter valid cross-correlation, full max pooling, ReLU; returns N x K.
Var temporal_conv(Tape& tape, Var x_const, const std::vector<Var>& filters);

// L layers of h^(l) = ELU(Ahat h^(l-1) W^T + b); dropout applies to the
// inputs of layers past the first.
Var message_pass(Tape& tape, Var h0, Var ahat, const std::vector<Var>& weight_t,
                 const std::vector<Var>& bias_rows, double dropout, RunMode mode, Rng* rng);

// yhat_i = theta^T [h_i,RNN ; h_i,graph] + btheta with identity activation.
Var predict_head(Tape& tape, Var h_rnn, Var h_graph, Var theta_col, Var btheta);

}  // namespace model_ops

class ColaGnnModel : public ForecastModel {
public:
    ColaGnnModel(const ColaGnnConfig& config, int n_locations, int window,
                 Tensor adjacency_normalized);
    ~ColaGnnModel() override;

    std::vector<ParamRef> params() override;
    void bind(Tape& tape) override;
    Var predict_var(Tape& tape, const WindowSample& sample, RunMode mode, Rng* rng) override;
    const std::vector<Var>& bound_vars() const override { return bound_; }

    // As predict_var, additionally materializing the attention pieces.
    Var forward(Tape& tape, const WindowSample& sample, RunMode mode, Rng* rng,
                AttentionMatrix* capture);

    const ColaGnnConfig& config() const { return config_; }
    int n_locations() const { return n_; }
    int window() const { return window_; }
    const Tensor& adjacency_normalized() const { return adj_norm_; }
    ColaGnnParams& raw_params() { return p_; }
    const ColaGnnParams& raw_params() const { return p_; }

private:
    ColaGnnConfig config_;
    int n_;
    int window_;
    Tensor adj_norm_;
    ColaGnnParams p_;

    // per-bound-tape state
    std::vector<Var> bound_;
    struct BoundGraph;
    std::unique_ptr<BoundGraph> bg_;
};

// Total trainable scalar count for a configuration, honoring the ablation
// flags. F^(l) widths can be varied freely to explore alternative budgets.
long long colagnn_param_count(const ColaGnnConfig& config, int n_locations, int window);

}  // namespace colagnn
