#include "colagnn/model.hpp"

#include <stdexcept>
#include <utility>

#include "colagnn/errors.hpp"

namespace colagnn {

Tensor ForecastModel::predict(const WindowSample& sample) {
    Tape tape;
    bind(tape);
    Var out = predict_var(tape, sample, RunMode::Eval, nullptr);
    return tape.value(out);
}

ColaGnnConfig ColaGnnConfig::resolved(int window) const {
    ColaGnnConfig c = *this;
    if (window < 1) throw ConfigError("window must be positive");
    if (c.hidden < 1) throw ConfigError("hidden size must be positive");
    if (c.attention_dim == -1) c.attention_dim = std::max(1, c.hidden / 2);
    if (c.attention_dim < 1) throw ConfigError("attention dim must be positive");
    if (c.filters < 1) throw ConfigError("filter count must be positive");
    if (c.filter_len == -1) c.filter_len = window;
    if (c.filter_len < 1 || c.filter_len > window)
        throw ConfigError("filter length must lie in [1, window]");
    if (c.graph_layers < 1) throw ConfigError("graph layer count must be positive");
    if (c.graph_widths.empty()) c.graph_widths.assign(static_cast<size_t>(c.graph_layers), c.filters);
    if (static_cast<int>(c.graph_widths.size()) != c.graph_layers)
        throw ConfigError("graph width list must have one entry per layer");
    for (int f : c.graph_widths)
        if (f < 1) throw ConfigError("graph layer width must be positive");
    if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (c.norm_order < 1.0) throw ConfigError("norm order must be >= 1");
    if (!(c.norm_eps > 0.0)) throw ConfigError("norm eps must be positive");
    return c;
}

TapeWorkspace make_workspace(Tape& tape, int n) {
    TapeWorkspace ws;
    ws.n = n;
    ws.row_selectors.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Tensor e = Tensor::zeros(1, n);
        e(0, i) = 1.0;
        ws.row_selectors.push_back(tape.constant(std::move(e)));
    }
    ws.ones_row = tape.constant(Tensor(1, n, 1.0));
    ws.ones_mat = tape.constant(Tensor(n, n, 1.0));
    return ws;
}

Tensor make_dropout_mask(int rows, int cols, double rate, Rng& rng) {
    Tensor m(rows, cols, 0.0);
    const double keep = 1.0 - rate;
    const double scale = 1.0 / keep;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (rng.uniform01() < keep) m(i, j) = scale;
    return m;
}

namespace model_ops {

Var rnn_encode(Tape& tape, Var w_row, Var u_t, Var b_row, const Tensor& x_window) {
    const int n = x_window.rows();
    const int w = x_window.cols();
    const int d = tape.value(w_row).cols();
    Var h = tape.constant(Tensor::zeros(n, d));
    for (int t = 0; t < w; ++t) {
        Var x_t = tape.constant(x_window.col(t));
        Var drive = tape.matmul(x_t, w_row);
        Var pre = tape.add(tape.matmul(h, u_t), drive);
        pre = tape.broadcast_add_row(pre, b_row);
        h = tape.tanh(pre);
    }
    return h;
}

Var attention_scores(Tape& tape, Var h, Var ws_t, Var wt_t, Var v_col, Var bs_row, Var bv,
                     const TapeWorkspace& ws) {
    const int n = tape.value(h).rows();
    if (ws.n != n) throw ShapeError("workspace size does not match state row count");
    Var s = tape.broadcast_add_row(tape.matmul(h, ws_t), bs_row);
    Var t = tape.matmul(h, wt_t);
    std::vector<Var> rows;
    rows.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Var s_i = tape.matmul(ws.row_selectors[static_cast<size_t>(i)], s);
        Var pre = tape.broadcast_add_row(t, s_i);
        Var col = tape.matmul(tape.elu(pre), v_col);
        rows.push_back(tape.transpose(col));
    }
    Var stacked = tape.concat_rows(rows);
    Var bv_row = tape.matmul(bv, ws.ones_row);
    return tape.broadcast_add_row(stacked, bv_row);
}

Var normalize_rows(Tape& tape, Var a_raw, double p, double eps) {
    return tape.row_lp_norm_scale(a_raw, p, eps);
}

FusedAttention fuse_attention(Tape& tape, Var a, Var adj_norm_const, Var wm, Var bm,
                              const TapeWorkspace& ws) {
    Var pre = tape.broadcast_add_row(tape.matmul(wm, a), tape.matmul(bm, ws.ones_row));
    Var gate = tape.sigmoid(pre);
    Var inv_gate = tape.add(ws.ones_mat, tape.scalar_mul(gate, -1.0));
    Var fused = tape.add(tape.hadamard(gate, adj_norm_const), tape.hadamard(inv_gate, a));
    return {a, gate, fused};
}

Var temporal_conv(Tape& tape, Var x_const, const std::vector<Var>& filters) {
    std::vector<Var> pooled;
    pooled.reserve(filters.size());
    for (Var f : filters) {
        Var c = tape.conv1d_valid(x_const, f);
        pooled.push_back(tape.transpose(tape.maxpool_full(c)));
    }
    Var stacked = tape.concat_rows(pooled);
    return tape.relu(tape.transpose(stacked));
}

Var message_pass(Tape& tape, Var h0, Var ahat, const std::vector<Var>& weight_t,
                 const std::vector<Var>& bias_rows, double dropout, RunMode mode, Rng* rng) {
    if (weight_t.size() != bias_rows.size())
        throw ShapeError("graph layer weight and bias lists differ in length");
    Var h = h0;
    for (size_t l = 0; l < weight_t.size(); ++l) {
        if (l > 0 && mode == RunMode::Train && dropout > 0.0) {
            const Tensor& hv = tape.value(h);
            Var mask = tape.constant(make_dropout_mask(hv.rows(), hv.cols(), dropout, *rng));
            h = tape.hadamard(h, mask);
        }
        Var z = tape.matmul(tape.matmul(ahat, h), weight_t[l]);
        h = tape.elu(tape.broadcast_add_row(z, bias_rows[l]));
    }
    return h;
}

Var predict_head(Tape& tape, Var h_rnn, Var h_graph, Var theta_col, Var btheta) {
    Var comb_t = tape.concat_rows({tape.transpose(h_rnn), tape.transpose(h_graph)});
    Var yhat_row = tape.matmul(tape.transpose(theta_col), comb_t);
    return tape.broadcast_add_row(tape.transpose(yhat_row), btheta);
}

}  // namespace model_ops

struct ColaGnnModel::BoundGraph {
    Tape* tape = nullptr;
    Var w, u_t, b;
    Var ws_t, wt_t, v, bs, bv;
    Var wm, bm;
    std::vector<Var> conv;
    std::vector<Var> graph_w_t;
    std::vector<Var> graph_b;
    Var theta, btheta;
    Var adj;
    TapeWorkspace ws;
};

ColaGnnModel::~ColaGnnModel() = default;

ColaGnnModel::ColaGnnModel(const ColaGnnConfig& config, int n_locations, int window,
                           Tensor adjacency_normalized)
    : config_(config.resolved(window)), n_(n_locations), window_(window),
      adj_norm_(std::move(adjacency_normalized)) {
    if (n_ < 1) throw ConfigError("location count must be positive");
    if (adj_norm_.rows() != n_ || adj_norm_.cols() != n_)
        throw ShapeError("adjacency is " + shape_str(adj_norm_) + ", expected " +
                         std::to_string(n_) + "x" + std::to_string(n_));
    const int d = config_.hidden;
    const int da = config_.attention_dim;
    const int k = config_.filters;
    const int q = config_.filter_len;
    p_.rnn_w = Tensor::zeros(1, d);
    p_.rnn_u = Tensor::zeros(d, d);
    p_.rnn_b = Tensor::zeros(1, d);
    if (config_.use_location_attention) {
        p_.attn_ws = Tensor::zeros(da, d);
        p_.attn_wt = Tensor::zeros(da, d);
        p_.attn_v = Tensor::zeros(da, 1);
        p_.attn_bs = Tensor::zeros(1, da);
        p_.attn_bv = Tensor::zeros(1, 1);
        p_.gate_wm = Tensor::zeros(n_, n_);
        p_.gate_bm = Tensor::zeros(1, 1);
    }
    int f_prev = window_;
    if (config_.use_temporal_conv) {
        for (int i = 0; i < k; ++i) p_.conv_filters.push_back(Tensor::zeros(1, q));
        f_prev = k;
    }
    for (int l = 0; l < config_.graph_layers; ++l) {
        const int f = config_.graph_widths[static_cast<size_t>(l)];
        p_.graph_weights.push_back(Tensor::zeros(f, f_prev));
        p_.graph_biases.push_back(Tensor::zeros(1, f));
        f_prev = f;
    }
    p_.out_theta = Tensor::zeros(d + f_prev, 1);
    p_.out_btheta = Tensor::zeros(1, 1);
}

std::vector<ParamRef> ColaGnnModel::params() {
    std::vector<ParamRef> out;
    out.push_back({"rnn.w", &p_.rnn_w, false});
    out.push_back({"rnn.u", &p_.rnn_u, false});
    out.push_back({"rnn.b", &p_.rnn_b, true});
    if (config_.use_location_attention) {
        out.push_back({"attn.ws", &p_.attn_ws, false});
        out.push_back({"attn.wt", &p_.attn_wt, false});
        out.push_back({"attn.v", &p_.attn_v, false});
        out.push_back({"attn.bs", &p_.attn_bs, true});
        out.push_back({"attn.bv", &p_.attn_bv, true});
        out.push_back({"gate.wm", &p_.gate_wm, false});
        out.push_back({"gate.bm", &p_.gate_bm, true});
    }
    for (size_t i = 0; i < p_.conv_filters.size(); ++i)
        out.push_back({"conv.f" + std::to_string(i), &p_.conv_filters[i], false});
    for (size_t l = 0; l < p_.graph_weights.size(); ++l) {
        out.push_back({"graph.l" + std::to_string(l) + ".w", &p_.graph_weights[l], false});
        out.push_back({"graph.l" + std::to_string(l) + ".b", &p_.graph_biases[l], true});
    }
    out.push_back({"out.theta", &p_.out_theta, false});
    out.push_back({"out.btheta", &p_.out_btheta, true});
    return out;
}

void ColaGnnModel::bind(Tape& tape) {
    bg_ = std::make_unique<BoundGraph>();
    bg_->tape = &tape;
    bound_.clear();
    auto leaf = [&](Tensor& t) {
        Var v = tape.leaf(t);
        bound_.push_back(v);
        return v;
    };
    Var w = leaf(p_.rnn_w);
    Var u = leaf(p_.rnn_u);
    Var b = leaf(p_.rnn_b);
    bg_->w = w;
    bg_->u_t = tape.transpose(u);
    bg_->b = b;
    if (config_.use_location_attention) {
        Var ws = leaf(p_.attn_ws);
        Var wt = leaf(p_.attn_wt);
        bg_->v = leaf(p_.attn_v);
        bg_->bs = leaf(p_.attn_bs);
        bg_->bv = leaf(p_.attn_bv);
        bg_->wm = leaf(p_.gate_wm);
        bg_->bm = leaf(p_.gate_bm);
        bg_->ws_t = tape.transpose(ws);
        bg_->wt_t = tape.transpose(wt);
    }
    for (Tensor& f : p_.conv_filters) bg_->conv.push_back(leaf(f));
    for (size_t l = 0; l < p_.graph_weights.size(); ++l) {
        Var gw = leaf(p_.graph_weights[l]);
        bg_->graph_w_t.push_back(tape.transpose(gw));
        bg_->graph_b.push_back(leaf(p_.graph_biases[l]));
    }
    bg_->theta = leaf(p_.out_theta);
    bg_->btheta = leaf(p_.out_btheta);
    bg_->adj = tape.constant(adj_norm_);
    bg_->ws = make_workspace(tape, n_);
}

Var ColaGnnModel::predict_var(Tape& tape, const WindowSample& sample, RunMode mode, Rng* rng) {
    return forward(tape, sample, mode, rng, nullptr);
}

Var ColaGnnModel::forward(Tape& tape, const WindowSample& sample, RunMode mode, Rng* rng,
                          AttentionMatrix* capture) {
    if (!bg_ || bg_->tape != &tape)
        throw std::logic_error("bind() must run on this tape before forward()");
    if (sample.input.rows() != n_ || sample.input.cols() != window_)
        throw ShapeError("sample input is " + shape_str(sample.input) + ", expected " +
                         std::to_string(n_) + "x" + std::to_string(window_));
    if (mode == RunMode::Train && config_.dropout > 0.0 && rng == nullptr)
        throw std::logic_error("training forward with dropout needs an rng");

    Var h = model_ops::rnn_encode(tape, bg_->w, bg_->u_t, bg_->b, sample.input);
    Var h_drop = h;
    if (mode == RunMode::Train && config_.dropout > 0.0) {
        Var mask = tape.constant(make_dropout_mask(n_, config_.hidden, config_.dropout, *rng));
        h_drop = tape.hadamard(h, mask);
    }

    Var ahat;
    if (config_.use_location_attention) {
        Var a_raw = model_ops::attention_scores(tape, h_drop, bg_->ws_t, bg_->wt_t, bg_->v,
                                                bg_->bs, bg_->bv, bg_->ws);
        Var a = model_ops::normalize_rows(tape, a_raw, config_.norm_order, config_.norm_eps);
        auto fused = model_ops::fuse_attention(tape, a, bg_->adj, bg_->wm, bg_->bm, bg_->ws);
        ahat = fused.fused;
        if (capture) {
            capture->raw = tape.value(fused.a);
            capture->gate = tape.value(fused.gate);
            capture->fused = tape.value(fused.fused);
            capture->present = true;
        }
    } else {
        ahat = bg_->adj;
        if (capture) capture->present = false;
    }

    Var x_const = tape.constant(sample.input);
    Var h0 = config_.use_temporal_conv ? model_ops::temporal_conv(tape, x_const, bg_->conv)
                                       : x_const;
    Var h_graph = model_ops::message_pass(tape, h0, ahat, bg_->graph_w_t, bg_->graph_b,
                                          config_.dropout, mode, rng);
    return model_ops::predict_head(tape, h_drop, h_graph, bg_->theta, bg_->btheta);
}

long long colagnn_param_count(const ColaGnnConfig& config, int n_locations, int window) {
    ColaGnnModel m(config, n_locations, window, Tensor::identity(n_locations));
    long long total = 0;
    for (const ParamRef& p : m.params())
        total += static_cast<long long>(p.tensor->rows()) * p.tensor->cols();
    return total;
}

}  // namespace colagnn
