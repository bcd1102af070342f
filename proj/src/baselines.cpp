#include "colagnn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "colagnn/errors.hpp"

namespace colagnn {

namespace {

constexpr double kJitter = 1e-8;

// Solves (XtX + jitter I) beta = xty in place; xtx is f x f row-major.
std::vector<double> solve_normal(std::vector<double> xtx, std::vector<double> xty, int f) {
    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < f; ++i) {
        const double d = xtx[static_cast<size_t>(i) * f + i];
        dmax = std::max(dmax, d);
        dmin = std::min(dmin, d);
        xtx[static_cast<size_t>(i) * f + i] = d + kJitter;
    }
    // Cholesky: xtx = L L^T, L stored in the lower triangle.
    for (int i = 0; i < f; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = xtx[static_cast<size_t>(i) * f + j];
            for (int k = 0; k < j; ++k)
                s -= xtx[static_cast<size_t>(i) * f + k] * xtx[static_cast<size_t>(j) * f + k];
            if (i == j) {
                if (!(s > 0.0))
                    throw NumericError(
                        "least-squares system is singular after jitter (diagonal condition "
                        "estimate " +
                        format_double(dmin > 0.0 ? dmax / dmin
                                                 : std::numeric_limits<double>::infinity()) +
                        ")");
                xtx[static_cast<size_t>(i) * f + j] = std::sqrt(s);
            } else {
                xtx[static_cast<size_t>(i) * f + j] = s / xtx[static_cast<size_t>(j) * f + j];
            }
        }
    }
    // Forward then back substitution.
    std::vector<double> z(static_cast<size_t>(f));
    for (int i = 0; i < f; ++i) {
        double s = xty[static_cast<size_t>(i)];
        for (int k = 0; k < i; ++k) s -= xtx[static_cast<size_t>(i) * f + k] * z[static_cast<size_t>(k)];
        z[static_cast<size_t>(i)] = s / xtx[static_cast<size_t>(i) * f + i];
    }
    std::vector<double> beta(static_cast<size_t>(f));
    for (int i = f - 1; i >= 0; --i) {
        double s = z[static_cast<size_t>(i)];
        for (int k = i + 1; k < f; ++k)
            s -= xtx[static_cast<size_t>(k) * f + i] * beta[static_cast<size_t>(k)];
        beta[static_cast<size_t>(i)] = s / xtx[static_cast<size_t>(i) * f + i];
    }
    return beta;
}

class NormalAccumulator {
public:
    explicit NormalAccumulator(int f) : f_(f), xtx_(static_cast<size_t>(f) * f, 0.0) {}

    void add_x(const std::vector<double>& row) {
        for (int i = 0; i < f_; ++i) {
            const double ri = row[static_cast<size_t>(i)];
            if (ri == 0.0) continue;
            double* out = &xtx_[static_cast<size_t>(i) * f_];
            for (int j = 0; j < f_; ++j) out[j] += ri * row[static_cast<size_t>(j)];
        }
    }

    std::vector<double> solve(const std::vector<double>& xty) const {
        return solve_normal(xtx_, xty, f_);
    }

private:
    int f_;
    std::vector<double> xtx_;
};

void check_window_width(const Tensor& w, int window, int n) {
    if (w.rows() != n || w.cols() != window)
        throw ShapeError("window is " + shape_str(w) + ", expected " + std::to_string(n) + "x" +
                         std::to_string(window));
}

void require_samples(const WindowSet& ws) {
    if (ws.samples.empty()) throw DataError("window set is empty");
}

}  // namespace

const char* variant_name(LinearVariant v) {
    switch (v) {
        case LinearVariant::Gar: return "gar";
        case LinearVariant::Ar: return "ar";
        case LinearVariant::Var: return "var";
    }
    return "?";
}

long long DirectLinearModel::param_count() const {
    const long long w = window, n = n_locations;
    switch (variant) {
        case LinearVariant::Gar: return w + 1;
        case LinearVariant::Ar: return n * (w + 1);
        case LinearVariant::Var: return n * (n * w + 1);
    }
    return 0;
}

Tensor DirectLinearModel::predict(const Tensor& window_mat) const {
    check_window_width(window_mat, window, n_locations);
    Tensor out(n_locations, 1, 0.0);
    for (int i = 0; i < n_locations; ++i) {
        const std::vector<double>& c =
            coef[variant == LinearVariant::Gar ? 0 : static_cast<size_t>(i)];
        double y = c.back();  // intercept
        if (variant == LinearVariant::Var) {
            size_t k = 0;
            for (int j = 0; j < n_locations; ++j)
                for (int t = 0; t < window; ++t) y += c[k++] * window_mat(j, t);
        } else {
            for (int t = 0; t < window; ++t) y += c[static_cast<size_t>(t)] * window_mat(i, t);
        }
        out(i, 0) = y;
    }
    return out;
}

DirectLinearModel fit_direct_linear(const WindowSet& train, LinearVariant variant) {
    require_samples(train);
    const int n = train.samples.front().input.rows();
    const int w = train.window;
    DirectLinearModel model;
    model.variant = variant;
    model.window = w;
    model.n_locations = n;

    if (variant == LinearVariant::Gar) {
        const int f = w + 1;
        NormalAccumulator acc(f);
        std::vector<double> xty(static_cast<size_t>(f), 0.0);
        std::vector<double> row(static_cast<size_t>(f));
        for (const WindowSample& s : train.samples) {
            for (int i = 0; i < n; ++i) {
                for (int t = 0; t < w; ++t) row[static_cast<size_t>(t)] = s.input(i, t);
                row[static_cast<size_t>(w)] = 1.0;
                acc.add_x(row);
                const double y = s.target(i, 0);
                for (int k = 0; k < f; ++k) xty[static_cast<size_t>(k)] += row[static_cast<size_t>(k)] * y;
            }
        }
        model.coef.push_back(acc.solve(xty));
    } else if (variant == LinearVariant::Ar) {
        const int f = w + 1;
        std::vector<double> row(static_cast<size_t>(f));
        for (int i = 0; i < n; ++i) {
            NormalAccumulator acc(f);
            std::vector<double> xty(static_cast<size_t>(f), 0.0);
            for (const WindowSample& s : train.samples) {
                for (int t = 0; t < w; ++t) row[static_cast<size_t>(t)] = s.input(i, t);
                row[static_cast<size_t>(w)] = 1.0;
                acc.add_x(row);
                const double y = s.target(i, 0);
                for (int k = 0; k < f; ++k) xty[static_cast<size_t>(k)] += row[static_cast<size_t>(k)] * y;
            }
            model.coef.push_back(acc.solve(xty));
        }
    } else {
        const int f = n * w + 1;
        NormalAccumulator acc(f);
        std::vector<std::vector<double>> xty(static_cast<size_t>(n),
                                             std::vector<double>(static_cast<size_t>(f), 0.0));
        std::vector<double> row(static_cast<size_t>(f));
        for (const WindowSample& s : train.samples) {
            size_t k = 0;
            for (int j = 0; j < n; ++j)
                for (int t = 0; t < w; ++t) row[k++] = s.input(j, t);
            row[static_cast<size_t>(f - 1)] = 1.0;
            acc.add_x(row);
            for (int i = 0; i < n; ++i) {
                const double y = s.target(i, 0);
                if (y == 0.0) continue;
                for (int c = 0; c < f; ++c) xty[static_cast<size_t>(i)][static_cast<size_t>(c)] +=
                    row[static_cast<size_t>(c)] * y;
            }
        }
        for (int i = 0; i < n; ++i) model.coef.push_back(acc.solve(xty[static_cast<size_t>(i)]));
    }
    return model;
}

double training_mse(const DirectLinearModel& model, const WindowSet& ws) {
    require_samples(ws);
    double s = 0.0;
    long long count = 0;
    for (const WindowSample& sample : ws.samples) {
        const Tensor pred = model.predict(sample.input);
        for (int i = 0; i < pred.rows(); ++i) {
            const double d = pred(i, 0) - sample.target(i, 0);
            s += d * d;
            ++count;
        }
    }
    return s / static_cast<double>(count);
}

long long ArmaModel::param_count() const {
    return static_cast<long long>(n_locations) * (window + q + 1);
}

namespace {

// Residual of the long AR at time t against observed values; zero before a
// full lag window exists.
double long_ar_residual(const Tensor& series, const std::vector<double>& c, int loc, int t,
                        int window) {
    if (t < window) return 0.0;
    double fit = c.back();
    for (int k = 0; k < window; ++k) fit += c[static_cast<size_t>(k)] * series(loc, t - window + k);
    return series(loc, t) - fit;
}

}  // namespace

Tensor ArmaModel::predict_at(const Tensor& series, int window_start) const {
    const int w_end = window_start + window;  // one past the last observed column
    if (window_start < 0 || w_end > series.cols())
        throw DataError("window [" + std::to_string(window_start) + ", " + std::to_string(w_end) +
                        ") lies outside the series of length " + std::to_string(series.cols()));
    if (series.rows() != n_locations)
        throw ShapeError("series has " + std::to_string(series.rows()) + " locations, model has " +
                         std::to_string(n_locations));
    Tensor out(n_locations, 1, 0.0);
    for (int i = 0; i < n_locations; ++i) {
        const std::vector<double>& c = coef[static_cast<size_t>(i)];
        double y = c.back();
        for (int t = 0; t < window; ++t)
            y += c[static_cast<size_t>(t)] * series(i, window_start + t);
        for (int k = 0; k < q; ++k)
            y += c[static_cast<size_t>(window + k)] *
                 long_ar_residual(series, long_ar[static_cast<size_t>(i)], i, w_end - 1 - k, window);
        out(i, 0) = y;
    }
    return out;
}

ArmaModel fit_arma(const Tensor& train_series, int window, int q, int horizon) {
    if (window < 1) throw ConfigError("window must be positive");
    if (q < 0) throw ConfigError("moving-average order must be nonnegative");
    if (horizon < 1) throw ConfigError("horizon must be positive");
    const int n = train_series.rows();
    const int t_len = train_series.cols();
    if (t_len < window + q + horizon)
        throw DataError("series length " + std::to_string(t_len) +
                        " is too short for W=" + std::to_string(window) + ", q=" +
                        std::to_string(q) + ", h=" + std::to_string(horizon));

    ArmaModel model;
    model.window = window;
    model.q = q;
    model.horizon = horizon;
    model.n_locations = n;

    for (int i = 0; i < n; ++i) {
        // Stage 1: one-step long AR of order W.
        const int f1 = window + 1;
        NormalAccumulator acc1(f1);
        std::vector<double> xty1(static_cast<size_t>(f1), 0.0);
        std::vector<double> row(static_cast<size_t>(f1));
        for (int t = window; t < t_len; ++t) {
            for (int k = 0; k < window; ++k) row[static_cast<size_t>(k)] = train_series(i, t - window + k);
            row[static_cast<size_t>(window)] = 1.0;
            acc1.add_x(row);
            const double y = train_series(i, t);
            for (int k = 0; k < f1; ++k) xty1[static_cast<size_t>(k)] += row[static_cast<size_t>(k)] * y;
        }
        model.long_ar.push_back(acc1.solve(xty1));

        // Stage 2: direct h-step regression on lags plus recent residuals.
        const int f2 = window + q + 1;
        NormalAccumulator acc2(f2);
        std::vector<double> xty2(static_cast<size_t>(f2), 0.0);
        std::vector<double> row2(static_cast<size_t>(f2));
        const int samples = t_len - window - horizon + 1;
        for (int s = 0; s < samples; ++s) {
            for (int k = 0; k < window; ++k) row2[static_cast<size_t>(k)] = train_series(i, s + k);
            for (int k = 0; k < q; ++k)
                row2[static_cast<size_t>(window + k)] = long_ar_residual(
                    train_series, model.long_ar.back(), i, s + window - 1 - k, window);
            row2[static_cast<size_t>(f2 - 1)] = 1.0;
            acc2.add_x(row2);
            const double y = train_series(i, s + window + horizon - 1);
            for (int k = 0; k < f2; ++k) xty2[static_cast<size_t>(k)] += row2[static_cast<size_t>(k)] * y;
        }
        model.coef.push_back(acc2.solve(xty2));
    }
    return model;
}

RnnBaselineModel::RnnBaselineModel(int n_locations, int window, int hidden, double dropout)
    : n_(n_locations), window_(window), hidden_(hidden), dropout_(dropout) {
    if (n_ < 1 || window_ < 1 || hidden_ < 1)
        throw ConfigError("rnn baseline needs positive locations, window and hidden size");
    if (!(dropout_ >= 0.0 && dropout_ < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    rnn_w = Tensor::zeros(1, hidden_);
    rnn_u = Tensor::zeros(hidden_, hidden_);
    rnn_b = Tensor::zeros(1, hidden_);
    head_theta = Tensor::zeros(hidden_, 1);
    head_b = Tensor::zeros(1, 1);
}

std::vector<ParamRef> RnnBaselineModel::params() {
    return {
        {"rnn.w", &rnn_w, false},
        {"rnn.u", &rnn_u, false},
        {"rnn.b", &rnn_b, true},
        {"head.theta", &head_theta, false},
        {"head.b", &head_b, true},
    };
}

void RnnBaselineModel::bind(Tape& tape) {
    bound_.clear();
    bg_.tape = &tape;
    bg_.w = tape.leaf(rnn_w);
    Var u = tape.leaf(rnn_u);
    bg_.b = tape.leaf(rnn_b);
    bg_.theta = tape.leaf(head_theta);
    bg_.bias = tape.leaf(head_b);
    bound_ = {bg_.w, u, bg_.b, bg_.theta, bg_.bias};
    bg_.u_t = tape.transpose(u);
}

Var RnnBaselineModel::predict_var(Tape& tape, const WindowSample& sample, RunMode mode, Rng* rng) {
    if (bg_.tape != &tape) throw std::logic_error("bind() must run on this tape before predict");
    check_window_width(sample.input, window_, n_);
    Var h = model_ops::rnn_encode(tape, bg_.w, bg_.u_t, bg_.b, sample.input);
    if (mode == RunMode::Train && dropout_ > 0.0) {
        if (!rng) throw std::logic_error("training forward with dropout needs an rng");
        Var mask = tape.constant(make_dropout_mask(n_, hidden_, dropout_, *rng));
        h = tape.hadamard(h, mask);
    }
    return tape.broadcast_add_row(tape.matmul(h, bg_.theta), bg_.bias);
}

long long RnnBaselineModel::param_count() {
    long long total = 0;
    for (const ParamRef& p : params())
        total += static_cast<long long>(p.tensor->rows()) * p.tensor->cols();
    return total;
}

RnnBaselineFit fit_rnn_baseline(const WindowSet& train_ws, const WindowSet& val_ws, int hidden,
                                double dropout, const TrainConfig& cfg, std::ostream* log) {
    require_samples(train_ws);
    const int n = train_ws.samples.front().input.rows();
    RnnBaselineFit fit;
    fit.model = std::make_unique<RnnBaselineModel>(n, train_ws.window, hidden, dropout);
    fit.report = train_model(*fit.model, train_ws, val_ws, cfg, log);
    return fit;
}

}  // namespace colagnn
