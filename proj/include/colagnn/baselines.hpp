#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "colagnn/dataset.hpp"
#include "colagnn/model.hpp"
#include "colagnn/tensor.hpp"
#include "colagnn/train.hpp"

namespace colagnn {

enum class LinearVariant { Gar, Ar, Var };

const char* variant_name(LinearVariant v);

// Direct h-step least-squares predictor. Feature layout per output location:
// lag values oldest to newest (VAR: location-major over all locations), then
// the intercept. GAR holds a single shared coefficient row.
struct DirectLinearModel {
    LinearVariant variant = LinearVariant::Gar;
    int window = 0;
    int n_locations = 0;
    std::vector<std::vector<double>> coef;

    long long param_count() const;
    Tensor predict(const Tensor& window_mat) const;  // N x 1, normalized units
};

// Normal equations with ridge jitter 1e-8 on the diagonal.
DirectLinearModel fit_direct_linear(const WindowSet& train, LinearVariant variant);

// Mean squared residual over every (sample, location) pair.
double training_mse(const DirectLinearModel& model, const WindowSet& ws);

// Two-stage Hannan-Rissanen ARMA per location: a long AR of order W supplies
// residual estimates (zero before time W), then the h-step target regresses
// on W lags plus the q most recent residuals at the window end.
struct ArmaModel {
    int window = 0;
    int q = 2;
    int horizon = 1;
    int n_locations = 0;
    std::vector<std::vector<double>> long_ar;  // per location: W lags + intercept
    std::vector<std::vector<double>> coef;     // per location: W lags + q residuals + intercept

    long long param_count() const;

    // Prediction for the window starting at `window_start` of `series`
    // (N x T); residuals are recomputed from the observed series.
    Tensor predict_at(const Tensor& series, int window_start) const;
};

ArmaModel fit_arma(const Tensor& train_series, int window, int q, int horizon);

// Global vanilla RNN sharing Eq.-1 parameters across locations, with a
// linear head per hidden state.
class RnnBaselineModel : public ForecastModel {
public:
    RnnBaselineModel(int n_locations, int window, int hidden, double dropout);

    std::vector<ParamRef> params() override;
    void bind(Tape& tape) override;
    Var predict_var(Tape& tape, const WindowSample& sample, RunMode mode, Rng* rng) override;
    const std::vector<Var>& bound_vars() const override { return bound_; }

    long long param_count();
    int hidden() const { return hidden_; }

    Tensor rnn_w, rnn_u, rnn_b;
    Tensor head_theta;  // D x 1
    Tensor head_b;      // 1 x 1

private:
    int n_;
    int window_;
    int hidden_;
    double dropout_;
    std::vector<Var> bound_;
    struct Bound {
        Tape* tape = nullptr;
        Var w, u_t, b, theta, bias;
    } bg_;
};

struct RnnBaselineFit {
    std::unique_ptr<RnnBaselineModel> model;
    TrainReport report;
};

RnnBaselineFit fit_rnn_baseline(const WindowSet& train_ws, const WindowSet& val_ws, int hidden,
                                double dropout, const TrainConfig& cfg,
                                std::ostream* log = nullptr);

}  // namespace colagnn
