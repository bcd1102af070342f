#include "colagnn/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <utility>

#include "colagnn/errors.hpp"
#include "colagnn/metrics.hpp"

namespace colagnn {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

}  // namespace

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight decay must be nonnegative");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (max_epochs < 1) throw ConfigError("max epochs must be at least 1");
    if (patience < 0) throw ConfigError("patience must be nonnegative");
    if (patience > max_epochs) throw ConfigError("patience cannot exceed max epochs");
    if (trials < 1) throw ConfigError("trials must be at least 1");
}

Tensor glorot_init(int rows, int cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t(rows, cols, 0.0);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t(i, j) = rng.uniform(-bound, bound);
    return t;
}

void init_params(const std::vector<ParamRef>& params, Rng& rng) {
    for (const ParamRef& p : params) {
        if (p.is_bias) {
            *p.tensor = Tensor::zeros(p.tensor->rows(), p.tensor->cols());
        } else {
            *p.tensor = glorot_init(p.tensor->rows(), p.tensor->cols(), rng);
        }
    }
}

double l1_loss(const Tensor& yhat, const Tensor& y) {
    if (!yhat.same_shape(y))
        throw ShapeError("l1_loss shapes differ: " + shape_str(yhat) + " vs " + shape_str(y));
    double s = 0.0;
    for (int i = 0; i < yhat.rows(); ++i)
        for (int j = 0; j < yhat.cols(); ++j) s += std::abs(yhat(i, j) - y(i, j));
    return s;
}

Var l1_loss_var(Tape& tape, Var yhat, const Tensor& y) {
    Var y_const = tape.constant(y);
    Var diff = tape.add(yhat, tape.scalar_mul(y_const, -1.0));
    return tape.sum_abs(diff);
}

Adam::Adam(std::vector<ParamRef> params, double lr, double weight_decay)
    : params_(std::move(params)), lr_(lr), wd_(weight_decay) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const ParamRef& p : params_) {
        m_.push_back(Tensor::zeros(p.tensor->rows(), p.tensor->cols()));
        v_.push_back(Tensor::zeros(p.tensor->rows(), p.tensor->cols()));
    }
}

void Adam::step(const std::vector<Tensor>& grads) {
    if (grads.size() != params_.size())
        throw ShapeError("adam got " + std::to_string(grads.size()) + " grads for " +
                         std::to_string(params_.size()) + " params");
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);
    for (size_t k = 0; k < params_.size(); ++k) {
        Tensor& theta = *params_[k].tensor;
        if (!grads[k].same_shape(theta))
            throw ShapeError("adam grad " + std::to_string(k) + " is " + shape_str(grads[k]) +
                             ", param is " + shape_str(theta));
        const bool decay = !params_[k].is_bias && wd_ > 0.0;
        Tensor& m = m_[k];
        Tensor& v = v_[k];
        for (int i = 0; i < theta.rows(); ++i) {
            for (int j = 0; j < theta.cols(); ++j) {
                double g = grads[k](i, j);
                if (decay) g += wd_ * theta(i, j);
                m(i, j) = kBeta1 * m(i, j) + (1.0 - kBeta1) * g;
                v(i, j) = kBeta2 * v(i, j) + (1.0 - kBeta2) * g * g;
                const double mhat = m(i, j) / bc1;
                const double vhat = v(i, j) / bc2;
                theta(i, j) -= lr_ * mhat / (std::sqrt(vhat) + kAdamEps);
            }
        }
    }
}

double eval_l1(ForecastModel& model, const WindowSet& ws) {
    if (ws.samples.empty()) throw DataError("cannot evaluate on an empty window set");
    double total = 0.0;
    for (const WindowSample& s : ws.samples) total += l1_loss(model.predict(s), s.target);
    return total / static_cast<double>(ws.samples.size());
}

TrainReport train_model(ForecastModel& model, const WindowSet& train_ws, const WindowSet& val_ws,
                        const TrainConfig& cfg, std::ostream* log) {
    cfg.validate();
    if (train_ws.samples.empty()) throw DataError("training window set is empty");
    if (val_ws.samples.empty()) throw DataError("validation window set is empty");

    Rng rng(cfg.seed);
    std::vector<ParamRef> refs = model.params();
    init_params(refs, rng);
    Adam opt(refs, cfg.lr, cfg.weight_decay);

    const size_t n_train = train_ws.samples.size();
    std::vector<size_t> order(n_train);
    for (size_t i = 0; i < n_train; ++i) order[i] = i;

    TrainReport report;
    std::vector<Tensor> best;
    double best_val = std::numeric_limits<double>::infinity();
    int since_improve = 0;
    const int stop_after = std::max(cfg.patience, 1);

    if (log) *log << "epoch,train_l1,val_l1,seconds\n";

    Tape tape;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        rng.shuffle(order);
        double epoch_sum = 0.0;
        for (size_t start = 0; start < n_train; start += static_cast<size_t>(cfg.batch_size)) {
            const size_t stop = std::min(n_train, start + static_cast<size_t>(cfg.batch_size));
            tape.clear();
            model.bind(tape);
            Var total;
            for (size_t k = start; k < stop; ++k) {
                const WindowSample& s = train_ws.samples[order[k]];
                Var yhat = model.predict_var(tape, s, RunMode::Train, &rng);
                Var loss = l1_loss_var(tape, yhat, s.target);
                total = (k == start) ? loss : tape.add(total, loss);
            }
            const double batch_loss = tape.value(total)(0, 0);
            if (!std::isfinite(batch_loss))
                throw NumericError("non-finite training loss in epoch " + std::to_string(epoch) +
                                   " (lr=" + format_double(cfg.lr) +
                                   "); try a smaller learning rate");
            epoch_sum += batch_loss;
            tape.backward(total);
            std::vector<Tensor> grads;
            grads.reserve(refs.size());
            for (Var v : model.bound_vars()) grads.push_back(tape.grad(v));
            opt.step(grads);
        }
        const double train_l1 = epoch_sum / static_cast<double>(n_train);
        const double val_l1 = eval_l1(model, val_ws);
        if (!std::isfinite(val_l1))
            throw NumericError("non-finite validation loss in epoch " + std::to_string(epoch) +
                               " (lr=" + format_double(cfg.lr) +
                               "); try a smaller learning rate");
        const auto t1 = std::chrono::steady_clock::now();
        const double seconds = std::chrono::duration<double>(t1 - t0).count();

        report.train_loss.push_back(train_l1);
        report.val_loss.push_back(val_l1);
        report.epoch_seconds.push_back(seconds);
        report.stopped_epoch = epoch;
        if (log)
            *log << epoch << ',' << format_double(train_l1) << ',' << format_double(val_l1) << ','
                 << format_double(seconds) << '\n';

        if (val_l1 < best_val) {
            best_val = val_l1;
            report.best_epoch = epoch;
            since_improve = 0;
            best.clear();
            for (const ParamRef& p : refs) best.push_back(*p.tensor);
        } else if (++since_improve >= stop_after) {
            break;
        }
    }

    for (size_t k = 0; k < refs.size(); ++k) *refs[k].tensor = best[k];
    report.best_val_loss = best_val;
    return report;
}

std::vector<TrialOutcome> run_trials(const ModelFactory& make_model, const WindowSet& train_ws,
                                     const WindowSet& val_ws, const WindowSet& test_ws,
                                     const Normalizer& norm, const TrainConfig& cfg, int trials,
                                     std::ostream* progress) {
    if (trials < 1) throw ConfigError("trials must be at least 1");
    std::vector<TrialOutcome> out;
    out.reserve(static_cast<size_t>(trials));
    for (int k = 0; k < trials; ++k) {
        TrainConfig trial_cfg = cfg;
        trial_cfg.seed = cfg.seed + static_cast<std::uint64_t>(k);
        std::unique_ptr<ForecastModel> model = make_model();
        TrialOutcome outcome;
        outcome.report = train_model(*model, train_ws, val_ws, trial_cfg);
        EvalResult ev = evaluate([&](const WindowSample& s) { return model->predict(s); },
                                 test_ws, norm);
        outcome.rmse = ev.rmse;
        outcome.mae = ev.mae;
        outcome.pcc = ev.pcc;
        if (progress)
            *progress << "trial " << (k + 1) << "/" << trials << " seed " << trial_cfg.seed
                      << " rmse " << format_double(outcome.rmse) << '\n';
        out.push_back(std::move(outcome));
    }
    return out;
}

}  // namespace colagnn
