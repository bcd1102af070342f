#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "colagnn/dataset.hpp"
#include "colagnn/model.hpp"
#include "colagnn/rng.hpp"
#include "colagnn/tape.hpp"

namespace colagnn {

struct TrainConfig {
    double lr = 0.001;
    double weight_decay = 5e-4;
    int batch_size = 32;
    int max_epochs = 1500;
    int patience = 200;
    std::uint64_t seed = 1;
    int trials = 10;

    void validate() const;
};

struct TrainReport {
    std::vector<double> train_loss;     // mean per-sample L1 sum, per epoch
    std::vector<double> val_loss;
    std::vector<double> epoch_seconds;
    int best_epoch = -1;    // 1-based, matches the log
    int stopped_epoch = -1; // last epoch that ran
    double best_val_loss = 0.0;
};

Tensor glorot_init(int rows, int cols, Rng& rng);

// Glorot for weights, zeros for biases, in registry order.
void init_params(const std::vector<ParamRef>& params, Rng& rng);

// Sum of absolute residuals; the eager form checks shapes, the tape form
// appends |yhat - y| summed to a 1x1 node.
double l1_loss(const Tensor& yhat, const Tensor& y);
Var l1_loss_var(Tape& tape, Var yhat, const Tensor& y);

class Adam {
public:
    Adam(std::vector<ParamRef> params, double lr, double weight_decay);

    // Grads aligned with the registry; weight decay couples lambda*theta into
    // the gradient of non-bias tensors before the moment updates.
    void step(const std::vector<Tensor>& grads);

    int steps_taken() const { return t_; }

private:
    std::vector<ParamRef> params_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    double lr_;
    double wd_;
    int t_ = 0;
};

// Mean per-sample L1 over a window set in eval mode.
double eval_l1(ForecastModel& model, const WindowSet& ws);

// Full loop: glorot init from cfg.seed, shuffled batches, L1 + Adam, early
// stopping on validation L1 with strict improvement, best-epoch restore.
// When `log` is given, writes a header plus `epoch,train_l1,val_l1,seconds`
// rows as epochs finish.
TrainReport train_model(ForecastModel& model, const WindowSet& train_ws, const WindowSet& val_ws,
                        const TrainConfig& cfg, std::ostream* log = nullptr);

struct TrialOutcome {
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> pcc;
    TrainReport report;
};

using ModelFactory = std::function<std::unique_ptr<ForecastModel>()>;

// Trains `trials` fresh models with seeds cfg.seed, cfg.seed+1, ... and
// evaluates each on the test windows in denormalized units.
std::vector<TrialOutcome> run_trials(const ModelFactory& make_model, const WindowSet& train_ws,
                                     const WindowSet& val_ws, const WindowSet& test_ws,
                                     const Normalizer& norm, const TrainConfig& cfg, int trials,
                                     std::ostream* progress = nullptr);

}  // namespace colagnn
