#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "colagnn/dataset.hpp"
#include "colagnn/tensor.hpp"

namespace colagnn {

// Metrics operate on flat vectors pooled across locations and windows,
// already in count units.
double rmse(const std::vector<double>& yhat, const std::vector<double>& y);
double mae(const std::vector<double>& yhat, const std::vector<double>& y);

// Sample Pearson correlation; missing when either vector is constant.
std::optional<double> pcc(const std::vector<double>& yhat, const std::vector<double>& y);

struct PredictionRow {
    int week;      // target week index within the evaluated split
    int location;  // index into the dataset location order
    double y_true;
    double y_pred;
};

struct EvalResult {
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> pcc;
    std::vector<double> flat_true;
    std::vector<double> flat_pred;
    std::vector<PredictionRow> rows;
};

using Predictor = std::function<Tensor(const WindowSample&)>;

// Runs the predictor over every window, denormalizes per location, clips
// predictions below at 0 (counts), pools everything, computes the metrics.
EvalResult evaluate(const Predictor& predict, const WindowSet& ws, const Normalizer& norm);

struct MetricSummary {
    std::vector<double> values;
    double mean = 0.0;
    double sd = 0.0;  // sample SD over n-1; 0 for a single value
};

MetricSummary summarize(const std::vector<double>& values);

}  // namespace colagnn
