#include "colagnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "colagnn/errors.hpp"

namespace colagnn {

namespace {

void check_lengths(const std::vector<double>& a, const std::vector<double>& b, const char* what) {
    if (a.size() != b.size())
        throw ShapeError(std::string(what) + " lengths differ: " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
    if (a.empty()) throw ShapeError(std::string(what) + " needs at least one value");
}

}  // namespace

double rmse(const std::vector<double>& yhat, const std::vector<double>& y) {
    check_lengths(yhat, y, "rmse");
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        const double d = yhat[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(y.size()));
}

double mae(const std::vector<double>& yhat, const std::vector<double>& y) {
    check_lengths(yhat, y, "mae");
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += std::abs(yhat[i] - y[i]);
    return s / static_cast<double>(y.size());
}

std::optional<double> pcc(const std::vector<double>& yhat, const std::vector<double>& y) {
    check_lengths(yhat, y, "pcc");
    const double n = static_cast<double>(y.size());
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        ma += yhat[i];
        mb += y[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        const double da = yhat[i] - ma;
        const double db = y[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

EvalResult evaluate(const Predictor& predict, const WindowSet& ws, const Normalizer& norm) {
    if (ws.samples.empty()) throw DataError("cannot evaluate an empty window set");
    EvalResult out;
    for (const WindowSample& s : ws.samples) {
        const Tensor pred = predict(s);
        if (pred.rows() != s.target.rows() || pred.cols() != 1)
            throw ShapeError("predictor returned " + shape_str(pred) + ", expected " +
                             std::to_string(s.target.rows()) + "x1");
        for (int i = 0; i < pred.rows(); ++i) {
            const double y_true = norm.invert_one(i, s.target(i, 0));
            const double y_pred = std::max(0.0, norm.invert_one(i, pred(i, 0)));
            out.flat_true.push_back(y_true);
            out.flat_pred.push_back(y_pred);
            out.rows.push_back({s.target_week, i, y_true, y_pred});
        }
    }
    out.rmse = rmse(out.flat_pred, out.flat_true);
    out.mae = mae(out.flat_pred, out.flat_true);
    out.pcc = pcc(out.flat_pred, out.flat_true);
    return out;
}

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    s.values = values;
    if (values.empty()) return s;
    double m = 0.0;
    for (double v : values) m += v;
    m /= static_cast<double>(values.size());
    s.mean = m;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - m) * (v - m);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

}  // namespace colagnn
