#include "colagnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "colagnn/errors.hpp"

namespace colagnn {

double rel_err(double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    return std::fabs(analytic - numeric) / denom;
}

GradCheckReport finite_diff_check(const std::function<double(const std::vector<Tensor>&)>& f,
                                  std::vector<Tensor> params,
                                  const std::vector<Tensor>& analytic,
                                  double step,
                                  double tolerance) {
    if (step <= 0.0) {
        throw NumericError("finite_diff_check: step must be positive");
    }
    if (analytic.size() != params.size()) {
        throw ShapeError("finite_diff_check: gradient list length " +
                         std::to_string(analytic.size()) + " does not match parameter count " +
                         std::to_string(params.size()));
    }
    GradCheckReport report;
    report.step = step;
    report.per_param_max_rel_err.assign(params.size(), 0.0);
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!params[p].same_shape(analytic[p])) {
            throw ShapeError("finite_diff_check: parameter " + std::to_string(p) +
                             " shape " + shape_str(params[p]) + " vs gradient " +
                             shape_str(analytic[p]));
        }
        for (std::size_t i = 0; i < params[p].size(); ++i) {
            const double orig = params[p].data()[i];
            params[p].data()[i] = orig + step;
            const double fp = f(params);
            params[p].data()[i] = orig - step;
            const double fm = f(params);
            params[p].data()[i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm)) {
                throw NumericError("finite_diff_check: non-finite objective at parameter " +
                                   std::to_string(p) + " coordinate " + std::to_string(i));
            }
            const double numeric = (fp - fm) / (2.0 * step);
            const double err = rel_err(analytic[p].data()[i], numeric);
            report.per_param_max_rel_err[p] = std::max(report.per_param_max_rel_err[p], err);
            if (err > report.max_rel_err) {
                report.max_rel_err = err;
                report.worst_param = static_cast<int>(p);
            }
        }
    }
    report.pass = report.max_rel_err < tolerance;
    return report;
}

}  // namespace colagnn
