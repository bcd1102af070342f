#pragma once

#include <functional>
#include <vector>

#include "colagnn/tensor.hpp"

namespace colagnn {

struct GradCheckReport {
    std::vector<double> per_param_max_rel_err;  // one entry per parameter tensor
    double max_rel_err = 0.0;
    int worst_param = -1;
    double step = 0.0;
    bool pass = false;
};

// Relative error used throughout: |a - n| / max(|a|, |n|, 1e-8).
double rel_err(double analytic, double numeric);

// Central-difference check of analytic gradients. `f` evaluates the scalar
// objective at a full parameter assignment; `analytic` holds the gradients
// produced by Tape::backward for the same assignment. Throws NumericError
// naming the parameter index if a perturbed evaluation is non-finite.
GradCheckReport finite_diff_check(const std::function<double(const std::vector<Tensor>&)>& f,
                                  std::vector<Tensor> params,
                                  const std::vector<Tensor>& analytic,
                                  double step,
                                  double tolerance);

}  // namespace colagnn
