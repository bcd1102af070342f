#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "colagnn/baselines.hpp"
#include "colagnn/dataset.hpp"
#include "colagnn/model.hpp"
#include "colagnn/tensor.hpp"

namespace colagnn {

// One JSON container for every method. Parameter tensors are stored as
// row-major arrays under names matching the model's registry; baseline
// coefficient blocks are named by variant and location.
struct Checkpoint {
    std::string method;  // cola-gnn | gar | ar | var | arma | rnn
    int horizon = 1;
    int window = 0;
    std::vector<std::string> locations;
    Normalizer normalizer;
    std::map<std::string, Tensor> tensors;

    // cola-gnn
    ColaGnnConfig config;
    Tensor adjacency_raw;

    // rnn
    int hidden = 0;
    double dropout = 0.0;

    // arma
    int arma_q = 0;
};

void save_colagnn_checkpoint(const std::string& path, ColaGnnModel& model,
                             const Normalizer& norm, const Tensor& adjacency_raw,
                             const std::vector<std::string>& locations, int horizon);
void save_linear_checkpoint(const std::string& path, const DirectLinearModel& model,
                            const Normalizer& norm, const std::vector<std::string>& locations,
                            int horizon);
void save_arma_checkpoint(const std::string& path, const ArmaModel& model, const Normalizer& norm,
                          const std::vector<std::string>& locations);
void save_rnn_checkpoint(const std::string& path, RnnBaselineModel& model, const Normalizer& norm,
                         const std::vector<std::string>& locations, int horizon, int window,
                         double dropout);

Checkpoint load_checkpoint(const std::string& path);

// Rebuild runnable models from a loaded container.
std::unique_ptr<ColaGnnModel> restore_colagnn(const Checkpoint& ckpt);
DirectLinearModel restore_linear(const Checkpoint& ckpt);
ArmaModel restore_arma(const Checkpoint& ckpt);
std::unique_ptr<RnnBaselineModel> restore_rnn(const Checkpoint& ckpt);

}  // namespace colagnn
