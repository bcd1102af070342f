#pragma once

#include <string>
#include <vector>

#include "colagnn/dataset.hpp"
#include "colagnn/run_config.hpp"
#include "colagnn/synthetic.hpp"

namespace colagnn {

// Inputs loaded and prepared for one run: raw splits plus splits normalized
// under the configured extrema policy.
struct LoadedData {
    EpiDataset ds;
    AdjacencyMatrix adj;
    Splits splits;
    Normalizer norm;
    EpiDataset train_n, val_n, test_n;
    std::string series_hash;
    std::string adjacency_hash;
};

// Loads the series (and adjacency when configured; identity otherwise),
// splits 50/20/30 by time, fits the normalizer.
LoadedData load_pipeline(const RunConfig& cfg);

void cmd_train(const RunConfig& cfg);
void cmd_benchmark(const RunConfig& cfg);
void cmd_predict(const RunConfig& cfg, const std::vector<std::string>& checkpoint_paths);
void cmd_export_attention(const RunConfig& cfg, const std::string& checkpoint_path,
                          int window_start);
void cmd_sweep(const RunConfig& cfg);
void cmd_dump(const RunConfig& cfg);
void cmd_synth(const SynthConfig& synth, const RunConfig& cfg);

}  // namespace colagnn
