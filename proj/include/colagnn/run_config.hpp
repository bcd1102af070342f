#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colagnn/model.hpp"
#include "colagnn/synthetic.hpp"
#include "colagnn/train.hpp"

namespace colagnn {

// Full description of a run: defaults live here, a config file overrides
// them, flags override the file.
struct RunConfig {
    std::string series_path;
    std::string adjacency_path;
    std::string normalization = "train";  // train | global extrema

    ColaGnnConfig model;  // attention_dim / filter_len -1 track hidden/2 and window
    TrainConfig train;

    int window = 20;
    int horizon = 1;
    std::vector<int> horizons = {2, 3, 4, 5, 10, 15};
    std::string method = "cola-gnn";
    std::vector<std::string> methods = {"cola-gnn", "gar", "ar", "var", "arma", "rnn"};
    std::string ablation = "none";  // none | no-temp | no-loc
    std::string out_dir = "runs";

    // sweep settings arrive via flags only
    std::string sweep_param;
    std::vector<int> sweep_values;

    void validate() const;
};

// Parses the [data]/[model]/[train]/[experiment] sections over the defaults;
// unknown sections or keys raise ConfigError with the line number.
RunConfig load_run_config(const std::string& path);
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin);

// Model config with the ablation folded in.
ColaGnnConfig model_config_for_run(const RunConfig& cfg);

// Canonical resolved snapshot: every hyperparameter with derived values
// filled in, plus input hashes; byte-identical across identical runs.
std::string resolved_snapshot(const RunConfig& cfg, const std::string& series_hash,
                              const std::string& adjacency_hash);

std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

// Comma-separated value helpers shared by config parsing and flags.
std::vector<int> parse_int_list(const std::string& text, const std::string& field);
std::vector<std::string> parse_name_list(const std::string& text);

}  // namespace colagnn
