#pragma once

#include <cstdint>

#include "colagnn/dataset.hpp"

namespace colagnn {

// Seasonal benchmark: every location repeats an annual profile (low sinusoid
// plus one outbreak pulse per season) with a location-specific phase lag.
// The season-to-season onset jitter and amplitude are shared across
// locations, so early-lag locations reveal what late-lag locations will see
// weeks later; adjacency connects locations with nearby lags.
struct SynthConfig {
    int locations = 10;
    int weeks = 500;
    int season = 52;
    std::uint64_t seed = 2024;
    double lag_span = 15.0;     // largest phase lag in weeks
    int onset_jitter = 4;       // yearly onset shift, uniform integer [-j, j]
    double bump_width = 3.5;    // Gaussian pulse width in weeks
    double bump_height = 1.0;
    double base_level = 0.15;
    double sine_amp = 0.25;
    double noise_sd = 0.04;
    double scale = 1000.0;      // multiplier into count units
    double adj_lag_thresh = 2.0;  // connect lags closer than this
};

struct SynthData {
    EpiDataset series;
    AdjacencyMatrix adjacency;
};

SynthData make_synthetic(const SynthConfig& cfg);

}  // namespace colagnn
