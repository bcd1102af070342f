#include "colagnn/synthetic.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "colagnn/errors.hpp"
#include "colagnn/rng.hpp"

namespace colagnn {

namespace {

std::string padded(const char* prefix, int value, int width) {
    std::string digits = std::to_string(value);
    while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
    return prefix + digits;
}

}  // namespace

SynthData make_synthetic(const SynthConfig& cfg) {
    if (cfg.locations < 2) throw ConfigError("synthetic benchmark needs at least 2 locations");
    if (cfg.weeks < 2) throw ConfigError("synthetic benchmark needs at least 2 weeks");
    if (cfg.season < 2) throw ConfigError("season length must be at least 2 weeks");
    if (cfg.onset_jitter < 0) throw ConfigError("onset jitter must be nonnegative");

    const int n = cfg.locations;
    const int t_len = cfg.weeks;
    Rng rng(cfg.seed);

    std::vector<double> lags(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        lags[static_cast<size_t>(i)] =
            std::round(cfg.lag_span * static_cast<double>(i) / static_cast<double>(n - 1));

    // Shared season randomness: one onset shift and amplitude per season,
    // covering one season of margin on each side.
    const int first_year = -1;
    const int last_year = t_len / cfg.season + 1;
    std::vector<double> onset, amp;
    for (int y = first_year; y <= last_year; ++y) {
        onset.push_back(static_cast<double>(rng.below(2 * cfg.onset_jitter + 1)) -
                        cfg.onset_jitter);
        amp.push_back(rng.uniform(0.7, 1.3));
    }
    const double base_onset = 10.0;
    const double two_pi = 2.0 * std::acos(-1.0);

    EpiDataset ds;
    for (int i = 0; i < n; ++i) ds.locations.push_back(padded("loc", i, 2));
    const int week_width = static_cast<int>(std::to_string(t_len).size());
    for (int t = 0; t < t_len; ++t) ds.weeks.push_back(padded("w", t + 1, week_width));
    ds.values = Tensor::zeros(n, t_len);

    for (int i = 0; i < n; ++i) {
        const double lag = lags[static_cast<size_t>(i)];
        for (int t = 0; t < t_len; ++t) {
            double v = cfg.base_level;
            v += cfg.sine_amp * 0.5 *
                 (1.0 + std::sin(two_pi * (t - lag) / cfg.season - two_pi / 4.0));
            for (int y = first_year; y <= last_year; ++y) {
                const double center = y * cfg.season + base_onset +
                                      onset[static_cast<size_t>(y - first_year)] + lag;
                const double z = (t - center) / cfg.bump_width;
                if (std::abs(z) < 6.0)
                    v += cfg.bump_height * amp[static_cast<size_t>(y - first_year)] *
                         std::exp(-0.5 * z * z);
            }
            v += rng.normal(0.0, cfg.noise_sd);
            ds.values(i, t) = std::round(std::max(0.0, v * cfg.scale));
        }
    }

    Tensor raw = Tensor::zeros(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (std::abs(lags[static_cast<size_t>(i)] - lags[static_cast<size_t>(j)]) <=
                cfg.adj_lag_thresh)
                raw(i, j) = 1.0;

    SynthData out;
    out.adjacency = make_adjacency(ds.locations, raw);
    out.series = std::move(ds);
    return out;
}

}  // namespace colagnn
