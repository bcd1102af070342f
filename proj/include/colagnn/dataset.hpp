#pragma once

#include <string>
#include <vector>

#include "colagnn/tensor.hpp"

namespace colagnn {

// Weekly multi-location count series. Rows are locations, columns are weeks
// in file order.
struct EpiDataset {
    std::vector<std::string> locations;
    std::vector<std::string> weeks;
    Tensor values;  // N x T

    int num_locations() const { return values.rows(); }
    int num_weeks() const { return values.cols(); }
};

// Binary geographic connectivity with unit diagonal, plus the degree vector
// and the symmetric degree-normalized form D^{-1/2} A D^{-1/2}.
struct AdjacencyMatrix {
    std::vector<std::string> locations;
    Tensor raw;         // N x N, entries in {0,1}, diagonal all ones
    Tensor degree;      // N x 1, d_i = sum_j raw(i,j)
    Tensor normalized;  // N x N
};

// Per-location affine [0,1] rescaling fitted on training rows.
struct Normalizer {
    std::vector<double> min;  // length N
    std::vector<double> max;  // length N

    double apply_one(int loc, double v) const;
    double invert_one(int loc, double v) const;
    Tensor apply(const Tensor& values) const;
    Tensor invert(const Tensor& values) const;
};

// One training instance: an N x W input slice and the N-vector target at
// horizon h past the window end.
struct WindowSample {
    Tensor input;           // N x W
    Tensor target;          // N x 1
    int target_week = 0;    // column index within the source split
    int window_start = 0;   // first input column within the source split
};

struct WindowSet {
    std::vector<WindowSample> samples;
    int window = 0;
    int horizon = 0;
};

// Formats a double in its shortest form that parses back to the same value.
std::string format_double(double v);

EpiDataset load_series(const std::string& path);
std::string series_to_csv(const EpiDataset& ds);
void write_series(const EpiDataset& ds, const std::string& path);

AdjacencyMatrix make_adjacency(const std::vector<std::string>& locations, Tensor raw);
AdjacencyMatrix load_adjacency(const std::string& path, const std::vector<std::string>& locations);
std::string adjacency_to_csv(const AdjacencyMatrix& adj);
void write_adjacency(const AdjacencyMatrix& adj, const std::string& path);

struct SplitRatios {
    double train = 0.5;
    double val = 0.2;
    double test = 0.3;
};

struct Splits {
    EpiDataset train;
    EpiDataset val;
    EpiDataset test;
    int train_end = 0;  // first column of val
    int val_end = 0;    // first column of test
};

// Contiguous time slices at floor(T*train) and floor(T*(train+val)). The
// boundaries depend only on the series dates, so every horizon reuses them.
Splits split_by_time(const EpiDataset& ds, const SplitRatios& ratios = {});

Normalizer fit_normalizer(const EpiDataset& train);
EpiDataset apply_normalizer(const Normalizer& norm, const EpiDataset& ds);

// One sample per start offset 0..T-W-h; input covers columns [s, s+W) and
// the target is column s+W+h-1.
WindowSet make_windows(const EpiDataset& ds, int window, int horizon,
                       const std::string& split_name = "");

}  // namespace colagnn
