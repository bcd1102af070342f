#include "colagnn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "colagnn/errors.hpp"

namespace colagnn {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

double parse_number(const std::string& cell, int row, int col, const char* what) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || cell.empty()) {
        throw DataError(std::string("non-numeric ") + what + " '" + cell + "' at row " +
                        std::to_string(row) + ", column " + std::to_string(col));
    }
    return v;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open file: " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(strip_cr(line));
    // ignore trailing blank lines
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

EpiDataset load_series(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 2) {
        throw DataError("series file needs a header and at least one data row: " + path);
    }
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 3) {
        throw DataError("series header needs 'week' plus at least two locations (N >= 2): " +
                        path);
    }
    EpiDataset ds;
    std::set<std::string> seen;
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (header[j].empty()) {
            throw DataError("empty location name in header column " + std::to_string(j + 1));
        }
        if (!seen.insert(header[j]).second) {
            throw DataError("duplicate location name '" + header[j] + "' in header column " +
                            std::to_string(j + 1));
        }
        ds.locations.push_back(header[j]);
    }
    const int n_loc = static_cast<int>(ds.locations.size());
    const int n_weeks = static_cast<int>(lines.size()) - 1;
    ds.values = Tensor(n_loc, n_weeks);
    for (int t = 0; t < n_weeks; ++t) {
        const int row_no = t + 2;  // 1-based file row
        const auto cells = split_csv_line(lines[t + 1]);
        if (static_cast<int>(cells.size()) != n_loc + 1) {
            throw DataError("row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(n_loc + 1));
        }
        ds.weeks.push_back(cells[0]);
        for (int i = 0; i < n_loc; ++i) {
            const double v = parse_number(cells[i + 1], row_no, i + 2, "count");
            if (!std::isfinite(v) || v < 0.0) {
                throw DataError("negative or non-finite count '" + cells[i + 1] + "' at row " +
                                std::to_string(row_no) + ", column " + std::to_string(i + 2));
            }
            ds.values(i, t) = v;
        }
    }
    return ds;
}

std::string series_to_csv(const EpiDataset& ds) {
    std::string out = "week";
    for (const auto& loc : ds.locations) {
        out += ',';
        out += loc;
    }
    out += '\n';
    for (int t = 0; t < ds.num_weeks(); ++t) {
        out += ds.weeks[t];
        for (int i = 0; i < ds.num_locations(); ++i) {
            out += ',';
            out += format_double(ds.values(i, t));
        }
        out += '\n';
    }
    return out;
}

void write_series(const EpiDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << series_to_csv(ds);
}

AdjacencyMatrix make_adjacency(const std::vector<std::string>& locations, Tensor raw) {
    const int n = static_cast<int>(locations.size());
    if (raw.rows() != n || raw.cols() != n) {
        throw DataError("adjacency must be " + std::to_string(n) + "x" + std::to_string(n) +
                        ", got " + shape_str(raw));
    }
    for (int i = 0; i < n; ++i) {
        raw(i, i) = 1.0;  // each location is adjacent to itself
        for (int j = 0; j < n; ++j) {
            const double v = raw(i, j);
            if (v != 0.0 && v != 1.0) {
                throw DataError("adjacency entries must be 0 or 1, got " + format_double(v) +
                                " at (" + locations[i] + "," + locations[j] + ")");
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (raw(i, j) != raw(j, i)) {
                throw DataError("adjacency is not symmetric at (" + locations[i] + "," +
                                locations[j] + ")");
            }
        }
    }
    AdjacencyMatrix adj;
    adj.locations = locations;
    adj.degree = Tensor(n, 1);
    for (int i = 0; i < n; ++i) {
        double d = 0.0;
        for (int j = 0; j < n; ++j) d += raw(i, j);
        adj.degree(i, 0) = d;
    }
    adj.normalized = Tensor(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            adj.normalized(i, j) =
                raw(i, j) / std::sqrt(adj.degree(i, 0) * adj.degree(j, 0));
        }
    }
    adj.raw = std::move(raw);
    return adj;
}

AdjacencyMatrix load_adjacency(const std::string& path,
                               const std::vector<std::string>& locations) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw DataError("empty adjacency file: " + path);
    auto header = split_csv_line(lines[0]);
    // Header may carry a corner label cell before the location names.
    const int n = static_cast<int>(locations.size());
    if (static_cast<int>(header.size()) == n + 1) {
        header.erase(header.begin());
    } else if (static_cast<int>(header.size()) != n) {
        throw DataError("adjacency header has " + std::to_string(header.size()) +
                        " columns, expected " + std::to_string(n) + " location names");
    }
    std::set<std::string> want(locations.begin(), locations.end());
    for (const auto& name : header) {
        if (!want.count(name)) {
            throw DataError("adjacency header names unknown location '" + name + "'");
        }
    }
    if (std::set<std::string>(header.begin(), header.end()).size() != header.size()) {
        throw DataError("duplicate location name in adjacency header");
    }
    if (static_cast<int>(lines.size()) != n + 1) {
        throw DataError("adjacency has " + std::to_string(lines.size() - 1) + " rows, expected " +
                        std::to_string(n));
    }
    // Map file order onto the dataset's location order.
    std::vector<int> col_of(n);
    for (int j = 0; j < n; ++j) {
        col_of[j] = static_cast<int>(
            std::find(locations.begin(), locations.end(), header[j]) - locations.begin());
    }
    Tensor raw(n, n);
    std::set<std::string> seen_rows;
    for (int r = 0; r < n; ++r) {
        const int row_no = r + 2;
        const auto cells = split_csv_line(lines[r + 1]);
        if (static_cast<int>(cells.size()) != n + 1) {
            throw DataError("adjacency row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(n + 1));
        }
        const std::string& name = cells[0];
        if (!want.count(name)) {
            throw DataError("adjacency row " + std::to_string(row_no) +
                            " names unknown location '" + name + "'");
        }
        if (!seen_rows.insert(name).second) {
            throw DataError("duplicate adjacency row for location '" + name + "'");
        }
        const int i = static_cast<int>(
            std::find(locations.begin(), locations.end(), name) - locations.begin());
        for (int j = 0; j < n; ++j) {
            raw(i, col_of[j]) = parse_number(cells[j + 1], row_no, j + 2, "adjacency entry");
        }
    }
    return make_adjacency(locations, std::move(raw));
}

std::string adjacency_to_csv(const AdjacencyMatrix& adj) {
    std::string out = "location";
    for (const auto& loc : adj.locations) {
        out += ',';
        out += loc;
    }
    out += '\n';
    const int n = static_cast<int>(adj.locations.size());
    for (int i = 0; i < n; ++i) {
        out += adj.locations[i];
        for (int j = 0; j < n; ++j) {
            out += ',';
            out += format_double(adj.raw(i, j));
        }
        out += '\n';
    }
    return out;
}

void write_adjacency(const AdjacencyMatrix& adj, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << adjacency_to_csv(adj);
}

namespace {

EpiDataset slice_weeks(const EpiDataset& ds, int begin, int end) {
    EpiDataset out;
    out.locations = ds.locations;
    out.weeks.assign(ds.weeks.begin() + begin, ds.weeks.begin() + end);
    out.values = ds.values.slice_cols(begin, end);
    return out;
}

}  // namespace

Splits split_by_time(const EpiDataset& ds, const SplitRatios& ratios) {
    const double total = ratios.train + ratios.val + ratios.test;
    if (std::fabs(total - 1.0) > 1e-9 || ratios.train < 0 || ratios.val < 0 || ratios.test < 0) {
        throw ConfigError("split ratios must be nonnegative and sum to 1");
    }
    const int T = ds.num_weeks();
    // The 1e-9 nudge realizes exact mathematical floor for ratios like 0.7
    // that are not binary-representable.
    const int b1 = static_cast<int>(std::floor(T * ratios.train + 1e-9));
    const int b2 = static_cast<int>(std::floor(T * (ratios.train + ratios.val) + 1e-9));
    Splits s;
    s.train_end = b1;
    s.val_end = b2;
    s.train = slice_weeks(ds, 0, b1);
    s.val = slice_weeks(ds, b1, b2);
    s.test = slice_weeks(ds, b2, T);
    return s;
}

double Normalizer::apply_one(int loc, double v) const {
    const double range = max[loc] - min[loc];
    if (range == 0.0) return 0.0;
    return (v - min[loc]) / range;
}

double Normalizer::invert_one(int loc, double v) const {
    const double range = max[loc] - min[loc];
    if (range == 0.0) return min[loc];
    return v * range + min[loc];
}

Tensor Normalizer::apply(const Tensor& values) const {
    Tensor out = values;
    for (int i = 0; i < values.rows(); ++i) {
        for (int j = 0; j < values.cols(); ++j) out(i, j) = apply_one(i, values(i, j));
    }
    return out;
}

Tensor Normalizer::invert(const Tensor& values) const {
    Tensor out = values;
    for (int i = 0; i < values.rows(); ++i) {
        for (int j = 0; j < values.cols(); ++j) out(i, j) = invert_one(i, values(i, j));
    }
    return out;
}

Normalizer fit_normalizer(const EpiDataset& train) {
    if (train.num_weeks() < 1) {
        throw DataError("cannot fit normalizer on an empty split");
    }
    Normalizer norm;
    const int n = train.num_locations();
    norm.min.resize(n);
    norm.max.resize(n);
    for (int i = 0; i < n; ++i) {
        double lo = train.values(i, 0), hi = train.values(i, 0);
        for (int t = 1; t < train.num_weeks(); ++t) {
            lo = std::min(lo, train.values(i, t));
            hi = std::max(hi, train.values(i, t));
        }
        norm.min[i] = lo;
        norm.max[i] = hi;
    }
    return norm;
}

EpiDataset apply_normalizer(const Normalizer& norm, const EpiDataset& ds) {
    EpiDataset out = ds;
    out.values = norm.apply(ds.values);
    return out;
}

WindowSet make_windows(const EpiDataset& ds, int window, int horizon,
                       const std::string& split_name) {
    if (window < 1 || horizon < 1) {
        throw ConfigError("window and horizon must be at least 1");
    }
    const int T = ds.num_weeks();
    if (T < window + horizon) {
        const std::string where = split_name.empty() ? "series" : split_name + " split";
        throw DataError("cannot window " + where + ": length " + std::to_string(T) +
                        " is below W+h = " + std::to_string(window + horizon));
    }
    WindowSet ws;
    ws.window = window;
    ws.horizon = horizon;
    const int count = T - window - horizon + 1;
    ws.samples.reserve(count);
    for (int s = 0; s < count; ++s) {
        WindowSample sample;
        sample.input = ds.values.slice_cols(s, s + window);
        sample.target = ds.values.col(s + window + horizon - 1);
        sample.window_start = s;
        sample.target_week = s + window + horizon - 1;
        ws.samples.push_back(std::move(sample));
    }
    return ws;
}

}  // namespace colagnn
