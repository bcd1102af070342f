#include "colagnn/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "colagnn/errors.hpp"

namespace colagnn {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

int parse_int(const std::string& text, const std::string& field) {
    int v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ConfigError(field + ": cannot parse '" + text + "' as an integer");
    return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& field) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ConfigError(field + ": cannot parse '" + text + "' as a nonnegative integer");
    return v;
}

double parse_real(const std::string& text, const std::string& field) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ConfigError(field + ": cannot parse '" + text + "' as a number");
    return v;
}

std::string join_ints(const std::vector<int>& xs) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(xs[i]);
    }
    return out;
}

std::string join_names(const std::vector<std::string>& xs) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += xs[i];
    }
    return out;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text, const std::string& field) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(field + ": empty entry in list '" + text + "'");
        out.push_back(parse_int(item, field));
    }
    if (out.empty()) throw ConfigError(field + ": list is empty");
    return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void RunConfig::validate() const {
    static const std::set<std::string> kMethods = {"cola-gnn", "gar", "ar", "var", "arma", "rnn"};
    static const std::set<std::string> kAblations = {"none", "no-temp", "no-loc"};
    if (normalization != "train" && normalization != "global")
        throw ConfigError("normalization must be 'train' or 'global', got '" + normalization +
                          "'");
    if (window < 1) throw ConfigError("window must be positive");
    if (horizon < 1) throw ConfigError("horizon must be positive");
    if (horizons.empty()) throw ConfigError("horizons list is empty");
    for (int h : horizons)
        if (h < 1) throw ConfigError("horizons must be positive, got " + std::to_string(h));
    if (!kMethods.count(method)) throw ConfigError("unknown method '" + method + "'");
    for (const std::string& m : methods)
        if (!kMethods.count(m)) throw ConfigError("unknown method '" + m + "' in methods list");
    if (methods.empty()) throw ConfigError("methods list is empty");
    if (!kAblations.count(ablation)) throw ConfigError("unknown ablation '" + ablation + "'");
    if (out_dir.empty()) throw ConfigError("output directory is empty");
    train.validate();
    model.resolved(window);  // range checks on the model block
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
    std::stringstream ss(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(where + ": malformed section header '" + t + "'");
            section = t.substr(1, t.size() - 2);
            if (section != "data" && section != "model" && section != "train" &&
                section != "experiment" && section != "inputs")
                throw ConfigError(where + ": unknown section [" + section + "]");
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value', got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (section.empty())
            throw ConfigError(where + ": key '" + key + "' appears before any section");
        const std::string field = "[" + section + "] " + key;
        if (section == "inputs") continue;  // snapshot-only hash block, not a setting
        if (section == "data") {
            if (key == "series") cfg.series_path = value;
            else if (key == "adjacency") cfg.adjacency_path = value;
            else if (key == "normalization") cfg.normalization = value;
            else throw ConfigError(where + ": unknown key '" + key + "' in [data]");
        } else if (section == "model") {
            if (key == "hidden") cfg.model.hidden = parse_int(value, field);
            else if (key == "attention-dim") cfg.model.attention_dim = parse_int(value, field);
            else if (key == "filters") cfg.model.filters = parse_int(value, field);
            else if (key == "filter-len") cfg.model.filter_len = parse_int(value, field);
            else if (key == "graph-layers") cfg.model.graph_layers = parse_int(value, field);
            else if (key == "graph-widths") cfg.model.graph_widths = parse_int_list(value, field);
            else if (key == "norm-order") cfg.model.norm_order = parse_real(value, field);
            else if (key == "norm-eps") cfg.model.norm_eps = parse_real(value, field);
            else if (key == "dropout") cfg.model.dropout = parse_real(value, field);
            else throw ConfigError(where + ": unknown key '" + key + "' in [model]");
        } else if (section == "train") {
            if (key == "lr") cfg.train.lr = parse_real(value, field);
            else if (key == "weight-decay") cfg.train.weight_decay = parse_real(value, field);
            else if (key == "batch-size") cfg.train.batch_size = parse_int(value, field);
            else if (key == "max-epochs") cfg.train.max_epochs = parse_int(value, field);
            else if (key == "patience") cfg.train.patience = parse_int(value, field);
            else if (key == "seed") cfg.train.seed = parse_u64(value, field);
            else if (key == "trials") cfg.train.trials = parse_int(value, field);
            else throw ConfigError(where + ": unknown key '" + key + "' in [train]");
        } else {
            if (key == "window") cfg.window = parse_int(value, field);
            else if (key == "horizon") cfg.horizon = parse_int(value, field);
            else if (key == "horizons") cfg.horizons = parse_int_list(value, field);
            else if (key == "method") cfg.method = value;
            else if (key == "methods") cfg.methods = parse_name_list(value);
            else if (key == "ablation") cfg.ablation = value;
            else if (key == "out") cfg.out_dir = value;
            else throw ConfigError(where + ": unknown key '" + key + "' in [experiment]");
        }
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig cfg;
    apply_config_text(cfg, buf.str(), path);
    return cfg;
}

ColaGnnConfig model_config_for_run(const RunConfig& cfg) {
    ColaGnnConfig m = cfg.model;
    if (cfg.ablation == "no-temp") m.use_temporal_conv = false;
    else if (cfg.ablation == "no-loc") m.use_location_attention = false;
    return m;
}

std::string resolved_snapshot(const RunConfig& cfg, const std::string& series_hash,
                              const std::string& adjacency_hash) {
    const ColaGnnConfig m = model_config_for_run(cfg).resolved(cfg.window);
    std::string s;
    s += "[data]\n";
    s += "series = " + cfg.series_path + "\n";
    s += "adjacency = " + cfg.adjacency_path + "\n";
    s += "normalization = " + cfg.normalization + "\n";
    s += "\n[model]\n";
    s += "hidden = " + std::to_string(m.hidden) + "\n";
    s += "attention-dim = " + std::to_string(m.attention_dim) + "\n";
    s += "filters = " + std::to_string(m.filters) + "\n";
    s += "filter-len = " + std::to_string(m.filter_len) + "\n";
    s += "graph-layers = " + std::to_string(m.graph_layers) + "\n";
    s += "graph-widths = " + join_ints(m.graph_widths) + "\n";
    s += "norm-order = " + format_double(m.norm_order) + "\n";
    s += "norm-eps = " + format_double(m.norm_eps) + "\n";
    s += "dropout = " + format_double(m.dropout) + "\n";
    s += "\n[train]\n";
    s += "lr = " + format_double(cfg.train.lr) + "\n";
    s += "weight-decay = " + format_double(cfg.train.weight_decay) + "\n";
    s += "batch-size = " + std::to_string(cfg.train.batch_size) + "\n";
    s += "max-epochs = " + std::to_string(cfg.train.max_epochs) + "\n";
    s += "patience = " + std::to_string(cfg.train.patience) + "\n";
    s += "seed = " + std::to_string(cfg.train.seed) + "\n";
    s += "trials = " + std::to_string(cfg.train.trials) + "\n";
    s += "\n[experiment]\n";
    s += "window = " + std::to_string(cfg.window) + "\n";
    s += "horizon = " + std::to_string(cfg.horizon) + "\n";
    s += "horizons = " + join_ints(cfg.horizons) + "\n";
    s += "method = " + cfg.method + "\n";
    s += "methods = " + join_names(cfg.methods) + "\n";
    s += "ablation = " + cfg.ablation + "\n";
    s += "out = " + cfg.out_dir + "\n";
    s += "\n[inputs]\n";
    s += "series-hash = " + series_hash + "\n";
    s += "adjacency-hash = " + adjacency_hash + "\n";
    return s;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(bytes);
    std::string out = "fnv1a:";
    for (int shift = 60; shift >= 0; shift -= 4) out += digits[(h >> shift) & 0xf];
    return out;
}

}  // namespace colagnn
