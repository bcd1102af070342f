#include "colagnn/checkpoint.hpp"

#include <fstream>

#include "colagnn/errors.hpp"
#include "json.hpp"

namespace colagnn {

namespace {

using json = nlohmann::json;

constexpr const char* kFormatTag = "colagnn-checkpoint-v1";

json tensor_to_json(const Tensor& t) {
    json j;
    j["rows"] = t.rows();
    j["cols"] = t.cols();
    std::vector<double> data;
    data.reserve(static_cast<size_t>(t.rows()) * t.cols());
    for (int i = 0; i < t.rows(); ++i)
        for (int c = 0; c < t.cols(); ++c) data.push_back(t(i, c));
    j["data"] = data;
    return j;
}

Tensor tensor_from_json(const json& j, const std::string& name) {
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    const std::vector<double> data = j.at("data").get<std::vector<double>>();
    if (rows < 1 || cols < 1 || data.size() != static_cast<size_t>(rows) * cols)
        throw DataError("checkpoint tensor '" + name + "' has inconsistent shape");
    Tensor t(rows, cols, 0.0);
    size_t k = 0;
    for (int i = 0; i < rows; ++i)
        for (int c = 0; c < cols; ++c) t(i, c) = data[k++];
    return t;
}

Tensor row_tensor(const std::vector<double>& values) {
    Tensor t(1, static_cast<int>(values.size()), 0.0);
    for (size_t i = 0; i < values.size(); ++i) t(0, static_cast<int>(i)) = values[i];
    return t;
}

std::vector<double> row_values(const Tensor& t, const std::string& name) {
    if (t.rows() != 1) throw DataError("checkpoint block '" + name + "' must be a single row");
    std::vector<double> out(static_cast<size_t>(t.cols()));
    for (int j = 0; j < t.cols(); ++j) out[static_cast<size_t>(j)] = t(0, j);
    return out;
}

json base_document(const std::string& method, const Normalizer& norm,
                   const std::vector<std::string>& locations, int horizon, int window) {
    json j;
    j["format"] = kFormatTag;
    j["method"] = method;
    j["horizon"] = horizon;
    j["window"] = window;
    j["locations"] = locations;
    j["normalizer"] = {{"min", norm.min}, {"max", norm.max}};
    j["params"] = json::object();
    return j;
}

void write_document(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw DataError("failed writing checkpoint to '" + path + "'");
}

json config_to_json(const ColaGnnConfig& c) {
    json j;
    j["hidden"] = c.hidden;
    j["attention_dim"] = c.attention_dim;
    j["filters"] = c.filters;
    j["filter_len"] = c.filter_len;
    j["graph_layers"] = c.graph_layers;
    j["graph_widths"] = c.graph_widths;
    j["norm_order"] = c.norm_order;
    j["norm_eps"] = c.norm_eps;
    j["dropout"] = c.dropout;
    j["use_temporal_conv"] = c.use_temporal_conv;
    j["use_location_attention"] = c.use_location_attention;
    return j;
}

ColaGnnConfig config_from_json(const json& j) {
    ColaGnnConfig c;
    c.hidden = j.at("hidden").get<int>();
    c.attention_dim = j.at("attention_dim").get<int>();
    c.filters = j.at("filters").get<int>();
    c.filter_len = j.at("filter_len").get<int>();
    c.graph_layers = j.at("graph_layers").get<int>();
    c.graph_widths = j.at("graph_widths").get<std::vector<int>>();
    c.norm_order = j.at("norm_order").get<double>();
    c.norm_eps = j.at("norm_eps").get<double>();
    c.dropout = j.at("dropout").get<double>();
    c.use_temporal_conv = j.at("use_temporal_conv").get<bool>();
    c.use_location_attention = j.at("use_location_attention").get<bool>();
    return c;
}

}  // namespace

void save_colagnn_checkpoint(const std::string& path, ColaGnnModel& model, const Normalizer& norm,
                             const Tensor& adjacency_raw,
                             const std::vector<std::string>& locations, int horizon) {
    json j = base_document("cola-gnn", norm, locations, horizon, model.window());
    j["config"] = config_to_json(model.config());
    j["adjacency"] = json::array();
    for (int i = 0; i < adjacency_raw.rows(); ++i) {
        json row = json::array();
        for (int c = 0; c < adjacency_raw.cols(); ++c) row.push_back(adjacency_raw(i, c));
        j["adjacency"].push_back(row);
    }
    for (const ParamRef& p : model.params()) j["params"][p.name] = tensor_to_json(*p.tensor);
    write_document(path, j);
}

void save_linear_checkpoint(const std::string& path, const DirectLinearModel& model,
                            const Normalizer& norm, const std::vector<std::string>& locations,
                            int horizon) {
    json j = base_document(variant_name(model.variant), norm, locations, horizon, model.window);
    if (model.variant == LinearVariant::Gar) {
        j["params"]["gar.coef"] = tensor_to_json(row_tensor(model.coef.front()));
    } else {
        for (size_t i = 0; i < model.coef.size(); ++i)
            j["params"][std::string(variant_name(model.variant)) + ".l" + std::to_string(i) +
                        ".coef"] = tensor_to_json(row_tensor(model.coef[i]));
    }
    write_document(path, j);
}

void save_arma_checkpoint(const std::string& path, const ArmaModel& model, const Normalizer& norm,
                          const std::vector<std::string>& locations) {
    json j = base_document("arma", norm, locations, model.horizon, model.window);
    j["q"] = model.q;
    for (size_t i = 0; i < model.coef.size(); ++i) {
        j["params"]["arma.l" + std::to_string(i) + ".ar"] =
            tensor_to_json(row_tensor(model.long_ar[i]));
        j["params"]["arma.l" + std::to_string(i) + ".coef"] =
            tensor_to_json(row_tensor(model.coef[i]));
    }
    write_document(path, j);
}

void save_rnn_checkpoint(const std::string& path, RnnBaselineModel& model, const Normalizer& norm,
                         const std::vector<std::string>& locations, int horizon, int window,
                         double dropout) {
    json j = base_document("rnn", norm, locations, horizon, window);
    j["hidden"] = model.hidden();
    j["dropout"] = dropout;
    for (const ParamRef& p : model.params()) j["params"][p.name] = tensor_to_json(*p.tensor);
    write_document(path, j);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kFormatTag)
            throw DataError("checkpoint '" + path + "' has an unknown format tag");
        Checkpoint c;
        c.method = j.at("method").get<std::string>();
        c.horizon = j.at("horizon").get<int>();
        c.window = j.at("window").get<int>();
        c.locations = j.at("locations").get<std::vector<std::string>>();
        c.normalizer.min = j.at("normalizer").at("min").get<std::vector<double>>();
        c.normalizer.max = j.at("normalizer").at("max").get<std::vector<double>>();
        for (const auto& [name, value] : j.at("params").items())
            c.tensors.emplace(name, tensor_from_json(value, name));
        if (c.method == "cola-gnn") {
            c.config = config_from_json(j.at("config"));
            const auto& adj = j.at("adjacency");
            const int n = static_cast<int>(adj.size());
            c.adjacency_raw = Tensor::zeros(n, n);
            for (int i = 0; i < n; ++i) {
                const auto& row = adj.at(static_cast<size_t>(i));
                if (static_cast<int>(row.size()) != n)
                    throw DataError("checkpoint adjacency is not square");
                for (int k = 0; k < n; ++k) c.adjacency_raw(i, k) = row.at(static_cast<size_t>(k)).get<double>();
            }
        }
        if (c.method == "rnn") {
            c.hidden = j.at("hidden").get<int>();
            c.dropout = j.at("dropout").get<double>();
        }
        if (c.method == "arma") c.arma_q = j.at("q").get<int>();
        return c;
    } catch (const json::exception& e) {
        throw DataError("checkpoint '" + path + "' is missing fields: " + e.what());
    }
}

std::unique_ptr<ColaGnnModel> restore_colagnn(const Checkpoint& ckpt) {
    if (ckpt.method != "cola-gnn")
        throw DataError("checkpoint method is '" + ckpt.method + "', expected cola-gnn");
    const int n = static_cast<int>(ckpt.locations.size());
    AdjacencyMatrix adj = make_adjacency(ckpt.locations, ckpt.adjacency_raw);
    auto model = std::make_unique<ColaGnnModel>(ckpt.config, n, ckpt.window, adj.normalized);
    for (const ParamRef& p : model->params()) {
        auto it = ckpt.tensors.find(p.name);
        if (it == ckpt.tensors.end())
            throw DataError("checkpoint is missing parameter '" + p.name + "'");
        if (!it->second.same_shape(*p.tensor))
            throw DataError("checkpoint parameter '" + p.name + "' is " +
                            shape_str(it->second) + ", expected " + shape_str(*p.tensor));
        *p.tensor = it->second;
    }
    return model;
}

DirectLinearModel restore_linear(const Checkpoint& ckpt) {
    DirectLinearModel m;
    if (ckpt.method == "gar") m.variant = LinearVariant::Gar;
    else if (ckpt.method == "ar") m.variant = LinearVariant::Ar;
    else if (ckpt.method == "var") m.variant = LinearVariant::Var;
    else throw DataError("checkpoint method is '" + ckpt.method + "', expected gar/ar/var");
    m.window = ckpt.window;
    m.n_locations = static_cast<int>(ckpt.locations.size());
    const int f = m.variant == LinearVariant::Var ? m.n_locations * m.window + 1 : m.window + 1;
    auto fetch = [&](const std::string& name) {
        auto it = ckpt.tensors.find(name);
        if (it == ckpt.tensors.end())
            throw DataError("checkpoint is missing block '" + name + "'");
        std::vector<double> v = row_values(it->second, name);
        if (static_cast<int>(v.size()) != f)
            throw DataError("checkpoint block '" + name + "' has " + std::to_string(v.size()) +
                            " coefficients, expected " + std::to_string(f));
        return v;
    };
    if (m.variant == LinearVariant::Gar) {
        m.coef.push_back(fetch("gar.coef"));
    } else {
        for (int i = 0; i < m.n_locations; ++i)
            m.coef.push_back(fetch(std::string(variant_name(m.variant)) + ".l" +
                                   std::to_string(i) + ".coef"));
    }
    return m;
}

ArmaModel restore_arma(const Checkpoint& ckpt) {
    if (ckpt.method != "arma")
        throw DataError("checkpoint method is '" + ckpt.method + "', expected arma");
    ArmaModel m;
    m.window = ckpt.window;
    m.q = ckpt.arma_q;
    m.horizon = ckpt.horizon;
    m.n_locations = static_cast<int>(ckpt.locations.size());
    for (int i = 0; i < m.n_locations; ++i) {
        const std::string ar_name = "arma.l" + std::to_string(i) + ".ar";
        const std::string coef_name = "arma.l" + std::to_string(i) + ".coef";
        auto ar_it = ckpt.tensors.find(ar_name);
        auto coef_it = ckpt.tensors.find(coef_name);
        if (ar_it == ckpt.tensors.end() || coef_it == ckpt.tensors.end())
            throw DataError("checkpoint is missing arma blocks for location " + std::to_string(i));
        m.long_ar.push_back(row_values(ar_it->second, ar_name));
        m.coef.push_back(row_values(coef_it->second, coef_name));
    }
    return m;
}

std::unique_ptr<RnnBaselineModel> restore_rnn(const Checkpoint& ckpt) {
    if (ckpt.method != "rnn")
        throw DataError("checkpoint method is '" + ckpt.method + "', expected rnn");
    auto model = std::make_unique<RnnBaselineModel>(static_cast<int>(ckpt.locations.size()),
                                                    ckpt.window, ckpt.hidden, ckpt.dropout);
    for (const ParamRef& p : model->params()) {
        auto it = ckpt.tensors.find(p.name);
        if (it == ckpt.tensors.end())
            throw DataError("checkpoint is missing parameter '" + p.name + "'");
        if (!it->second.same_shape(*p.tensor))
            throw DataError("checkpoint parameter '" + p.name + "' is " +
                            shape_str(it->second) + ", expected " + shape_str(*p.tensor));
        *p.tensor = it->second;
    }
    return model;
}

}  // namespace colagnn
