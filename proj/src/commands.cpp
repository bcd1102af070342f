#include "colagnn/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "colagnn/baselines.hpp"
#include "colagnn/checkpoint.hpp"
#include "colagnn/errors.hpp"
#include "colagnn/metrics.hpp"
#include "json.hpp"

namespace colagnn {

namespace {

using json = nlohmann::json;

constexpr int kArmaQ = 2;

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

void ensure_outdir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

Tensor window_slice(const Tensor& values, int start, int width) {
    Tensor out(values.rows(), width, 0.0);
    for (int i = 0; i < values.rows(); ++i)
        for (int t = 0; t < width; ++t) out(i, t) = values(i, start + t);
    return out;
}

std::string real_matrix_csv(const std::vector<std::string>& locations, const Tensor& m) {
    std::string out = "location";
    for (const std::string& name : locations) out += "," + name;
    out += "\n";
    for (int i = 0; i < m.rows(); ++i) {
        out += locations[static_cast<size_t>(i)];
        for (int j = 0; j < m.cols(); ++j) out += "," + format_double(m(i, j));
        out += "\n";
    }
    return out;
}

void write_snapshot(const RunConfig& cfg, const LoadedData& data) {
    write_text(join_path(cfg.out_dir, "config.resolved.ini"),
               resolved_snapshot(cfg, data.series_hash, data.adjacency_hash));
}

json metric_entry(const std::vector<std::optional<double>>& per_seed) {
    json arr = json::array();
    std::vector<double> present;
    for (const auto& v : per_seed) {
        if (v.has_value()) {
            arr.push_back(*v);
            present.push_back(*v);
        } else {
            arr.push_back(nullptr);
        }
    }
    json out;
    out["per_seed"] = arr;
    if (present.empty()) {
        out["mean"] = nullptr;
        out["sd"] = nullptr;
    } else {
        const MetricSummary s = summarize(present);
        out["mean"] = s.mean;
        out["sd"] = s.sd;
    }
    return out;
}

json cell_from_outcomes(const std::vector<TrialOutcome>& outcomes) {
    std::vector<std::optional<double>> r, m, p;
    for (const TrialOutcome& o : outcomes) {
        r.emplace_back(o.rmse);
        m.emplace_back(o.mae);
        p.push_back(o.pcc);
    }
    json cell;
    cell["rmse"] = metric_entry(r);
    cell["mae"] = metric_entry(m);
    cell["pcc"] = metric_entry(p);
    return cell;
}

json cell_from_eval(const EvalResult& ev) {
    json cell;
    cell["rmse"] = metric_entry({ev.rmse});
    cell["mae"] = metric_entry({ev.mae});
    cell["pcc"] = metric_entry({ev.pcc});
    return cell;
}

LinearVariant variant_from_name(const std::string& method) {
    if (method == "gar") return LinearVariant::Gar;
    if (method == "ar") return LinearVariant::Ar;
    return LinearVariant::Var;
}

// One (method, horizon) cell of the benchmark grid. `mc_override` lets the
// sweep substitute a modified model config.
json benchmark_cell(const RunConfig& cfg, const LoadedData& d, const std::string& method,
                    int horizon, const ColaGnnConfig* mc_override) {
    const int w = cfg.window;
    const int n = d.ds.num_locations();
    const WindowSet train_ws = make_windows(d.train_n, w, horizon, "train");
    const WindowSet val_ws = make_windows(d.val_n, w, horizon, "val");
    const WindowSet test_ws = make_windows(d.test_n, w, horizon, "test");

    json cell;
    if (method == "cola-gnn") {
        const ColaGnnConfig mc = mc_override ? *mc_override : model_config_for_run(cfg);
        auto factory = [&]() -> std::unique_ptr<ForecastModel> {
            return std::make_unique<ColaGnnModel>(mc, n, w, d.adj.normalized);
        };
        const auto outcomes =
            run_trials(factory, train_ws, val_ws, test_ws, d.norm, cfg.train, cfg.train.trials);
        cell = cell_from_outcomes(outcomes);
        cell["params"] = colagnn_param_count(mc, n, w);
    } else if (method == "rnn") {
        const ColaGnnConfig mc = mc_override ? *mc_override : model_config_for_run(cfg);
        auto factory = [&]() -> std::unique_ptr<ForecastModel> {
            return std::make_unique<RnnBaselineModel>(n, w, mc.hidden, mc.dropout);
        };
        const auto outcomes =
            run_trials(factory, train_ws, val_ws, test_ws, d.norm, cfg.train, cfg.train.trials);
        cell = cell_from_outcomes(outcomes);
        cell["params"] = RnnBaselineModel(n, w, mc.hidden, mc.dropout).param_count();
    } else if (method == "arma") {
        const ArmaModel arma = fit_arma(d.train_n.values, w, kArmaQ, horizon);
        const Tensor& test_series = d.test_n.values;
        const EvalResult ev = evaluate(
            [&](const WindowSample& s) { return arma.predict_at(test_series, s.window_start); },
            test_ws, d.norm);
        cell = cell_from_eval(ev);
        cell["params"] = arma.param_count();
    } else {
        const DirectLinearModel lin = fit_direct_linear(train_ws, variant_from_name(method));
        const EvalResult ev = evaluate(
            [&](const WindowSample& s) { return lin.predict(s.input); }, test_ws, d.norm);
        cell = cell_from_eval(ev);
        cell["params"] = lin.param_count();
    }
    return cell;
}

std::string describe_mean(const json& cell, const char* metric) {
    const json& m = cell.at(metric).at("mean");
    return m.is_null() ? std::string("-") : format_double(m.get<double>());
}

}  // namespace

LoadedData load_pipeline(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.series_path.empty())
        throw ConfigError("no series file configured; set [data] series or pass --data");
    LoadedData d;
    d.ds = load_series(cfg.series_path);
    d.series_hash = fnv1a64_hex(read_file_bytes(cfg.series_path));
    if (cfg.adjacency_path.empty()) {
        d.adj = make_adjacency(d.ds.locations, Tensor::identity(d.ds.num_locations()));
    } else {
        d.adj = load_adjacency(cfg.adjacency_path, d.ds.locations);
    }
    d.adjacency_hash = fnv1a64_hex(cfg.adjacency_path.empty()
                                       ? adjacency_to_csv(d.adj)
                                       : read_file_bytes(cfg.adjacency_path));
    d.splits = split_by_time(d.ds);
    d.norm = fit_normalizer(cfg.normalization == "global" ? d.ds : d.splits.train);
    d.train_n = apply_normalizer(d.norm, d.splits.train);
    d.val_n = apply_normalizer(d.norm, d.splits.val);
    d.test_n = apply_normalizer(d.norm, d.splits.test);
    return d;
}

void cmd_train(const RunConfig& cfg) {
    const LoadedData d = load_pipeline(cfg);
    ensure_outdir(cfg.out_dir);
    write_snapshot(cfg, d);

    const int h = cfg.horizon;
    const int w = cfg.window;
    const int n = d.ds.num_locations();
    const WindowSet train_ws = make_windows(d.train_n, w, h, "train");
    const WindowSet val_ws = make_windows(d.val_n, w, h, "val");
    const std::string stem = cfg.method + "-h" + std::to_string(h);
    const std::string ckpt_path = join_path(cfg.out_dir, stem + ".json");

    if (cfg.method == "cola-gnn") {
        ColaGnnModel model(model_config_for_run(cfg), n, w, d.adj.normalized);
        std::ofstream log(join_path(cfg.out_dir, stem + ".log"));
        if (!log) throw ConfigError("cannot write training log in '" + cfg.out_dir + "'");
        const TrainReport r = train_model(model, train_ws, val_ws, cfg.train, &log);
        save_colagnn_checkpoint(ckpt_path, model, d.norm, d.adj.raw, d.ds.locations, h);
        std::cout << "wrote " << ckpt_path << " (best epoch " << r.best_epoch << ", val L1 "
                  << format_double(r.best_val_loss) << ")\n";
    } else if (cfg.method == "rnn") {
        std::ofstream log(join_path(cfg.out_dir, stem + ".log"));
        if (!log) throw ConfigError("cannot write training log in '" + cfg.out_dir + "'");
        const ColaGnnConfig mc = cfg.model.resolved(w);
        RnnBaselineFit fit =
            fit_rnn_baseline(train_ws, val_ws, mc.hidden, mc.dropout, cfg.train, &log);
        save_rnn_checkpoint(ckpt_path, *fit.model, d.norm, d.ds.locations, h, w, mc.dropout);
        std::cout << "wrote " << ckpt_path << " (best epoch " << fit.report.best_epoch
                  << ", val L1 " << format_double(fit.report.best_val_loss) << ")\n";
    } else if (cfg.method == "arma") {
        const ArmaModel arma = fit_arma(d.train_n.values, w, kArmaQ, h);
        save_arma_checkpoint(ckpt_path, arma, d.norm, d.ds.locations);
        std::cout << "wrote " << ckpt_path << "\n";
    } else {
        const DirectLinearModel lin = fit_direct_linear(train_ws, variant_from_name(cfg.method));
        save_linear_checkpoint(ckpt_path, lin, d.norm, d.ds.locations, h);
        std::cout << "wrote " << ckpt_path << "\n";
    }
}

void cmd_benchmark(const RunConfig& cfg) {
    const LoadedData d = load_pipeline(cfg);
    ensure_outdir(cfg.out_dir);
    write_snapshot(cfg, d);

    json doc;
    doc["format"] = "colagnn-metrics-v1";
    for (const std::string& method : cfg.methods) {
        for (int h : cfg.horizons) {
            json cell;
            try {
                cell = benchmark_cell(cfg, d, method, h, nullptr);
                std::cout << method << " h=" << h << " rmse " << describe_mean(cell, "rmse")
                          << " pcc " << describe_mean(cell, "pcc") << "\n";
            } catch (const std::exception& e) {
                cell = json{{"error", e.what()}};
                std::cout << method << " h=" << h << " failed: " << e.what() << "\n";
            }
            doc[method][std::to_string(h)] = cell;
        }
    }
    const std::string path = join_path(cfg.out_dir, "metrics.json");
    write_text(path, doc.dump(2) + "\n");
    std::cout << "wrote " << path << "\n";
}

namespace {

struct LoadedCheckpoint {
    Checkpoint ckpt;
    std::unique_ptr<ColaGnnModel> colagnn;
    std::unique_ptr<RnnBaselineModel> rnn;
    DirectLinearModel linear;
    ArmaModel arma;
};

LoadedCheckpoint open_checkpoint(const std::string& path) {
    LoadedCheckpoint lc;
    lc.ckpt = load_checkpoint(path);
    const std::string& m = lc.ckpt.method;
    if (m == "cola-gnn") lc.colagnn = restore_colagnn(lc.ckpt);
    else if (m == "rnn") lc.rnn = restore_rnn(lc.ckpt);
    else if (m == "arma") lc.arma = restore_arma(lc.ckpt);
    else lc.linear = restore_linear(lc.ckpt);
    return lc;
}

Tensor checkpoint_predict(LoadedCheckpoint& lc, const Tensor& series_norm, int window_start) {
    const int w = lc.ckpt.window;
    const Tensor input = window_slice(series_norm, window_start, w);
    if (lc.colagnn || lc.rnn) {
        WindowSample sample;
        sample.input = input;
        sample.target = Tensor::zeros(input.rows(), 1);
        sample.window_start = window_start;
        return lc.colagnn ? lc.colagnn->predict(sample) : lc.rnn->predict(sample);
    }
    if (lc.ckpt.method == "arma") return lc.arma.predict_at(series_norm, window_start);
    return lc.linear.predict(input);
}

void append_prediction_rows(std::string& out, const EpiDataset& ds, const Checkpoint& ckpt,
                            const Tensor& pred_norm, int target_idx) {
    const int t_len = ds.num_weeks();
    for (int i = 0; i < pred_norm.rows(); ++i) {
        const std::string week =
            target_idx < t_len ? ds.weeks[static_cast<size_t>(target_idx)]
                               : "t+" + std::to_string(target_idx - t_len + 1);
        const double y_pred = std::max(0.0, ckpt.normalizer.invert_one(i, pred_norm(i, 0)));
        out += week + "," + ds.locations[static_cast<size_t>(i)] + ",";
        if (target_idx < t_len) out += format_double(ds.values(i, target_idx));
        out += "," + format_double(y_pred) + "\n";
    }
}

}  // namespace

void cmd_predict(const RunConfig& cfg, const std::vector<std::string>& checkpoint_paths) {
    if (checkpoint_paths.empty())
        throw ConfigError("predict needs at least one checkpoint path");
    if (cfg.series_path.empty())
        throw ConfigError("no series file configured; set [data] series or pass --data");
    const EpiDataset ds = load_series(cfg.series_path);

    std::vector<LoadedCheckpoint> loaded;
    for (const std::string& path : checkpoint_paths) {
        LoadedCheckpoint lc = open_checkpoint(path);
        if (lc.ckpt.locations != ds.locations)
            throw DataError("checkpoint '" + path +
                            "' was trained on different locations than the series");
        if (ds.num_weeks() < lc.ckpt.window)
            throw DataError("series has " + std::to_string(ds.num_weeks()) +
                            " weeks, checkpoint window needs " + std::to_string(lc.ckpt.window));
        loaded.push_back(std::move(lc));
    }

    ensure_outdir(cfg.out_dir);
    std::string out = "week,location,y_true,y_pred\n";

    if (loaded.size() == 1) {
        LoadedCheckpoint& lc = loaded.front();
        const Tensor series_norm = lc.ckpt.normalizer.apply(ds.values);
        const int w = lc.ckpt.window;
        for (int s = 0; s + w <= ds.num_weeks(); ++s) {
            const Tensor pred = checkpoint_predict(lc, series_norm, s);
            append_prediction_rows(out, ds, lc.ckpt, pred, s + w + lc.ckpt.horizon - 1);
        }
    } else {
        // Fixed final window, one row group per horizon across checkpoints.
        std::sort(loaded.begin(), loaded.end(), [](const auto& a, const auto& b) {
            return a.ckpt.horizon < b.ckpt.horizon;
        });
        for (LoadedCheckpoint& lc : loaded) {
            const Tensor series_norm = lc.ckpt.normalizer.apply(ds.values);
            const int s = ds.num_weeks() - lc.ckpt.window;
            const Tensor pred = checkpoint_predict(lc, series_norm, s);
            append_prediction_rows(out, ds, lc.ckpt, pred,
                                   s + lc.ckpt.window + lc.ckpt.horizon - 1);
        }
    }

    const std::string path = join_path(cfg.out_dir, "predictions.csv");
    write_text(path, out);
    std::cout << "wrote " << path << "\n";
}

void cmd_export_attention(const RunConfig& cfg, const std::string& checkpoint_path,
                          int window_start) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    if (ckpt.method != "cola-gnn")
        throw ConfigError("attention export needs a cola-gnn checkpoint; '" + ckpt.method +
                          "' has none");
    if (!ckpt.config.use_location_attention)
        throw ConfigError(
            "this checkpoint was trained with the no-loc ablation and has no attention to "
            "export");
    if (cfg.series_path.empty())
        throw ConfigError("no series file configured; set [data] series or pass --data");
    const EpiDataset ds = load_series(cfg.series_path);
    if (ckpt.locations != ds.locations)
        throw DataError("checkpoint locations do not match the series");
    const int w = ckpt.window;
    if (ds.num_weeks() < w)
        throw DataError("series has " + std::to_string(ds.num_weeks()) +
                        " weeks, the window needs " + std::to_string(w));
    int s = window_start;
    if (s < 0) s = ds.num_weeks() - w;
    if (s > ds.num_weeks() - w)
        throw DataError("window start " + std::to_string(s) + " exceeds the last window " +
                        std::to_string(ds.num_weeks() - w));

    std::unique_ptr<ColaGnnModel> model = restore_colagnn(ckpt);
    const Tensor series_norm = ckpt.normalizer.apply(ds.values);
    WindowSample sample;
    sample.input = window_slice(series_norm, s, w);
    sample.target = Tensor::zeros(ds.num_locations(), 1);
    sample.window_start = s;

    Tape tape;
    model->bind(tape);
    AttentionMatrix attn;
    model->forward(tape, sample, RunMode::Eval, nullptr, &attn);

    ensure_outdir(cfg.out_dir);
    write_text(join_path(cfg.out_dir, "attention-a.csv"),
               real_matrix_csv(ds.locations, attn.raw));
    write_text(join_path(cfg.out_dir, "attention-gate.csv"),
               real_matrix_csv(ds.locations, attn.gate));
    write_text(join_path(cfg.out_dir, "attention-fused.csv"),
               real_matrix_csv(ds.locations, attn.fused));
    write_text(join_path(cfg.out_dir, "attention-geo.csv"),
               real_matrix_csv(ds.locations, model->adjacency_normalized()));
    std::cout << "wrote attention-{a,gate,fused,geo}.csv to " << cfg.out_dir << " (window start "
              << s << ")\n";
}

void cmd_sweep(const RunConfig& cfg) {
    if (cfg.sweep_param != "window" && cfg.sweep_param != "graph-dim")
        throw ConfigError("--param must be 'window' or 'graph-dim', got '" + cfg.sweep_param +
                          "'");
    if (cfg.sweep_values.empty()) throw ConfigError("--values is empty");
    for (int v : cfg.sweep_values) {
        if (cfg.sweep_param == "window" && (v < 10 || v > 50 || v % 5 != 0))
            throw ConfigError("window sweep accepts 10..50 in steps of 5, got " +
                              std::to_string(v));
        if (cfg.sweep_param == "graph-dim" && (v < 1 || v > 15))
            throw ConfigError("graph-dim sweep accepts 1..15, got " + std::to_string(v));
    }

    const LoadedData d = load_pipeline(cfg);
    ensure_outdir(cfg.out_dir);
    write_snapshot(cfg, d);

    json doc;
    doc["format"] = "colagnn-sweep-v1";
    doc["param"] = cfg.sweep_param;
    doc["method"] = cfg.method;
    doc["horizon"] = cfg.horizon;
    for (int v : cfg.sweep_values) {
        RunConfig run = cfg;
        std::optional<ColaGnnConfig> mc;
        if (cfg.sweep_param == "window") {
            run.window = v;
        } else {
            ColaGnnConfig m = model_config_for_run(cfg).resolved(cfg.window);
            m.graph_widths.back() = v;
            mc = m;
        }
        json cell;
        try {
            cell = benchmark_cell(run, d, run.method, run.horizon, mc ? &*mc : nullptr);
            std::cout << cfg.sweep_param << "=" << v << " rmse " << describe_mean(cell, "rmse")
                      << "\n";
        } catch (const std::exception& e) {
            cell = json{{"error", e.what()}};
            std::cout << cfg.sweep_param << "=" << v << " failed: " << e.what() << "\n";
        }
        doc["results"][std::to_string(v)] = cell;
    }
    const std::string path = join_path(cfg.out_dir, "sweep.json");
    write_text(path, doc.dump(2) + "\n");
    std::cout << "wrote " << path << "\n";
}

void cmd_dump(const RunConfig& cfg) {
    if (cfg.series_path.empty())
        throw ConfigError("no series file configured; set [data] series or pass --data");
    const EpiDataset ds = load_series(cfg.series_path);
    ensure_outdir(cfg.out_dir);
    write_series(ds, join_path(cfg.out_dir, "series.canonical.csv"));
    std::cout << "series: " << ds.num_locations() << " locations x " << ds.num_weeks()
              << " weeks, hash " << fnv1a64_hex(series_to_csv(ds)) << "\n";
    if (!cfg.adjacency_path.empty()) {
        const AdjacencyMatrix adj = load_adjacency(cfg.adjacency_path, ds.locations);
        write_adjacency(adj, join_path(cfg.out_dir, "adjacency.canonical.csv"));
        std::cout << "adjacency: hash " << fnv1a64_hex(adjacency_to_csv(adj)) << "\n";
    }
}

void cmd_synth(const SynthConfig& synth, const RunConfig& cfg) {
    const SynthData sd = make_synthetic(synth);
    ensure_outdir(cfg.out_dir);
    const std::string series_path = join_path(cfg.out_dir, "series.csv");
    const std::string adj_path = join_path(cfg.out_dir, "adjacency.csv");
    write_series(sd.series, series_path);
    write_adjacency(sd.adjacency, adj_path);
    std::cout << "wrote " << series_path << " (" << sd.series.num_locations() << " locations x "
              << sd.series.num_weeks() << " weeks) and " << adj_path << "\n";
}

}  // namespace colagnn
