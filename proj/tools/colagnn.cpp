#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "colagnn/commands.hpp"
#include "colagnn/errors.hpp"
#include "colagnn/run_config.hpp"

namespace {

using namespace colagnn;

// Every config field is overridable by a flag; only flags the user actually
// passed are applied on top of the file.
struct FlagBag {
    std::string config_path;
    std::string data, adj, normalization;
    int hidden = 0, attention_dim = 0, filters = 0, filter_len = 0, graph_layers = 0;
    std::string graph_widths;
    double norm_order = 0.0, norm_eps = 0.0, dropout = 0.0;
    double lr = 0.0, weight_decay = 0.0;
    int batch_size = 0, max_epochs = 0, patience = 0, trials = 0;
    std::uint64_t seed = 0;
    int window = 0, horizon = 0;
    std::string horizons, method, methods, ablation, out;
};

void register_common(CLI::App* sub, FlagBag& f) {
    sub->add_option("--config", f.config_path, "INI config file");
    sub->add_option("--data", f.data, "series CSV");
    sub->add_option("--adj", f.adj, "adjacency CSV");
    sub->add_option("--normalization", f.normalization, "extrema policy: train | global");
    sub->add_option("--hidden", f.hidden, "RNN state size D");
    sub->add_option("--attention-dim", f.attention_dim, "attention size d_a (-1 tracks D/2)");
    sub->add_option("--filters", f.filters, "temporal conv filter count K");
    sub->add_option("--filter-len", f.filter_len, "filter length Q (-1 tracks the window)");
    sub->add_option("--graph-layers", f.graph_layers, "graph layer count L");
    sub->add_option("--graph-widths", f.graph_widths, "comma list of layer widths");
    sub->add_option("--norm-order", f.norm_order, "row normalization order p");
    sub->add_option("--norm-eps", f.norm_eps, "row normalization epsilon");
    sub->add_option("--dropout", f.dropout, "dropout rate");
    sub->add_option("--lr", f.lr, "learning rate");
    sub->add_option("--weight-decay", f.weight_decay, "Adam coupled weight decay");
    sub->add_option("--batch-size", f.batch_size, "mini-batch size");
    sub->add_option("--max-epochs", f.max_epochs, "epoch cap");
    sub->add_option("--patience", f.patience, "early-stopping patience");
    sub->add_option("--seed", f.seed, "base RNG seed");
    sub->add_option("--trials", f.trials, "seeds per configuration");
    sub->add_option("--window", f.window, "input window W");
    sub->add_option("--horizon", f.horizon, "lead time for train/predict");
    sub->add_option("--horizons", f.horizons, "comma list for benchmark");
    sub->add_option("--method", f.method, "cola-gnn | gar | ar | var | arma | rnn");
    sub->add_option("--methods", f.methods, "comma list for benchmark");
    sub->add_option("--ablation", f.ablation, "none | no-temp | no-loc");
    sub->add_option("--out", f.out, "output directory");
}

RunConfig build_config(CLI::App* sub, const FlagBag& f) {
    RunConfig cfg;
    if (sub->count("--config")) cfg = load_run_config(f.config_path);
    if (sub->count("--data")) cfg.series_path = f.data;
    if (sub->count("--adj")) cfg.adjacency_path = f.adj;
    if (sub->count("--normalization")) cfg.normalization = f.normalization;
    if (sub->count("--hidden")) cfg.model.hidden = f.hidden;
    if (sub->count("--attention-dim")) cfg.model.attention_dim = f.attention_dim;
    if (sub->count("--filters")) cfg.model.filters = f.filters;
    if (sub->count("--filter-len")) cfg.model.filter_len = f.filter_len;
    if (sub->count("--graph-layers")) cfg.model.graph_layers = f.graph_layers;
    if (sub->count("--graph-widths"))
        cfg.model.graph_widths = parse_int_list(f.graph_widths, "--graph-widths");
    if (sub->count("--norm-order")) cfg.model.norm_order = f.norm_order;
    if (sub->count("--norm-eps")) cfg.model.norm_eps = f.norm_eps;
    if (sub->count("--dropout")) cfg.model.dropout = f.dropout;
    if (sub->count("--lr")) cfg.train.lr = f.lr;
    if (sub->count("--weight-decay")) cfg.train.weight_decay = f.weight_decay;
    if (sub->count("--batch-size")) cfg.train.batch_size = f.batch_size;
    if (sub->count("--max-epochs")) cfg.train.max_epochs = f.max_epochs;
    if (sub->count("--patience")) cfg.train.patience = f.patience;
    if (sub->count("--seed")) cfg.train.seed = f.seed;
    if (sub->count("--trials")) cfg.train.trials = f.trials;
    if (sub->count("--window")) cfg.window = f.window;
    if (sub->count("--horizon")) cfg.horizon = f.horizon;
    if (sub->count("--horizons")) cfg.horizons = parse_int_list(f.horizons, "--horizons");
    if (sub->count("--method")) cfg.method = f.method;
    if (sub->count("--methods")) cfg.methods = parse_name_list(f.methods);
    if (sub->count("--ablation")) cfg.ablation = f.ablation;
    if (sub->count("--out")) cfg.out_dir = f.out;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cola-GNN epidemic forecasting toolkit"};
    app.require_subcommand(1);

    FlagBag train_f, bench_f, predict_f, attn_f, sweep_f, dump_f, synth_f;

    CLI::App* train = app.add_subcommand("train", "train one model at one horizon");
    register_common(train, train_f);

    CLI::App* bench = app.add_subcommand("benchmark", "method x horizon x seed grid");
    register_common(bench, bench_f);

    CLI::App* predict = app.add_subcommand("predict", "moving-window predictions");
    register_common(predict, predict_f);
    std::vector<std::string> checkpoints;
    predict->add_option("checkpoints", checkpoints, "checkpoint JSON file(s)")->required();

    CLI::App* attn = app.add_subcommand("export-attention", "dump A, M, fused and geo matrices");
    register_common(attn, attn_f);
    std::string attn_ckpt;
    int window_start = -1;
    attn->add_option("checkpoint", attn_ckpt, "cola-gnn checkpoint")->required();
    attn->add_option("--window-start", window_start, "window offset (default: last window)");

    CLI::App* sweep = app.add_subcommand("sweep", "sensitivity sweep over one parameter");
    register_common(sweep, sweep_f);
    std::string sweep_param, sweep_values;
    sweep->add_option("--param", sweep_param, "window | graph-dim")->required();
    sweep->add_option("--values", sweep_values, "comma list of values")->required();

    CLI::App* dump = app.add_subcommand("dump", "echo inputs in canonical form");
    register_common(dump, dump_f);

    CLI::App* synth = app.add_subcommand("synth", "generate the synthetic benchmark");
    register_common(synth, synth_f);
    SynthConfig synth_cfg;
    synth->add_option("--locations", synth_cfg.locations, "location count");
    synth->add_option("--weeks", synth_cfg.weeks, "series length");
    synth->add_option("--season", synth_cfg.season, "season length in weeks");
    synth->add_option("--lag-span", synth_cfg.lag_span, "largest phase lag");
    synth->add_option("--noise-sd", synth_cfg.noise_sd, "observation noise");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train->parsed()) {
            cmd_train(build_config(train, train_f));
        } else if (bench->parsed()) {
            cmd_benchmark(build_config(bench, bench_f));
        } else if (predict->parsed()) {
            cmd_predict(build_config(predict, predict_f), checkpoints);
        } else if (attn->parsed()) {
            cmd_export_attention(build_config(attn, attn_f), attn_ckpt, window_start);
        } else if (sweep->parsed()) {
            RunConfig cfg = build_config(sweep, sweep_f);
            cfg.sweep_param = sweep_param;
            cfg.sweep_values = parse_int_list(sweep_values, "--values");
            cmd_sweep(cfg);
        } else if (dump->parsed()) {
            cmd_dump(build_config(dump, dump_f));
        } else if (synth->parsed()) {
            if (synth->count("--seed")) synth_cfg.seed = synth_f.seed;
            cmd_synth(synth_cfg, build_config(synth, synth_f));
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
