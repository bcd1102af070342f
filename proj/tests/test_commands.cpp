#include <sys/wait.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "colagnn/checkpoint.hpp"
#include "colagnn/commands.hpp"
#include "colagnn/errors.hpp"
#include "colagnn/run_config.hpp"
#include "doctest.h"
#include "json.hpp"

using colagnn::ConfigError;
using colagnn::DataError;
using colagnn::RunConfig;
using colagnn::Tensor;
namespace fs = std::filesystem;

namespace {

// Scratch directory per test case, removed on scope exit.
struct TempDir {
    fs::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("colagnn-cmd-" + tag + "-" + std::to_string(counter.fetch_add(1)));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << content;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing file: ", path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// The commands narrate to stdout; keep that out of the test log.
struct CoutCapture {
    std::stringstream buf;
    std::streambuf* old;

    CoutCapture() : old(std::cout.rdbuf(buf.rdbuf())) {}
    ~CoutCapture() { std::cout.rdbuf(old); }
    std::string text() const { return buf.str(); }
};

// Exactly linear per-location series: x_i(t) = 5 + 2i + (0.8 + 0.1i) t.
// Any direct linear forecaster can fit it to numerical precision.
std::string linear_series_csv(int n, int t) {
    std::string out = "week";
    for (int i = 0; i < n; ++i) out += ",loc" + std::to_string(i);
    out += "\n";
    for (int s = 0; s < t; ++s) {
        out += "w" + std::to_string(s);
        for (int i = 0; i < n; ++i) {
            const double v = 5.0 + 2.0 * i + (0.8 + 0.1 * i) * s;
            out += "," + colagnn::format_double(v);
        }
        out += "\n";
    }
    return out;
}

double linear_series_value(int i, int t) { return 5.0 + 2.0 * i + (0.8 + 0.1 * i) * t; }

std::string ring4_adjacency_csv() {
    return "location,loc0,loc1,loc2,loc3\n"
           "loc0,1,1,0,1\n"
           "loc1,1,1,1,0\n"
           "loc2,0,1,1,1\n"
           "loc3,1,0,1,1\n";
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

// Parses a labelled square matrix CSV (location header row + row labels).
Tensor parse_matrix_csv(const std::string& path, int n) {
    std::stringstream in(slurp(path));
    std::string line;
    REQUIRE(std::getline(in, line));
    REQUIRE(split_line(line).size() == static_cast<size_t>(n + 1));
    Tensor m(n, n, 0.0);
    for (int i = 0; i < n; ++i) {
        REQUIRE(std::getline(in, line));
        const auto cells = split_line(line);
        REQUIRE(cells.size() == static_cast<size_t>(n + 1));
        for (int j = 0; j < n; ++j) m(i, j) = std::stod(cells[static_cast<size_t>(j + 1)]);
    }
    return m;
}

RunConfig tiny_run(const TempDir& dir, const std::string& method) {
    RunConfig cfg;
    cfg.series_path = dir.file("series.csv");
    cfg.out_dir = dir.file("out");
    cfg.method = method;
    cfg.window = 8;
    cfg.horizon = 2;
    cfg.model.hidden = 4;
    cfg.model.attention_dim = 2;
    cfg.model.filters = 2;
    cfg.model.filter_len = 3;
    cfg.model.graph_layers = 2;
    cfg.model.graph_widths = {3, 2};
    cfg.model.dropout = 0.0;
    cfg.train.max_epochs = 3;
    cfg.train.patience = 2;
    cfg.train.trials = 1;
    cfg.train.batch_size = 8;
    cfg.train.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("parse_int_list and parse_name_list") {
    CHECK(colagnn::parse_int_list("1, 2,3", "f") == std::vector<int>{1, 2, 3});
    CHECK(colagnn::parse_int_list("42", "f") == std::vector<int>{42});
    CHECK_THROWS_AS(colagnn::parse_int_list("1,,2", "f"), ConfigError);
    CHECK_THROWS_AS(colagnn::parse_int_list("", "f"), ConfigError);
    CHECK_THROWS_AS(colagnn::parse_int_list("1,x", "f"), ConfigError);
    try {
        colagnn::parse_int_list("1,x", "horizons");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("horizons") != std::string::npos);
    }

    CHECK(colagnn::parse_name_list("gar, ar ,var") ==
          std::vector<std::string>{"gar", "ar", "var"});
    CHECK(colagnn::parse_name_list(" , ,") == std::vector<std::string>{});
}

TEST_CASE("fnv1a64 matches the reference vectors") {
    CHECK(colagnn::fnv1a64("") == 14695981039346656037ull);
    CHECK(colagnn::fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(colagnn::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(colagnn::fnv1a64_hex("") == "fnv1a:cbf29ce484222325");
    CHECK(colagnn::fnv1a64_hex("a") == "fnv1a:af63dc4c8601ec8c");
    CHECK(colagnn::fnv1a64("ab") != colagnn::fnv1a64("ba"));
}

TEST_CASE("apply_config_text fills sections over defaults") {
    RunConfig cfg;
    const std::string text =
        "# comment\n"
        "\n"
        "[data]\n"
        "series = flu.csv\n"
        "adjacency = adj.csv\n"
        "normalization = global\n"
        "[model]\n"
        "hidden = 12\n"
        "graph-widths = 8, 4\n"
        "dropout = 0.1\n"
        "[train]\n"
        "lr = 0.01\n"
        "seed = 99\n"
        "[experiment]\n"
        "window = 16\n"
        "horizons = 2,5\n"
        "method = gar\n"
        "methods = gar, ar\n"
        "ablation = no-temp\n"
        "out = results\n";
    colagnn::apply_config_text(cfg, text, "cfg.ini");
    CHECK(cfg.series_path == "flu.csv");
    CHECK(cfg.adjacency_path == "adj.csv");
    CHECK(cfg.normalization == "global");
    CHECK(cfg.model.hidden == 12);
    CHECK(cfg.model.graph_widths == std::vector<int>{8, 4});
    CHECK(cfg.model.dropout == doctest::Approx(0.1));
    CHECK(cfg.train.lr == doctest::Approx(0.01));
    CHECK(cfg.train.seed == 99);
    CHECK(cfg.window == 16);
    CHECK(cfg.horizons == std::vector<int>{2, 5});
    CHECK(cfg.method == "gar");
    CHECK(cfg.methods == std::vector<std::string>{"gar", "ar"});
    CHECK(cfg.ablation == "no-temp");
    CHECK(cfg.out_dir == "results");
    CHECK(cfg.horizon == 1);  // untouched default
}

TEST_CASE("apply_config_text rejects malformed input with file:line origins") {
    RunConfig cfg;
    auto message_of = [&](const std::string& text) {
        try {
            colagnn::apply_config_text(cfg, text, "bad.ini");
            return std::string("no error");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
    };
    CHECK(message_of("[data]\nserie = x\n").find("bad.ini:2") != std::string::npos);
    CHECK(message_of("[data]\nserie = x\n").find("unknown key") != std::string::npos);
    CHECK(message_of("[nope]\n").find("unknown section") != std::string::npos);
    CHECK(message_of("[data\n").find("malformed section") != std::string::npos);
    CHECK(message_of("key = 1\n").find("before any section") != std::string::npos);
    CHECK(message_of("[train]\njust a line\n").find("expected 'key = value'") !=
          std::string::npos);
    CHECK(message_of("[train]\nlr = fast\n").find("cannot parse 'fast'") != std::string::npos);
    CHECK(message_of("[model]\nhidden = 4.5\n").find("[model] hidden") != std::string::npos);

    // The [inputs] block of a snapshot is informational and must re-parse.
    colagnn::apply_config_text(cfg, "[inputs]\nseries-hash = fnv1a:00\n", "snap.ini");
}

TEST_CASE("RunConfig::validate rejects out-of-range settings") {
    RunConfig cfg;
    cfg.validate();

    auto broken = [](auto mutate) {
        RunConfig c;
        mutate(c);
        CHECK_THROWS_AS(c.validate(), ConfigError);
    };
    broken([](RunConfig& c) { c.normalization = "zscore"; });
    broken([](RunConfig& c) { c.window = 0; });
    broken([](RunConfig& c) { c.horizon = -1; });
    broken([](RunConfig& c) { c.horizons = {}; });
    broken([](RunConfig& c) { c.horizons = {2, 0}; });
    broken([](RunConfig& c) { c.method = "lstm"; });
    broken([](RunConfig& c) { c.methods = {"gar", "prophet"}; });
    broken([](RunConfig& c) { c.methods = {}; });
    broken([](RunConfig& c) { c.ablation = "no-graph"; });
    broken([](RunConfig& c) { c.out_dir = ""; });
    broken([](RunConfig& c) { c.train.lr = 0.0; });
    broken([](RunConfig& c) { c.model.hidden = 0; });
}

TEST_CASE("model_config_for_run folds the ablation flags") {
    RunConfig cfg;
    CHECK(colagnn::model_config_for_run(cfg).use_temporal_conv);
    CHECK(colagnn::model_config_for_run(cfg).use_location_attention);
    cfg.ablation = "no-temp";
    CHECK_FALSE(colagnn::model_config_for_run(cfg).use_temporal_conv);
    CHECK(colagnn::model_config_for_run(cfg).use_location_attention);
    cfg.ablation = "no-loc";
    CHECK(colagnn::model_config_for_run(cfg).use_temporal_conv);
    CHECK_FALSE(colagnn::model_config_for_run(cfg).use_location_attention);
}

TEST_CASE("resolved_snapshot is deterministic and round-trips") {
    RunConfig cfg;
    cfg.series_path = "x.csv";
    cfg.window = 16;
    cfg.model.hidden = 10;  // attention-dim and filter-len stay derived
    const std::string snap = colagnn::resolved_snapshot(cfg, "fnv1a:aa", "fnv1a:bb");
    CHECK(snap == colagnn::resolved_snapshot(cfg, "fnv1a:aa", "fnv1a:bb"));

    // Derived values appear resolved, not as -1 sentinels.
    CHECK(snap.find("attention-dim = 5\n") != std::string::npos);
    CHECK(snap.find("filter-len = 16\n") != std::string::npos);
    CHECK(snap.find("series-hash = fnv1a:aa\n") != std::string::npos);
    CHECK(snap.find("adjacency-hash = fnv1a:bb\n") != std::string::npos);

    RunConfig back;
    colagnn::apply_config_text(back, snap, "snapshot");
    CHECK(back.series_path == "x.csv");
    CHECK(back.window == 16);
    CHECK(back.model.hidden == 10);
    CHECK(back.model.attention_dim == 5);
    CHECK(back.model.filter_len == 16);
    CHECK(back.horizons == cfg.horizons);
    CHECK(back.methods == cfg.methods);
    CHECK(colagnn::resolved_snapshot(back, "fnv1a:aa", "fnv1a:bb") == snap);
}

TEST_CASE("load_pipeline prepares splits, adjacency and normalization") {
    TempDir dir("pipeline");
    write_file(dir.file("series.csv"), linear_series_csv(4, 60));
    RunConfig cfg = tiny_run(dir, "gar");

    SUBCASE("splits and hashes") {
        colagnn::LoadedData d = colagnn::load_pipeline(cfg);
        CHECK(d.ds.num_locations() == 4);
        CHECK(d.ds.num_weeks() == 60);
        CHECK(d.splits.train.num_weeks() == 30);
        CHECK(d.splits.val.num_weeks() == 12);
        CHECK(d.splits.test.num_weeks() == 18);
        CHECK(d.series_hash.substr(0, 6) == "fnv1a:");
        CHECK(d.series_hash.size() == 6 + 16);
        CHECK(d.series_hash == colagnn::fnv1a64_hex(slurp(cfg.series_path)));
        CHECK(d.adjacency_hash.substr(0, 6) == "fnv1a:");
    }

    SUBCASE("missing adjacency falls back to identity") {
        colagnn::LoadedData d = colagnn::load_pipeline(cfg);
        CHECK(d.adj.raw.equals(Tensor::identity(4)));
        CHECK(d.adj.normalized.equals(Tensor::identity(4)));
    }

    SUBCASE("train extrema differ from global extrema on a trending series") {
        colagnn::LoadedData train_d = colagnn::load_pipeline(cfg);
        cfg.normalization = "global";
        colagnn::LoadedData global_d = colagnn::load_pipeline(cfg);
        // Under train extrema the later (larger) values exceed 1; under
        // global extrema everything stays within [0, 1] by construction.
        const int last = train_d.test_n.num_weeks() - 1;
        CHECK(train_d.test_n.values(0, last) > 1.0);
        CHECK(global_d.test_n.values(0, last) <= 1.0);
        CHECK(global_d.test_n.values(0, last) == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("validation runs before any file access") {
        cfg.window = 0;
        CHECK_THROWS_AS(colagnn::load_pipeline(cfg), ConfigError);
        cfg.window = 8;
        cfg.series_path = "";
        CHECK_THROWS_AS(colagnn::load_pipeline(cfg), ConfigError);
    }
}

TEST_CASE("cmd_train writes snapshot and checkpoint; linear fit is exact") {
    TempDir dir("train-gar");
    write_file(dir.file("series.csv"), linear_series_csv(4, 60));
    RunConfig cfg = tiny_run(dir, "gar");

    std::string narration;
    {
        CoutCapture quiet;
        colagnn::cmd_train(cfg);
        narration = quiet.text();
    }
    CHECK(narration.find("wrote ") != std::string::npos);

    const std::string snap_path = dir.file("out/config.resolved.ini");
    const std::string ckpt_path = dir.file("out/gar-h2.json");
    CHECK(fs::exists(snap_path));
    REQUIRE(fs::exists(ckpt_path));

    const std::string snap = slurp(snap_path);
    CHECK(snap.find("method = gar\n") != std::string::npos);
    CHECK(snap.find("window = 8\n") != std::string::npos);
    CHECK(snap.find("series-hash = " + colagnn::fnv1a64_hex(slurp(cfg.series_path))) !=
          std::string::npos);

    colagnn::Checkpoint ckpt = colagnn::load_checkpoint(ckpt_path);
    CHECK(ckpt.method == "gar");
    CHECK(ckpt.window == 8);
    CHECK(ckpt.horizon == 2);
    CHECK(ckpt.locations == std::vector<std::string>{"loc0", "loc1", "loc2", "loc3"});

    // On an exactly linear series the held-out windows predict to numerical
    // precision: next = 2*last - second_last holds after any affine rescale.
    colagnn::DirectLinearModel lin = colagnn::restore_linear(ckpt);
    colagnn::LoadedData d = colagnn::load_pipeline(cfg);
    const colagnn::WindowSet test_ws = colagnn::make_windows(d.test_n, 8, 2, "test");
    for (const colagnn::WindowSample& s : test_ws.samples) {
        const Tensor pred = lin.predict(s.input);
        for (int i = 0; i < 4; ++i) CHECK(std::fabs(pred(i, 0) - s.target(i, 0)) < 1e-6);
    }
}

TEST_CASE("cmd_train on cola-gnn writes a training log next to the checkpoint") {
    TempDir dir("train-cola");
    write_file(dir.file("series.csv"), linear_series_csv(4, 60));
    write_file(dir.file("adj.csv"), ring4_adjacency_csv());
    RunConfig cfg = tiny_run(dir, "cola-gnn");
    cfg.adjacency_path = dir.file("adj.csv");

    {
        CoutCapture quiet;
        colagnn::cmd_train(cfg);
    }

    REQUIRE(fs::exists(dir.file("out/cola-gnn-h2.json")));
    const std::string log = slurp(dir.file("out/cola-gnn-h2.log"));
    CHECK(log.rfind("epoch,train_l1,val_l1,seconds", 0) == 0);
    CHECK(log.find("\n1,") != std::string::npos);
    CHECK(log.find("\n3,") != std::string::npos);  // max_epochs = 3

    colagnn::Checkpoint ckpt = colagnn::load_checkpoint(dir.file("out/cola-gnn-h2.json"));
    CHECK(ckpt.method == "cola-gnn");
    CHECK(ckpt.adjacency_raw.equals(
        colagnn::load_adjacency(cfg.adjacency_path, ckpt.locations).raw));
}

TEST_CASE("cmd_predict sweeps every window and labels future targets t+k") {
    TempDir dir("predict");
    write_file(dir.file("series.csv"), linear_series_csv(4, 60));
    RunConfig cfg = tiny_run(dir, "gar");
    {
        CoutCapture quiet;
        colagnn::cmd_train(cfg);
        colagnn::cmd_predict(cfg, {dir.file("out/gar-h2.json")});
    }

    std::stringstream in(slurp(dir.file("out/predictions.csv")));
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "week,location,y_true,y_pred");

    int rows = 0, future_rows = 0;
    std::string first_week, last_week;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_line(line);
        REQUIRE(cells.size() == 4);
        if (rows == 0) first_week = cells[0];
        last_week = cells[0];
        const double y_pred = std::stod(cells[3]);
        CHECK(std::isfinite(y_pred));
        if (cells[0].rfind("t+", 0) == 0) {
            ++future_rows;
            CHECK(cells[2].empty());
        } else {
            // Exactly linear series, so the fit reproduces the truth.
            const double y_true = std::stod(cells[2]);
            CHECK(std::fabs(y_pred - y_true) < 1e-4);
        }
        ++rows;
    }
    // Window starts 0..52 give 53 groups of 4 rows; the last two groups
    // target weeks 60 and 61, beyond the 60-week series.
    CHECK(rows == 53 * 4);
    CHECK(future_rows == 2 * 4);
    CHECK(first_week == "w9");  // s=0, target index 0+8+2-1
    CHECK(last_week == "t+2");

    SUBCASE("multiple checkpoints pin the final window, ordered by horizon") {
        RunConfig cfg1 = cfg;
        cfg1.horizon = 1;
        cfg1.method = "ar";
        {
            CoutCapture quiet;
            colagnn::cmd_train(cfg1);
            colagnn::cmd_predict(cfg,
                                 {dir.file("out/gar-h2.json"), dir.file("out/ar-h1.json")});
        }

        std::stringstream multi(slurp(dir.file("out/predictions.csv")));
        std::string row;
        std::getline(multi, row);
        std::vector<std::vector<std::string>> parsed;
        while (std::getline(multi, row))
            if (!row.empty()) parsed.push_back(split_line(row));
        REQUIRE(parsed.size() == 2 * 4);
        // Both checkpoints forecast from the final window, so every target
        // lies past the end of the series: t+1 for h=1, t+2 for h=2.
        CHECK(parsed[0][0] == "t+1");
        CHECK(parsed[4][0] == "t+2");
        for (const auto& cells : parsed) CHECK(cells[2].empty());
        for (int i = 0; i < 4; ++i) {
            const double ar_pred = std::stod(parsed[static_cast<size_t>(i)][3]);
            const double gar_pred = std::stod(parsed[static_cast<size_t>(4 + i)][3]);
            CHECK(std::fabs(ar_pred - linear_series_value(i, 60)) < 1e-4);
            CHECK(std::fabs(gar_pred - linear_series_value(i, 61)) < 1e-4);
        }
    }

    SUBCASE("location mismatch against the checkpoint is a DataError") {
        write_file(dir.file("other.csv"), [] {
            std::string csv = linear_series_csv(4, 60);
            const size_t pos = csv.find("loc3");
            csv.replace(pos, 4, "locX");
            return csv;
        }());
        RunConfig other = cfg;
        other.series_path = dir.file("other.csv");
        CHECK_THROWS_AS(colagnn::cmd_predict(other, {dir.file("out/gar-h2.json")}), DataError);
    }

    SUBCASE("predict needs at least one checkpoint") {
        CHECK_THROWS_AS(colagnn::cmd_predict(cfg, {}), ConfigError);
    }
}

TEST_CASE("cmd_export_attention dumps consistent matrices") {
    TempDir dir("attn");
    write_file(dir.file("series.csv"), linear_series_csv(4, 60));
    write_file(dir.file("adj.csv"), ring4_adjacency_csv());
    RunConfig cfg = tiny_run(dir, "cola-gnn");
    cfg.adjacency_path = dir.file("adj.csv");
    {
        CoutCapture quiet;
        colagnn::cmd_train(cfg);
        colagnn::cmd_export_attention(cfg, dir.file("out/cola-gnn-h2.json"), -1);
    }

    const Tensor a = parse_matrix_csv(dir.file("out/attention-a.csv"), 4);
    const Tensor gate = parse_matrix_csv(dir.file("out/attention-gate.csv"), 4);
    const Tensor fused = parse_matrix_csv(dir.file("out/attention-fused.csv"), 4);
    const Tensor geo = parse_matrix_csv(dir.file("out/attention-geo.csv"), 4);

    // Geo is the degree-normalized ring: every vertex has degree 3 counting
    // the self loop, so each nonzero entry is exactly 1/3.
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const bool edge = i == j || (i + 1) % 4 == j || (j + 1) % 4 == i;
            CHECK(geo(i, j) == doctest::Approx(edge ? 1.0 / 3.0 : 0.0).epsilon(1e-12));
        }

    // The gate blends geo with the attention matrix entry by entry.
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            CHECK(gate(i, j) > 0.0);
            CHECK(gate(i, j) < 1.0);
            const double blend = gate(i, j) * geo(i, j) + (1.0 - gate(i, j)) * a(i, j);
            CHECK(fused(i, j) == doctest::Approx(blend).epsilon(1e-12));
        }

    SUBCASE("window start beyond the series is a DataError") {
        CHECK_THROWS_AS(
            colagnn::cmd_export_attention(cfg, dir.file("out/cola-gnn-h2.json"), 999),
            DataError);
    }

    SUBCASE("non cola-gnn checkpoints have nothing to export") {
        RunConfig gar_cfg = tiny_run(dir, "gar");
        {
            CoutCapture quiet;
            colagnn::cmd_train(gar_cfg);
        }
        CHECK_THROWS_AS(colagnn::cmd_export_attention(cfg, dir.file("out/gar-h2.json"), -1),
                        ConfigError);
    }

    SUBCASE("no-loc checkpoints have no attention") {
        RunConfig ab = cfg;
        ab.ablation = "no-loc";
        ab.out_dir = dir.file("out-ab");
        {
            CoutCapture quiet;
            colagnn::cmd_train(ab);
        }
        CHECK_THROWS_AS(
            colagnn::cmd_export_attention(ab, dir.file("out-ab/cola-gnn-h2.json"), -1),
            ConfigError);
    }
}

TEST_CASE("cmd_benchmark writes a metrics grid") {
    TempDir dir("bench");
    write_file(dir.file("series.csv"), linear_series_csv(4, 60));
    RunConfig cfg = tiny_run(dir, "gar");
    cfg.methods = {"gar", "ar"};
    cfg.horizons = {1, 3};
    {
        CoutCapture quiet;
        colagnn::cmd_benchmark(cfg);
    }

    const auto doc = nlohmann::json::parse(slurp(dir.file("out/metrics.json")));
    CHECK(doc.at("format") == "colagnn-metrics-v1");
    for (const std::string& method : {std::string("gar"), std::string("ar")})
        for (const std::string& h : {std::string("1"), std::string("3")}) {
            const auto& cell = doc.at(method).at(h);
            REQUIRE(cell.contains("rmse"));
            CHECK(cell.at("rmse").at("per_seed").size() == 1);
            CHECK(cell.at("rmse").at("mean").is_number());
            CHECK(cell.at("rmse").at("sd").is_number());
            CHECK(cell.at("pcc").at("mean").is_number());
            // Exactly linear data: every direct linear method nails it.
            CHECK(cell.at("rmse").at("mean").get<double>() < 1e-4);
        }
    CHECK(doc.at("gar").at("1").at("params").get<int>() == 8 + 1);
    CHECK(doc.at("ar").at("1").at("params").get<int>() == 4 * (8 + 1));
    CHECK(fs::exists(dir.file("out/config.resolved.ini")));
}

TEST_CASE("cmd_sweep validates its parameter grammar") {
    TempDir dir("sweep-bad");
    write_file(dir.file("series.csv"), linear_series_csv(4, 60));
    RunConfig cfg = tiny_run(dir, "gar");

    cfg.sweep_param = "depth";
    cfg.sweep_values = {10};
    CHECK_THROWS_AS(colagnn::cmd_sweep(cfg), ConfigError);

    cfg.sweep_param = "window";
    cfg.sweep_values = {};
    CHECK_THROWS_AS(colagnn::cmd_sweep(cfg), ConfigError);
    cfg.sweep_values = {12};  // not a multiple of 5
    CHECK_THROWS_AS(colagnn::cmd_sweep(cfg), ConfigError);
    cfg.sweep_values = {55};  // beyond the 10..50 range
    CHECK_THROWS_AS(colagnn::cmd_sweep(cfg), ConfigError);

    cfg.sweep_param = "graph-dim";
    cfg.sweep_values = {0};
    CHECK_THROWS_AS(colagnn::cmd_sweep(cfg), ConfigError);
    cfg.sweep_values = {16};
    CHECK_THROWS_AS(colagnn::cmd_sweep(cfg), ConfigError);
}

TEST_CASE("cmd_sweep runs a window sweep end to end") {
    TempDir dir("sweep");
    // 100 weeks so the 20-week validation split still fits a 15-week window.
    write_file(dir.file("series.csv"), linear_series_csv(4, 100));
    RunConfig cfg = tiny_run(dir, "gar");
    cfg.horizon = 1;
    cfg.sweep_param = "window";
    cfg.sweep_values = {10, 15};
    {
        CoutCapture quiet;
        colagnn::cmd_sweep(cfg);
    }

    const auto doc = nlohmann::json::parse(slurp(dir.file("out/sweep.json")));
    CHECK(doc.at("format") == "colagnn-sweep-v1");
    CHECK(doc.at("param") == "window");
    CHECK(doc.at("method") == "gar");
    for (const std::string& v : {std::string("10"), std::string("15")}) {
        const auto& cell = doc.at("results").at(v);
        REQUIRE(cell.contains("rmse"));
        CHECK(cell.at("rmse").at("mean").get<double>() < 1e-4);
        CHECK(cell.at("params").get<int>() == std::stoi(v) + 1);
    }
}

TEST_CASE("cmd_dump echoes inputs in canonical form with hashes") {
    TempDir dir("dump");
    write_file(dir.file("series.csv"), linear_series_csv(4, 20));
    write_file(dir.file("adj.csv"), ring4_adjacency_csv());
    RunConfig cfg;
    cfg.series_path = dir.file("series.csv");
    cfg.adjacency_path = dir.file("adj.csv");
    cfg.out_dir = dir.file("out");

    std::string text;
    {
        CoutCapture capture;
        colagnn::cmd_dump(cfg);
        text = capture.text();
    }
    CHECK(text.find("series: 4 locations x 20 weeks") != std::string::npos);
    CHECK(text.find("hash fnv1a:") != std::string::npos);
    CHECK(text.find("adjacency: hash fnv1a:") != std::string::npos);

    const colagnn::EpiDataset ds = colagnn::load_series(cfg.series_path);
    CHECK(slurp(dir.file("out/series.canonical.csv")) == colagnn::series_to_csv(ds));
    const colagnn::AdjacencyMatrix adj =
        colagnn::load_adjacency(cfg.adjacency_path, ds.locations);
    CHECK(slurp(dir.file("out/adjacency.canonical.csv")) == colagnn::adjacency_to_csv(adj));
}

TEST_CASE("cmd_synth emits a loadable dataset pair") {
    TempDir dir("synth");
    colagnn::SynthConfig synth;
    synth.locations = 5;
    synth.weeks = 40;
    RunConfig cfg;
    cfg.out_dir = dir.file("out");

    {
        CoutCapture quiet;
        colagnn::cmd_synth(synth, cfg);
    }

    const colagnn::EpiDataset ds = colagnn::load_series(dir.file("out/series.csv"));
    CHECK(ds.num_locations() == 5);
    CHECK(ds.num_weeks() == 40);
    const colagnn::AdjacencyMatrix adj =
        colagnn::load_adjacency(dir.file("out/adjacency.csv"), ds.locations);
    CHECK(adj.raw.rows() == 5);
    for (int i = 0; i < 5; ++i) CHECK(adj.raw(i, i) == 1.0);
}

#ifdef COLAGNN_CLI_PATH
namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(COLAGNN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("CLI maps error classes to exit codes") {
    TempDir dir("cli");

    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("") == 2);               // missing subcommand
    CHECK(run_cli("train --bogus x") == 2);  // unknown flag
    CHECK(run_cli("train --config " + dir.file("absent.ini")) == 2);
    CHECK(run_cli("dump --data " + dir.file("absent.csv")) == 3);

    CHECK(run_cli("synth --out " + dir.file("d") + " --locations 3 --weeks 30") == 0);
    CHECK(fs::exists(dir.file("d/series.csv")));
    CHECK(fs::exists(dir.file("d/adjacency.csv")));

    // Config errors beat data errors: validation runs before file access.
    CHECK(run_cli("train --data " + dir.file("d/series.csv") + " --method gar --window 0") == 2);

    // A corrupt series file surfaces as a data error.
    write_file(dir.file("bad.csv"), "week,a,b\nw0,1,oops\n");
    CHECK(run_cli("dump --data " + dir.file("bad.csv")) == 3);
}
#endif
