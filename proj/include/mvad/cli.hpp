#pragma once

#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvad/config.hpp"
#include "mvad/dataset_io.hpp"
#include "mvad/datagen.hpp"
#include "mvad/decoders.hpp"
#include "mvad/metrics.hpp"
#include "mvad/model.hpp"
#include "mvad/training.hpp"

namespace mvad::cli {

namespace detail {

inline toml::table load_config_or_empty(const std::string& path) {
    if (path.empty()) return {};
    if (!std::filesystem::exists(path)) throw config::ConfigError("config file not found: " + path);
    return config::parse_file(path);
}

inline void write_history(const training::TrainHistory& h, const std::string& path) {
    std::string s = "epoch,total,structure,attribute,autoencoder\n";
    for (std::size_t e = 0; e < h.size(); ++e) {
        s += std::to_string(e + 1) + ',' + io::format_double(h[e].total) + ',' + io::format_double(h[e].structure) +
             ',' + io::format_double(h[e].attribute) + ',' + io::format_double(h[e].autoencoder) + '\n';
    }
    io::write_file(path, s);
}

}  // namespace detail

/// Entry point behind the `mvad` executable. Returns the process exit code.
inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-view GCN anomaly detection on attributed networks", "mvad"};
    app.require_subcommand(1);

    std::string gen_config, gen_out;
    std::optional<std::uint64_t> gen_seed;
    auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset with injected anomalies");
    gen->add_option("--config", gen_config, "TOML config ([generate] section)");
    gen->add_option("--out", gen_out, "Output dataset directory")->required();
    gen->add_option("--seed", gen_seed, "Override generate.seed");

    std::string tr_data, tr_config, tr_out, tr_history, tr_fusion;
    std::optional<double> tr_lambda, tr_gamma;
    std::optional<std::uint64_t> tr_seed;
    std::optional<std::size_t> tr_epochs;
    bool tr_quiet = false;
    auto* tr = app.add_subcommand("train", "Train a model on a dataset and write a checkpoint");
    tr->add_option("--data", tr_data, "Dataset directory")->required();
    tr->add_option("--config", tr_config, "TOML config ([train], [model], [fusion] sections)");
    tr->add_option("--out", tr_out, "Checkpoint path")->required();
    tr->add_option("--lambda", tr_lambda, "Attribute/structure balance in [0, 1]");
    tr->add_option("--gamma", tr_gamma, "Modularity reconstruction weight (>= 0)");
    tr->add_option("--fusion", tr_fusion, "Aggregation mode: concat or weighted");
    tr->add_option("--seed", tr_seed, "Initialization seed");
    tr->add_option("--epochs", tr_epochs, "Number of full-batch epochs");
    tr->add_option("--history", tr_history, "Write per-epoch loss components as CSV");
    tr->add_flag("--quiet", tr_quiet, "Suppress the training summary");

    std::string sc_data, sc_ckpt, sc_out;
    auto* sc = app.add_subcommand("score", "Score every node with a trained checkpoint");
    sc->add_option("--data", sc_data, "Dataset directory")->required();
    sc->add_option("--ckpt", sc_ckpt, "Checkpoint path")->required();
    sc->add_option("--out", sc_out, "Output scores.csv")->required();

    std::string ev_scores, ev_data;
    std::vector<std::size_t> ev_k;
    auto* ev = app.add_subcommand("eval", "Evaluate a scores file against dataset labels (JSON to stdout)");
    ev->add_option("--scores", ev_scores, "scores.csv from `score`")->required();
    ev->add_option("--data", ev_data, "Dataset directory with labels.csv")->required();
    ev->add_option("--k", ev_k, "Cut-offs for precision@k (default: number of anomalies)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*gen) {
            auto cfg = config::gen_config(detail::load_config_or_empty(gen_config));
            if (gen_seed) cfg.seed = *gen_seed;
            const auto g = datagen::generate(cfg);
            io::save_dataset(g.graph, gen_out);
            out << "wrote " << g.graph.node_count() << " nodes, " << g.graph.edge_count() << " edges, "
                << g.graph.view_count() << " views to " << gen_out << '\n';
        } else if (*tr) {
            auto cfg = config::train_config(detail::load_config_or_empty(tr_config));
            if (tr_lambda) cfg.loss.lambda = *tr_lambda;
            if (tr_gamma) cfg.loss.gamma = *tr_gamma;
            if (!tr_fusion.empty()) cfg.arch.fusion = fusion::parse_fusion_mode(tr_fusion);
            if (tr_seed) cfg.seed = *tr_seed;
            if (tr_epochs) cfg.epochs = *tr_epochs;
            cfg.validate();
            const auto g = io::load_dataset(tr_data);
            const auto start = std::chrono::steady_clock::now();
            const auto result = training::train(g, cfg);
            const std::chrono::duration<double> secs = std::chrono::steady_clock::now() - start;
            training::save_checkpoint(result.params, tr_out, &cfg);
            if (!tr_history.empty()) detail::write_history(result.history, tr_history);
            if (!tr_quiet) {
                out << "trained " << cfg.epochs << " epochs in " << secs.count() << " s; loss "
                    << result.history.front().total << " -> " << result.history.back().total << '\n';
            }
        } else if (*sc) {
            const auto g = io::load_dataset(sc_data);
            const auto params = training::load_checkpoint(sc_ckpt);
            decoders::write_scores_csv(score(g, params), sc_out);
        } else if (*ev) {
            const auto g = io::load_dataset(ev_data);
            if (!g.labels) throw std::runtime_error("dataset " + ev_data + " has no labels.csv");
            const auto report = decoders::read_scores_csv(ev_scores);
            if (report.scores.size() != g.node_count()) {
                throw std::runtime_error("scores file has " + std::to_string(report.scores.size()) +
                                         " nodes, dataset has " + std::to_string(g.node_count()));
            }
            out << metrics::evaluate(report.scores, report.ranking, *g.labels, ev_k).to_json().dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace mvad::cli
