// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "mvad/cli.hpp"
#include "test_util.hpp"

using namespace mvad;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

Outcome gradient_correctness() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2024);
    const auto g = test::random_graph(12, {4, 3}, 0.3, rng);
    training::TrainConfig cfg;
    cfg.arch.view_hidden = {6, 4};
    cfg.arch.ae_hidden = {8, 4};
    cfg.arch.community_hidden = {6, 4};
    cfg.arch.isolate_autoencoder = false;  // exact gradient of the full objective
    const auto model = test::with_random_biases(init_params(cfg.architecture_for(g), {0.5, 0.1}, 7), rng);
    const auto r = test::model_gradient_check(GraphTensors::from(g), model, 1e-5, 1e-4, 1e-6);
    const double secs = seconds_since(start);
    const bool pass = r.failures == 0 && r.checked == model.values.scalar_count() && secs < 30.0;
    return {pass, std::to_string(r.checked) + " entries, " + std::to_string(r.failures) + " outside tolerance" +
                      (r.worst_entry.empty() ? "" : " (worst " + r.worst_entry + ")") + ", " + fmt(secs) + " s"};
}

Outcome modularity_identities() {
    std::mt19937_64 rng(31);
    std::size_t bad = 0;
    double worst_asym = 0.0, worst_row = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng() % 49;
        const auto g = test::random_graph(n, {1}, std::uniform_real_distribution<double>(0.05, 0.6)(rng), rng);
        // Oracle from integer edge counts.
        std::vector<long long> k(n, 0);
        long long m = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (g.has_edge(i, j)) ++k[i], ++k[j], ++m;
        const Matrix b = modularity_matrix(g).b;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row += b(i, j);
                worst_asym = std::max(worst_asym, std::abs(b(i, j) - b(j, i)));
                const double oracle = (g.has_edge(i, j) ? 1.0 : 0.0) -
                                      static_cast<double>(k[i] * k[j]) / static_cast<double>(2 * m);
                if (b(i, j) != oracle) ++bad;
            }
            worst_row = std::max(worst_row, std::abs(row));
        }
    }
    const bool pass = bad == 0 && worst_asym <= 1e-12 && worst_row < 1e-9;
    return {pass, "max asymmetry " + fmt(worst_asym) + ", max |row sum| " + fmt(worst_row) + ", " +
                      std::to_string(bad) + " entries differ from oracle"};
}

Outcome forward_parity() {
    std::mt19937_64 rng(32);
    double worst_gcn = 0.0, worst_dec = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 8, d_in = 1 + rng() % 6, d_out = 1 + rng() % 6;
        const auto g = test::random_graph(n, {d_in}, 0.4, rng);
        const Matrix h = test::random_matrix(n, d_in, rng);
        const Matrix w = test::random_matrix(d_in, d_out, rng);
        const Matrix fast = encoders::gcn_layer(normalize_adjacency(g), h, w);
        std::vector<double> deg(n, 1.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) deg[i] += g.adjacency(i, j);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t o = 0; o < d_out; ++o) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != i && !g.has_edge(i, j)) continue;
                    double wh = 0.0;
                    for (std::size_t c = 0; c < d_in; ++c) wh += w(c, o) * h(j, c);
                    acc += wh / std::sqrt(deg[i] * deg[j]);
                }
                worst_gcn = std::max(worst_gcn, std::abs(fast(i, o) - std::max(0.0, acc)));
            }

        const Matrix q = test::random_matrix(n, d_out, rng, -2.0, 2.0);
        const Matrix a = decoders::structure_decode(q);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < d_out; ++c) dot += q(i, c) * q(j, c);
                worst_dec = std::max(worst_dec, std::abs(a(i, j) - 1.0 / (1.0 + std::exp(-dot))));
            }
    }
    return {worst_gcn <= 1e-10 && worst_dec <= 1e-12,
            "gcn max diff " + fmt(worst_gcn) + ", decoder max diff " + fmt(worst_dec)};
}

Outcome aggregation_identities() {
    std::mt19937_64 rng(33);
    const std::vector<Matrix> u{test::random_matrix(9, 5, rng), test::random_matrix(9, 5, rng),
                                test::random_matrix(9, 5, rng)};
    const Matrix k = test::random_matrix(9, 5, rng);
    bool one_hot = true;
    for (std::size_t j = 0; j < u.size(); ++j) {
        fusion::AggregationWeights w{{0.0, 0.0, 0.0}, 0.0};
        w.alphas[j] = 1.0;
        one_hot = one_hot && fusion::aggregate_weighted(u, k, w).q == u[j];
    }
    std::size_t rejected = 0;
    const std::vector<fusion::AggregationWeights> off{{{0.5, 0.5, 0.5}, 0.0}, {{0.6, 0.6, -0.2}, 0.0},
                                                      {{0.1, 0.1, 0.1}, 0.1}, {{0.25, 0.25, 0.25}, 0.2}};
    for (const auto& w : off) {
        try {
            fusion::aggregate_weighted(u, k, w);
        } catch (const fusion::SimplexError&) {
            ++rejected;
        }
    }
    const Matrix krep = test::random_matrix(9, 7, rng);
    const auto q = fusion::aggregate_concat(u, krep).q;
    bool slices = q.cols() == 22;
    for (std::size_t j = 0; j < u.size() && slices; ++j) slices = slice_cols(q, 5 * j, 5) == u[j];
    slices = slices && slice_cols(q, 15, 7) == krep;
    return {one_hot && rejected == off.size() && slices,
            std::string("one-hot ") + (one_hot ? "bit-identical" : "differs") + ", " + std::to_string(rejected) + "/" +
                std::to_string(off.size()) + " off-simplex rejected, concat slices " + (slices ? "exact" : "differ")};
}

Outcome end_to_end_detection() {
    const auto start = Clock::now();
    datagen::GenConfig gen;  // n=500, 5 communities, 2 views, 5 anomalies per type, seed 42
    const auto data = datagen::generate(gen);
    training::TrainConfig cfg;  // 300 epochs, seed 42
    const auto result = training::train(data.graph, cfg);
    const auto report = score(data.graph, result.params);
    const auto eval = metrics::evaluate(report.scores, report.ranking, *data.graph.labels, {15});
    const double secs = seconds_since(start);
    const double first = result.history.front().total, last = result.history.back().total;
    const double p15 = eval.precision_at_k.at(15);
    const bool pass = last < 0.5 * first && eval.auc_roc >= 0.75 && p15 >= 0.4 && secs < 300.0;
    const auto& kinds = eval.per_kind_top_k.at(15);
    return {pass, "loss " + fmt(first) + " -> " + fmt(last) + " (ratio " + fmt(last / first) + "), AUC " +
                      fmt(eval.auc_roc) + ", P@15 " + fmt(p15) + " (global " + std::to_string(kinds.at("global")) +
                      ", structural " + std::to_string(kinds.at("structural")) + ", community " +
                      std::to_string(kinds.at("community")) + "), " + fmt(secs) + " s"};
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "mvad");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

Outcome determinism() {
    test::TempDir dir("acceptance_det");
    const auto cfg = dir.path() / "cfg.toml";
    std::ofstream(cfg) << "[generate]\nn = 150\ncommunities = 3\np_in = 0.15\nseed = 7\n\n[train]\nepochs = 40\nseed = 11\n";
    std::string scores[2];
    for (int i = 0; i < 2; ++i) {
        const auto base = dir.path() / ("run" + std::to_string(i));
        const int code =
            cli({"generate", "--config", cfg.string(), "--out", (base / "data").string()}) |
            cli({"train", "--data", (base / "data").string(), "--config", cfg.string(), "--out",
                 (base / "m.ckpt").string(), "--quiet"}) |
            cli({"score", "--data", (base / "data").string(), "--ckpt", (base / "m.ckpt").string(), "--out",
                 (base / "scores.csv").string()});
        if (code != 0) return {false, "pipeline run " + std::to_string(i) + " failed"};
        std::ifstream in(base / "scores.csv", std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        scores[i] = ss.str();
    }
    const bool same = !scores[0].empty() && scores[0] == scores[1];
    return {same, std::to_string(scores[0].size()) + " bytes, " + (same ? "identical" : "different")};
}

Outcome lambda_contract() {
    std::mt19937_64 rng(34);
    std::size_t violations = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng() % 20, d = 1 + rng() % 6;
        const Matrix a = test::random_graph(n, {1}, 0.3, rng).adjacency;
        const Matrix x = test::random_matrix(n, d, rng, 0.0, 3.0);
        const Matrix at = test::random_matrix(n, n, rng, 0.0, 1.0), xt = test::random_matrix(n, d, rng, 0.0, 3.0);
        const Matrix at2 = at + test::random_matrix(n, n, rng), xt2 = xt + test::random_matrix(n, d, rng);
        if (decoders::joint_loss(a, at, x, xt, {1.0, 0.0}) != decoders::joint_loss(a, at2, x, xt, {1.0, 0.0})) ++violations;
        if (decoders::joint_loss(a, at, x, xt, {0.0, 0.0}) != decoders::joint_loss(a, at, x, xt2, {0.0, 0.0})) ++violations;
        // The perturbed term must still matter at an interior lambda.
        if (decoders::joint_loss(a, at, x, xt, {0.5, 0.0}) == decoders::joint_loss(a, at2, x, xt2, {0.5, 0.0})) ++violations;
    }
    return {violations == 0, std::to_string(violations) + " violations over 50 random cases"};
}

Outcome auc_oracle() {
    std::mt19937_64 rng(35);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng() % 199;
        std::vector<double> s(n);
        std::vector<bool> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial % 2 ? std::uniform_real_distribution<double>(0, 1)(rng) : static_cast<double>(rng() % 10);
            y[i] = rng() % 4 == 0;
        }
        y[0] = true;
        y[n - 1] = false;
        double correct = 0.0, pairs = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (y[i] && !y[j]) {
                    pairs += 1.0;
                    correct += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
                }
        if (metrics::auc_roc(s, y) != correct / pairs) ++mismatches;
    }
    return {mismatches == 0, std::to_string(mismatches) + " of 50 differ from brute force"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient correctness", gradient_correctness},
        {"modularity identities", modularity_identities},
        {"forward-pass oracle parity", forward_parity},
        {"aggregation identities", aggregation_identities},
        {"end-to-end detection", end_to_end_detection},
        {"pipeline determinism", determinism},
        {"lambda sensitivity", lambda_contract},
        {"AUC oracle", auc_oracle},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << i + 1 << ": " << criteria[i].first << ": "
                  << o.detail << std::endl;
        failed += o.pass ? 0 : 1;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
