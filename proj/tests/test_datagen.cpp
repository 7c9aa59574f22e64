#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace mvad;
using datagen::GenConfig;

namespace {

GenConfig small_config() {
    GenConfig c;
    c.n = 60;
    c.communities = 3;
    c.p_in = 0.3;
    c.p_out = 0.02;
    c.view_dims = {4, 3};
    c.anomaly_fraction = 0.05;
    c.clique_size = 3;
    c.seed = 5;
    return c;
}

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

std::size_t count_kind(const MultiViewGraph& g, AnomalyKind k) {
    return static_cast<std::size_t>(std::count(g.labels->begin(), g.labels->end(), k));
}

}  // namespace

TEST(GenerateBase, SameSeedSameGraph) {
    std::mt19937_64 r1(3), r2(3);
    EXPECT_EQ(datagen::generate_base(small_config(), r1).graph, datagen::generate_base(small_config(), r2).graph);
    std::mt19937_64 r3(4);
    EXPECT_NE(datagen::generate_base(small_config(), r1).graph, datagen::generate_base(small_config(), r3).graph);
}

TEST(GenerateBase, DegenerateProbabilitiesGiveDisjointCliques) {
    auto c = small_config();
    c.n = 10;
    c.communities = 2;
    c.p_in = 1.0;
    c.p_out = 0.0;
    std::mt19937_64 rng(1);
    const auto g = datagen::generate_base(c, rng);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j) {
            if (i == j) continue;
            EXPECT_EQ(g.graph.has_edge(i, j), g.community[i] == g.community[j]) << i << "," << j;
        }
    EXPECT_EQ(g.graph.edge_count(), 2u * 10u);
}

TEST(GenerateBase, EmpiricalDensitiesNearExpectation) {
    GenConfig c;
    c.n = 500;
    c.communities = 5;
    c.p_in = 0.1;
    c.p_out = 0.005;
    std::mt19937_64 rng(123);
    const auto g = datagen::generate_base(c, rng);
    double intra = 0, intra_pairs = 0, inter = 0, inter_pairs = 0;
    for (std::size_t i = 0; i < c.n; ++i)
        for (std::size_t j = i + 1; j < c.n; ++j) {
            const bool same = g.community[i] == g.community[j];
            (same ? intra_pairs : inter_pairs) += 1;
            if (g.graph.has_edge(i, j)) (same ? intra : inter) += 1;
        }
    EXPECT_GE(intra / intra_pairs, 0.08);
    EXPECT_LE(intra / intra_pairs, 0.12);
    EXPECT_GE(inter / inter_pairs, 0.003);
    EXPECT_LE(inter / inter_pairs, 0.007);
    for (AnomalyKind k : *g.graph.labels) EXPECT_EQ(k, AnomalyKind::normal);
}

TEST(GenerateBase, InvalidConfigsRejected) {
    auto c = small_config();
    c.p_in = 0.0;
    c.p_out = 0.0;
    std::mt19937_64 rng(1);
    EXPECT_THROW(datagen::generate_base(c, rng), datagen::GenError);
    c = small_config();
    c.p_out = 0.5;
    c.p_in = 0.4;
    EXPECT_THROW(c.validate(), datagen::GenError);
    c = small_config();
    c.clique_size = 2;
    EXPECT_THROW(c.validate(), datagen::GenError);
    c = small_config();
    c.anomaly_fraction = 0.4;
    EXPECT_THROW(c.validate(), datagen::GenError);
    // Every community a single node: p_in never applies, p_out = 0.
    c = small_config();
    c.n = 4;
    c.communities = 4;
    c.p_out = 0.0;
    c.anomaly_fraction = 0.0;
    EXPECT_THROW(datagen::generate_base(c, rng), datagen::GenError);
}

TEST(InjectGlobal, ZeroCountLeavesGraphUnchanged) {
    std::mt19937_64 rng(1);
    auto g = datagen::generate_base(small_config(), rng);
    const auto before = g.graph;
    EXPECT_TRUE(datagen::inject_global(g, 0, 6.0, rng).empty());
    EXPECT_EQ(g.graph, before);
}

TEST(InjectGlobal, InjectedNodesFarFromGlobalMean) {
    std::mt19937_64 rng(2);
    auto g = datagen::generate_base(small_config(), rng);
    std::vector<datagen::ViewStats> stats;
    for (const auto& v : g.graph.views) stats.push_back(datagen::view_statistics(v));
    const double shift = 6.0;
    const auto chosen = datagen::inject_global(g, 4, shift, rng);
    ASSERT_EQ(chosen.size(), 4u);
    EXPECT_EQ(count_kind(g.graph, AnomalyKind::global), 4u);
    for (std::size_t node : chosen)
        for (std::size_t k = 0; k < g.graph.views.size(); ++k) {
            const double d = distance(g.graph.views[k].row(node), stats[k].mean);
            EXPECT_GT(d, shift * stats[k].sigma * 0.5);
            double net = 0.0;
            for (std::size_t c = 0; c < stats[k].mean.size(); ++c) net += g.graph.views[k](node, c) - stats[k].mean[c];
            EXPECT_GT(net, 0.0);
        }
}

TEST(InjectGlobal, InsufficientNodes) {
    std::mt19937_64 rng(2);
    auto g = datagen::generate_base(small_config(), rng);
    EXPECT_THROW(datagen::inject_global(g, 61, 6.0, rng), datagen::GenError);
}

TEST(InjectStructural, ChosenNodesFormClique) {
    std::mt19937_64 rng(3);
    auto g = datagen::generate_base(small_config(), rng);
    const auto views_before = g.graph.views;
    const auto chosen = datagen::inject_structural(g, 3, 3, rng);
    ASSERT_EQ(chosen.size(), 3u);
    for (std::size_t a : chosen)
        for (std::size_t b : chosen)
            if (a != b) EXPECT_TRUE(g.graph.has_edge(a, b));
    EXPECT_EQ(g.graph.views, views_before);
    EXPECT_EQ(count_kind(g.graph, AnomalyKind::structural), 3u);
    g.graph.validate();
}

TEST(InjectStructural, ZeroCountAndGroupDensity) {
    std::mt19937_64 rng(4);
    auto g = datagen::generate_base(small_config(), rng);
    const auto before = g.graph;
    EXPECT_TRUE(datagen::inject_structural(g, 0, 5, rng).empty());
    EXPECT_EQ(g.graph, before);

    const auto chosen = datagen::inject_structural(g, 5, 5, rng);
    std::size_t edges = 0;
    for (std::size_t a = 0; a < chosen.size(); ++a)
        for (std::size_t b = a + 1; b < chosen.size(); ++b) edges += g.graph.has_edge(chosen[a], chosen[b]);
    EXPECT_EQ(edges, 5u * 4u / 2u);  // density 1.0, versus p_in in the base graph
    EXPECT_THROW(datagen::inject_structural(g, 1, 5, rng), datagen::GenError);
}

TEST(InjectStructural, SplitsIntoNearEqualCliques) {
    std::mt19937_64 rng(5);
    auto c = small_config();
    c.p_in = 0.01;
    c.p_out = 0.0;
    auto g = datagen::generate_base(c, rng);
    const auto before = g.graph.adjacency;
    const auto chosen = datagen::inject_structural(g, 7, 3, rng);
    // ⌈7/3⌉ = 3 groups of sizes 3, 2, 2: 3 + 1 + 1 clique edges at most new.
    std::size_t added = 0;
    for (std::size_t a = 0; a < chosen.size(); ++a)
        for (std::size_t b = a + 1; b < chosen.size(); ++b)
            added += g.graph.has_edge(chosen[a], chosen[b]) && before(chosen[a], chosen[b]) == 0.0;
    EXPECT_LE(added, 5u);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b) EXPECT_TRUE(g.graph.has_edge(chosen[a], chosen[b]));
}

TEST(InjectCommunity, ZeroCountAndStructureUntouched) {
    std::mt19937_64 rng(6);
    auto g = datagen::generate_base(small_config(), rng);
    const auto before = g.graph;
    EXPECT_TRUE(datagen::inject_community(g, 0, rng).empty());
    EXPECT_EQ(g.graph, before);
    datagen::inject_community(g, 5, rng);
    EXPECT_EQ(g.graph.adjacency, before.adjacency);
    EXPECT_EQ(count_kind(g.graph, AnomalyKind::community), 5u);
}

TEST(InjectCommunity, AttributesNearerDonorMean) {
    std::mt19937_64 rng(7);
    auto c = small_config();
    c.view_dims = {16, 16};
    auto g = datagen::generate_base(c, rng);
    std::vector<std::size_t> donors;
    const auto chosen = datagen::inject_community(g, 6, rng, &donors);
    ASSERT_EQ(donors.size(), chosen.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const std::size_t own = g.community[chosen[i]];
        EXPECT_NE(donors[i], own);
        for (std::size_t k = 0; k < g.graph.views.size(); ++k) {
            const auto row = g.graph.views[k].row(chosen[i]);
            EXPECT_LT(distance(row, g.community_means[k].row(donors[i])),
                      distance(row, g.community_means[k].row(own)));
        }
    }
}

TEST(InjectCommunity, SingleCommunityRejected) {
    auto c = small_config();
    c.communities = 1;
    c.p_out = 0.0;
    std::mt19937_64 rng(8);
    auto g = datagen::generate_base(c, rng);
    try {
        datagen::inject_community(g, 2, rng);
        FAIL();
    } catch (const datagen::GenError& e) {
        EXPECT_STREQ(e.what(), "community anomalies require >=2 communities");
    }
}

TEST(Generate, PipelineIsPureFunctionOfConfig) {
    const auto c = small_config();
    test::TempDir a("gen_a"), b("gen_b");
    io::save_dataset(datagen::generate(c).graph, a.path());
    io::save_dataset(datagen::generate(c).graph, b.path());
    for (const char* f : {"meta.json", "edges.tsv", "view_0.csv", "view_1.csv", "labels.csv"}) {
        std::ifstream fa(a.path() / f, std::ios::binary), fb(b.path() / f, std::ios::binary);
        std::stringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        EXPECT_EQ(sa.str(), sb.str()) << f;
    }
}

TEST(Generate, LabelTotalsMatchRequest) {
    const auto c = small_config();
    const auto g = datagen::generate(c);
    const std::size_t per = c.anomalies_per_type();
    EXPECT_EQ(per, 3u);
    EXPECT_EQ(count_kind(g.graph, AnomalyKind::global), per);
    EXPECT_EQ(count_kind(g.graph, AnomalyKind::structural), per);
    EXPECT_EQ(count_kind(g.graph, AnomalyKind::community), per);
    EXPECT_EQ(count_kind(g.graph, AnomalyKind::normal), c.n - 3 * per);
    g.graph.validate();
}
