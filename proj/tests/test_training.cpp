#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace mvad;
using training::TrainConfig;

namespace {

TrainConfig tiny_config() {
    TrainConfig c;
    c.epochs = 5;
    c.arch.view_hidden = {6, 4};
    c.arch.ae_hidden = {6, 3};
    c.arch.community_hidden = {5, 4};
    return c;
}

MultiViewGraph tiny_graph(std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    auto g = test::random_graph(12, {3, 2}, 0.3, rng);
    g.labels = std::vector<AnomalyKind>(12, AnomalyKind::normal);
    (*g.labels)[3] = AnomalyKind::global;
    return g;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(InitParams, DeterministicAndBounded) {
    const auto arch = tiny_config().architecture_for(tiny_graph());
    const auto a = init_params(arch, {}, 7), b = init_params(arch, {}, 7), c = init_params(arch, {}, 8);
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a.values == c.values);
    const auto layout = arch.layout();
    ASSERT_EQ(a.values.size(), layout.size());
    for (const auto& slot : layout) {
        const Matrix& m = a.values.at(slot.name);
        ASSERT_EQ(m.rows(), slot.rows) << slot.name;
        ASSERT_EQ(m.cols(), slot.cols) << slot.name;
        const double bound = std::sqrt(6.0 / static_cast<double>(slot.rows + slot.cols));
        for (double v : m.data()) {
            if (slot.is_weight) {
                EXPECT_LE(std::abs(v), bound);
            } else {
                EXPECT_EQ(v, 0.0) << slot.name;
            }
        }
    }
}

TEST(Architecture, Widths) {
    Architecture a;
    a.nodes = 500;
    a.view_dims = {16, 16};
    EXPECT_EQ(a.krep_width(), 64u);
    EXPECT_EQ(a.fused_width(), 128u);
    a.fusion = fusion::FusionMode::weighted;
    a.weights = fusion::AggregationWeights::uniform(2);
    EXPECT_EQ(a.fused_width(), 32u);
    EXPECT_TRUE(a.needs_projection());
    a.nodes = 32;
    EXPECT_THROW(a.validate(), std::invalid_argument);
}

TEST(Forward, TotalIsSumOfComponents) {
    const auto g = tiny_graph();
    auto cfg = tiny_config();
    const auto model = init_params(cfg.architecture_for(g), {0.3, 0.2}, 3);
    ad::Tape t;
    const auto f = forward(t, GraphTensors::from(g), model);
    const double sum = f.structure_term.value()(0, 0) + f.attribute_term.value()(0, 0) + f.ae_term.value()(0, 0);
    EXPECT_NEAR(f.total.value()(0, 0), sum, 1e-9);
    EXPECT_EQ(f.q.cols(), model.arch.fused_width());
    EXPECT_EQ(f.a_tilde.rows(), 12u);
    EXPECT_EQ(f.x_tilde.cols(), 5u);
}

TEST(Forward, FullObjectiveGradients) {
    const auto g = tiny_graph(2);
    for (int variant = 0; variant < 3; ++variant) {
        auto cfg = tiny_config();
        cfg.arch.isolate_autoencoder = false;
        if (variant >= 1) cfg.arch.fusion = fusion::FusionMode::weighted;
        if (variant == 2) cfg.arch.learn_fusion_weights = true;
        std::mt19937_64 rng(variant);
        const auto model = test::with_random_biases(init_params(cfg.architecture_for(g), {0.4, 0.1}, 5), rng);
        const auto r = test::model_gradient_check(GraphTensors::from(g), model);
        EXPECT_EQ(r.failures, 0u) << "variant " << variant << ": " << r.worst_entry;
        EXPECT_EQ(r.checked, model.values.scalar_count());
    }
}

TEST(Forward, IsolatedAutoencoderLearnsOnlyFromItsOwnLoss) {
    const auto g = tiny_graph(5);
    auto cfg = tiny_config();
    std::mt19937_64 rng(9);
    const auto isolated = test::with_random_biases(init_params(cfg.architecture_for(g), {0.4, 0.2}, 5), rng);
    ASSERT_TRUE(isolated.arch.isolate_autoencoder);
    auto joint = isolated;
    joint.arch.isolate_autoencoder = false;
    const auto in = GraphTensors::from(g);

    ad::Tape ti, tj;
    const auto fi = forward(ti, in, isolated), fj = forward(tj, in, joint);
    EXPECT_EQ(fi.total.value(), fj.total.value());
    const auto gi = ti.backward(fi.total), gj = tj.backward(fj.total);

    ad::Tape ta;
    const auto fa = forward(ta, in, isolated);
    const auto ga = ta.backward(fa.ae_term);
    for (const auto& [name, grad] : gi) {
        if (name.rfind("ae.", 0) == 0) {
            EXPECT_LE(max_abs_diff(grad, ga.at(name)), 1e-12) << name;
        } else {
            EXPECT_EQ(grad, gj.at(name)) << name;
        }
    }
    // With the coupling, the reconstruction terms reach the encoder too.
    EXPECT_GT(max_abs_diff(gj.at("ae.enc0.weight"), ga.at("ae.enc0.weight")), 1e-9);
}

TEST(Train, HistoryLengthAndComponents) {
    const auto g = tiny_graph();
    auto cfg = tiny_config();
    cfg.epochs = 1;
    auto r = training::train(g, cfg);
    ASSERT_EQ(r.history.size(), 1u);
    cfg.epochs = 4;
    cfg.loss.gamma = 0.0;
    r = training::train(g, cfg);
    ASSERT_EQ(r.history.size(), 4u);
    for (const auto& e : r.history) {
        EXPECT_EQ(e.autoencoder, 0.0);
        EXPECT_NEAR(e.total, e.structure + e.attribute + e.autoencoder, 1e-9);
    }
}

TEST(Train, VanishingLearningRateFreezesLoss) {
    auto cfg = tiny_config();
    cfg.lr = 1e-300;
    cfg.epochs = 5;
    const auto r = training::train(tiny_graph(), cfg);
    for (const auto& e : r.history) EXPECT_NEAR(e.total, r.history.front().total, 1e-12);
}

TEST(Train, Deterministic) {
    auto cfg = tiny_config();
    cfg.epochs = 10;
    const auto a = training::train(tiny_graph(), cfg), b = training::train(tiny_graph(), cfg);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.history, b.history);
}

TEST(Train, LossDecreasesInEveryFusionMode) {
    const auto g = tiny_graph(3);
    for (int variant = 0; variant < 4; ++variant) {
        auto cfg = tiny_config();
        cfg.epochs = 60;
        cfg.lr = 1e-2;
        if (variant >= 1) cfg.arch.fusion = fusion::FusionMode::weighted;
        if (variant == 2) cfg.arch.learn_fusion_weights = true;
        if (variant == 3) cfg.optimizer = training::OptimizerKind::sgd, cfg.lr = 1e-4;
        const auto r = training::train(g, cfg);
        EXPECT_LT(r.history.back().total, r.history.front().total) << "variant " << variant;
    }
}

TEST(Train, PretrainingChangesOnlyAutoencoder) {
    const auto g = tiny_graph(4);
    auto cfg = tiny_config();
    auto model = init_params(cfg.architecture_for(g), cfg.loss, cfg.seed);
    const auto before = model;
    cfg.pretrain_ae_epochs = 20;
    training::detail::pretrain_autoencoder(GraphTensors::from(g), model, cfg);
    for (const auto& [name, m] : model.values) {
        if (name.rfind("ae.", 0) == 0) {
            EXPECT_NE(m, before.values.at(name)) << name;
        } else {
            EXPECT_EQ(m, before.values.at(name)) << name;
        }
    }
}

TEST(Train, InvalidConfigRejected) {
    auto cfg = tiny_config();
    cfg.loss.lambda = 1.5;
    EXPECT_THROW(training::train(tiny_graph(), cfg), std::invalid_argument);
    cfg = tiny_config();
    cfg.lr = 0.0;
    EXPECT_THROW(training::train(tiny_graph(), cfg), std::invalid_argument);
}

TEST(Train, DivergenceReportsEpoch) {
    auto cfg = tiny_config();
    cfg.optimizer = training::OptimizerKind::sgd;
    cfg.lr = 1e200;
    cfg.epochs = 10;
    try {
        training::train(tiny_graph(), cfg);
        FAIL();
    } catch (const training::TrainingError& e) {
        EXPECT_GE(e.epoch(), 1u);
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    }
}

TEST(Checkpoint, BitwiseRoundTripAndSameScores) {
    const auto g = tiny_graph();
    auto cfg = tiny_config();
    const auto r = training::train(g, cfg);
    test::TempDir dir("ckpt");
    training::save_checkpoint(r.params, dir.path() / "m.ckpt", &cfg);
    const auto back = training::load_checkpoint(dir.path() / "m.ckpt");
    EXPECT_EQ(back, r.params);
    const auto s1 = score(g, r.params), s2 = score(g, back);
    EXPECT_EQ(s1.scores, s2.scores);
    EXPECT_EQ(s1.ranking, s2.ranking);
    training::save_checkpoint(back, dir.path() / "again.ckpt");
    training::save_checkpoint(r.params, dir.path() / "plain.ckpt");
    EXPECT_EQ(slurp(dir.path() / "again.ckpt"), slurp(dir.path() / "plain.ckpt"));

    auto joint = r.params;
    joint.arch.isolate_autoencoder = false;
    training::save_checkpoint(joint, dir.path() / "joint.ckpt");
    EXPECT_FALSE(training::load_checkpoint(dir.path() / "joint.ckpt").arch.isolate_autoencoder);
}

TEST(Checkpoint, TamperedShapeRejected) {
    const auto g = tiny_graph();
    const auto model = init_params(tiny_config().architecture_for(g), {}, 1);
    test::TempDir dir("ckpt_bad");
    const auto path = dir.path() / "m.ckpt";
    training::save_checkpoint(model, path);
    std::string bytes = slurp(path);
    const std::string needle = "\"view_hidden\":[6,4]";
    const auto at = bytes.find(needle);
    ASSERT_NE(at, std::string::npos);
    bytes.replace(at, needle.size(), "\"view_hidden\":[6,5]");
    io::write_file(path, bytes);
    try {
        training::load_checkpoint(path);
        FAIL();
    } catch (const training::CheckpointError& e) {
        EXPECT_NE(std::string(e.what()).find("checkpoint shape mismatch"), std::string::npos) << e.what();
    }

    training::save_checkpoint(model, path);
    bytes = slurp(path);
    bytes.resize(bytes.size() - 8);
    io::write_file(path, bytes);
    EXPECT_THROW(training::load_checkpoint(path), training::CheckpointError);
}

TEST(Checkpoint, VersionAndMagicChecked) {
    const auto model = init_params(tiny_config().architecture_for(tiny_graph()), {}, 1);
    test::TempDir dir("ckpt_ver");
    const auto path = dir.path() / "m.ckpt";
    training::save_checkpoint(model, path);
    std::string bytes = slurp(path);
    const auto at = bytes.find("\"version\":1");
    ASSERT_NE(at, std::string::npos);
    bytes[at + 10] = '9';
    io::write_file(path, bytes);
    try {
        training::load_checkpoint(path);
        FAIL();
    } catch (const training::CheckpointError& e) {
        EXPECT_NE(std::string(e.what()).find("version mismatch"), std::string::npos) << e.what();
    }
    io::write_file(path, "not a checkpoint at all");
    EXPECT_THROW(training::load_checkpoint(path), training::CheckpointError);
}
