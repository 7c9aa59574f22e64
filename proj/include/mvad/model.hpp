#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvad/autodiff.hpp"
#include "mvad/decoders.hpp"
#include "mvad/encoders.hpp"
#include "mvad/fusion.hpp"
#include "mvad/graph.hpp"
#include "mvad/optim.hpp"

namespace mvad {

/// Layer widths and fusion settings. Everything needed to rebuild the
/// parameter layout of a model.
struct Architecture {
    std::size_t nodes = 0;
    std::vector<std::size_t> view_dims;
    std::vector<std::size_t> view_hidden{64, 32};
    std::vector<std::size_t> ae_hidden{128, 32};  // encoder widths; decoder mirrors back to `nodes`
    std::vector<std::size_t> community_hidden{64, 32};
    fusion::FusionMode fusion = fusion::FusionMode::concat;
    fusion::AggregationWeights weights;  // weighted mode only
    bool learn_fusion_weights = false;   // weighted mode only; softmax over trainable logits
    // Fusion sees H as a constant; the autoencoder then learns from γ‖B − B̂‖²_F only.
    bool isolate_autoencoder = true;

    std::size_t view_count() const { return view_dims.size(); }
    std::size_t attribute_dim() const {
        std::size_t s = 0;
        for (std::size_t d : view_dims) s += d;
        return s;
    }
    std::size_t view_width() const { return view_hidden.back(); }
    std::size_t community_width() const { return community_hidden.back(); }
    std::size_t latent_width() const { return ae_hidden.back(); }
    std::size_t krep_width() const { return community_width() + latent_width(); }

    bool needs_projection() const {
        return fusion == fusion::FusionMode::weighted && krep_width() != view_width();
    }

    std::size_t fused_width() const {
        return fusion == fusion::FusionMode::concat ? view_count() * view_width() + krep_width()
                                                    : view_width();
    }

    void validate() const {
        auto fail = [](const std::string& m) { throw std::invalid_argument("architecture: " + m); };
        if (nodes == 0) fail("node count must be positive");
        if (view_dims.empty()) fail("at least one view is required");
        if (view_hidden.empty() || ae_hidden.empty() || community_hidden.empty()) {
            fail("every branch needs at least one layer");
        }
        for (const auto* widths : {&view_dims, &view_hidden, &ae_hidden, &community_hidden})
            for (std::size_t w : *widths)
                if (w == 0) fail("layer widths must be positive");
        if (latent_width() >= nodes) {
            fail("autoencoder latent width " + std::to_string(latent_width()) +
                 " must be smaller than the node count " + std::to_string(nodes));
        }
        if (fusion == fusion::FusionMode::weighted && !learn_fusion_weights) {
            weights.validate();
            if (weights.alphas.size() != view_count()) {
                throw fusion::SimplexError("fusion weights: " + std::to_string(weights.alphas.size()) +
                                           " alphas for " + std::to_string(view_count()) + " views");
            }
        }
    }

    struct Slot {
        std::string name;
        std::size_t rows;
        std::size_t cols;
        bool is_weight;  // Glorot-initialized; otherwise zero-initialized
    };

    /// Every trainable tensor in its fixed storage order.
    std::vector<Slot> layout() const {
        validate();
        std::vector<Slot> s;
        for (std::size_t k = 0; k < view_count(); ++k) {
            std::size_t in = view_dims[k];
            for (std::size_t l = 0; l < view_hidden.size(); ++l) {
                s.push_back({view_gcn_name(k, l), in, view_hidden[l], true});
                in = view_hidden[l];
            }
        }
        std::size_t in = nodes;
        for (std::size_t l = 0; l < ae_hidden.size(); ++l) {
            s.push_back({ae_name("enc", l, "weight"), in, ae_hidden[l], true});
            s.push_back({ae_name("enc", l, "bias"), 1, ae_hidden[l], false});
            in = ae_hidden[l];
        }
        for (std::size_t l = 0; l < ae_hidden.size(); ++l) {
            const std::size_t out = l + 1 < ae_hidden.size() ? ae_hidden[ae_hidden.size() - 2 - l] : nodes;
            s.push_back({ae_name("dec", l, "weight"), in, out, true});
            s.push_back({ae_name("dec", l, "bias"), 1, out, false});
            in = out;
        }
        in = attribute_dim();
        for (std::size_t l = 0; l < community_hidden.size(); ++l) {
            s.push_back({community_gcn_name(l), in, community_hidden[l], true});
            in = community_hidden[l];
        }
        if (needs_projection()) s.push_back({"fusion.projection", krep_width(), view_width(), true});
        if (fusion == fusion::FusionMode::weighted && learn_fusion_weights) {
            s.push_back({"fusion.logits", 1, view_count() + 1, false});
        }
        s.push_back({"attr_decoder.weight", fused_width(), attribute_dim(), true});
        s.push_back({"attr_decoder.bias", 1, attribute_dim(), false});
        return s;
    }

    static std::string view_gcn_name(std::size_t k, std::size_t l) {
        return "view" + std::to_string(k) + ".gcn" + std::to_string(l) + ".weight";
    }
    static std::string ae_name(const char* part, std::size_t l, const char* kind) {
        return std::string("ae.") + part + std::to_string(l) + "." + kind;
    }
    static std::string community_gcn_name(std::size_t l) {
        return "community.gcn" + std::to_string(l) + ".weight";
    }

    friend bool operator==(const Architecture& a, const Architecture& b) {
        return a.nodes == b.nodes && a.view_dims == b.view_dims && a.view_hidden == b.view_hidden &&
               a.ae_hidden == b.ae_hidden && a.community_hidden == b.community_hidden &&
               a.fusion == b.fusion && a.weights.alphas == b.weights.alphas &&
               a.weights.beta == b.weights.beta && a.learn_fusion_weights == b.learn_fusion_weights &&
               a.isolate_autoencoder == b.isolate_autoencoder;
    }
};

/// Trained (or freshly initialized) model: layout, loss weighting and values.
struct ModelParams {
    Architecture arch;
    decoders::LossConfig loss;
    ParamSet values;

    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        return a.arch == b.arch && a.loss.lambda == b.loss.lambda && a.loss.gamma == b.loss.gamma &&
               a.values == b.values;
    }
};

/// Glorot-uniform weights with bound √(6/(fan_in+fan_out)); zero biases.
inline ModelParams init_params(const Architecture& arch, const decoders::LossConfig& loss,
                               std::uint64_t seed) {
    loss.validate();
    ModelParams p{arch, loss, {}};
    std::mt19937_64 rng(seed);
    for (const auto& slot : arch.layout()) {
        Matrix m(slot.rows, slot.cols);
        if (slot.is_weight) {
            const double bound = std::sqrt(6.0 / static_cast<double>(slot.rows + slot.cols));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (double& v : m.data()) v = dist(rng);
        }
        p.values.add(slot.name, std::move(m));
    }
    return p;
}

/// Graph-derived constant inputs, computed once per dataset.
struct GraphTensors {
    Matrix adjacency;
    Matrix a_hat;
    Matrix modularity;
    Matrix x_cat;
    std::vector<Matrix> views;

    static GraphTensors from(const MultiViewGraph& g) {
        g.validate();
        return {g.adjacency, normalize_adjacency(g).matrix(), modularity_matrix(g).b,
                g.concatenated_attributes(), g.views};
    }
};

/// Every intermediate of one forward pass, as tape nodes.
struct ForwardPass {
    std::map<std::string, ad::Var> params;
    std::vector<ad::Var> u;
    ad::Var z, h, krep, q;
    ad::Var a_tilde, x_tilde;
    std::optional<ad::Var> b_hat;
    ad::Var structure_term;  // (1 − λ)‖A − Ã‖²_F
    ad::Var attribute_term;  // λ‖X − X̃‖²_F
    ad::Var ae_term;         // γ‖B − B̂‖²_F
    ad::Var total;
};

/// Registers parameters (trainable when `trainable`, constants otherwise) and
/// evaluates the full model and objective on `tape`.
inline ForwardPass forward(ad::Tape& tape, const GraphTensors& in, const ModelParams& model,
                           bool trainable = true) {
    const Architecture& arch = model.arch;
    if (in.adjacency.rows() != arch.nodes) {
        throw ShapeError("model expects " + std::to_string(arch.nodes) + " nodes, graph has " +
                         std::to_string(in.adjacency.rows()));
    }
    if (in.views.size() != arch.view_count()) {
        throw ShapeError("model expects " + std::to_string(arch.view_count()) + " views, graph has " +
                         std::to_string(in.views.size()));
    }
    for (std::size_t k = 0; k < in.views.size(); ++k)
        if (in.views[k].cols() != arch.view_dims[k]) {
            throw ShapeError("view " + std::to_string(k) + " has width " + std::to_string(in.views[k].cols()) +
                             ", model expects " + std::to_string(arch.view_dims[k]));
        }

    ForwardPass f;
    for (const auto& [name, value] : model.values)
        f.params.emplace(name, trainable ? tape.parameter(name, value) : tape.constant(value));
    auto p = [&f](const std::string& name) { return f.params.at(name); };

    const ad::Var a_hat = tape.constant(in.a_hat);
    const ad::Var b = tape.constant(in.modularity);
    const ad::Var a = tape.constant(in.adjacency);
    const ad::Var x_cat = tape.constant(in.x_cat);

    std::vector<ad::Var> views;
    std::vector<std::vector<ad::Var>> stacks(arch.view_count());
    for (std::size_t k = 0; k < arch.view_count(); ++k) {
        views.push_back(tape.constant(in.views[k]));
        for (std::size_t l = 0; l < arch.view_hidden.size(); ++l) stacks[k].push_back(p(Architecture::view_gcn_name(k, l)));
    }
    f.u = encoders::multiview_encode(a_hat, views, stacks);

    std::vector<encoders::DenseVars> enc, dec;
    for (std::size_t l = 0; l < arch.ae_hidden.size(); ++l) {
        enc.push_back({p(Architecture::ae_name("enc", l, "weight")), p(Architecture::ae_name("enc", l, "bias"))});
        dec.push_back({p(Architecture::ae_name("dec", l, "weight")), p(Architecture::ae_name("dec", l, "bias"))});
    }
    f.h = encoders::ae_encode(b, enc);

    std::vector<ad::Var> community;
    for (std::size_t l = 0; l < arch.community_hidden.size(); ++l) community.push_back(p(Architecture::community_gcn_name(l)));
    f.z = encoders::community_gcn(a_hat, x_cat, community);
    f.krep = encoders::combine_community(f.z, arch.isolate_autoencoder ? tape.constant(f.h.value()) : f.h);

    std::optional<ad::Var> projection;
    if (arch.needs_projection()) projection = p("fusion.projection");
    if (arch.fusion == fusion::FusionMode::concat) {
        f.q = fusion::aggregate_concat(f.u, f.krep);
    } else if (arch.learn_fusion_weights) {
        f.q = fusion::aggregate_weighted_learned(f.u, f.krep, p("fusion.logits"), projection);
    } else {
        f.q = fusion::aggregate_weighted(f.u, f.krep, arch.weights, projection);
    }

    f.a_tilde = decoders::structure_decode(f.q);
    f.x_tilde = decoders::attribute_decode(f.q, p("attr_decoder.weight"), p("attr_decoder.bias"));
    const auto joint = decoders::joint_loss(a, f.a_tilde, x_cat, f.x_tilde, model.loss);
    f.structure_term = ad::scale(1.0 - model.loss.lambda, joint.structure);
    f.attribute_term = ad::scale(model.loss.lambda, joint.attribute);
    if (model.loss.gamma > 0.0) {
        f.b_hat = encoders::ae_decode(f.h, dec);
        f.ae_term = ad::scale(model.loss.gamma, encoders::ae_loss(b, *f.b_hat));
    } else {
        f.ae_term = tape.constant(Matrix(1, 1, 0.0));
    }
    f.total = ad::add(ad::add(f.structure_term, f.attribute_term), f.ae_term);
    return f;
}

/// Per-node anomaly report for a model on its graph.
inline decoders::AnomalyReport score(const GraphTensors& in, const ModelParams& model) {
    ad::Tape tape;
    const ForwardPass f = forward(tape, in, model, false);
    return decoders::node_scores(in.adjacency, f.a_tilde.value(), in.x_cat, f.x_tilde.value(), model.loss);
}

inline decoders::AnomalyReport score(const MultiViewGraph& g, const ModelParams& model) {
    return score(GraphTensors::from(g), model);
}

}  // namespace mvad
