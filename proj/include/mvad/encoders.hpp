#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mvad/autodiff.hpp"
#include "mvad/graph.hpp"
#include "mvad/matrix.hpp"

// Representation branches: one GCN per attribute view, and the community
// branch made of a modularity autoencoder plus a GCN over all attributes.
// Every operation has a tape form (used for training) and a plain-matrix
// form that evaluates the same code on a scratch tape.
namespace mvad::encoders {

using ad::Tape;
using ad::Var;

/// Weight and bias of a fully connected layer, applied as relu(H·W + b).
struct DenseVars {
    Var weight;
    Var bias;
};

/// relu(Â · H · W). The product is associated so the n×n factor multiplies
/// the narrower operand.
inline Var gcn_layer(const Var& a_hat, const Var& h, const Var& w) {
    if (a_hat.cols() != h.rows() || h.cols() != w.rows()) {
        throw ShapeError("gcn_layer: cannot chain " + a_hat.value().shape() + " * " +
                         h.value().shape() + " * " + w.value().shape());
    }
    if (w.cols() < h.cols()) return ad::relu(ad::matmul(a_hat, ad::matmul(h, w)));
    return ad::relu(ad::matmul(ad::matmul(a_hat, h), w));
}

inline Var gcn_stack(const Var& a_hat, const Var& x, std::span<const Var> weights) {
    if (weights.empty()) throw ShapeError("gcn_stack: no layers");
    Var h = x;
    for (const Var& w : weights) h = gcn_layer(a_hat, h, w);
    return h;
}

/// U_k = GCN_k(Â, X^k); views share no parameters.
inline std::vector<Var> multiview_encode(const Var& a_hat, std::span<const Var> views,
                                         std::span<const std::vector<Var>> stacks) {
    if (views.size() != stacks.size()) {
        throw ShapeError("multiview_encode: " + std::to_string(views.size()) + " views but " +
                         std::to_string(stacks.size()) + " GCN stacks");
    }
    std::vector<Var> out;
    out.reserve(views.size());
    for (std::size_t k = 0; k < views.size(); ++k) out.push_back(gcn_stack(a_hat, views[k], stacks[k]));
    return out;
}

inline Var dense_relu(const Var& h, const DenseVars& layer) {
    return ad::relu(ad::add_row(ad::matmul(h, layer.weight), layer.bias));
}

/// H = encoder layers applied to the modularity matrix (one row per node).
inline Var ae_encode(const Var& modularity, std::span<const DenseVars> encoder) {
    if (encoder.empty()) throw ShapeError("ae_encode: no layers");
    Var h = modularity;
    for (const auto& layer : encoder) h = dense_relu(h, layer);
    return h;
}

/// B̂ = decoder layers applied to the latent H.
inline Var ae_decode(const Var& latent, std::span<const DenseVars> decoder) {
    if (decoder.empty()) throw ShapeError("ae_decode: no layers");
    Var h = latent;
    for (const auto& layer : decoder) h = dense_relu(h, layer);
    return h;
}

/// ‖B − B̂‖²_F
inline Var ae_loss(const Var& b, const Var& b_hat) {
    require_same_shape(b.value(), b_hat.value(), "ae_loss");
    return ad::frobenius_sq(ad::sub(b, b_hat));
}

/// Z = GCN over the column-concatenated attributes of all views.
inline Var community_gcn(const Var& a_hat, const Var& x_cat, std::span<const Var> weights) {
    return gcn_stack(a_hat, x_cat, weights);
}

/// K = [Z ‖ H]
inline Var combine_community(const Var& z, const Var& h) {
    if (z.rows() != h.rows()) {
        throw ShapeError("combine_community: row mismatch " + z.value().shape() + " vs " +
                         h.value().shape());
    }
    if (h.cols() == 0) return z;
    return ad::concat_cols({z, h});
}

// ---------------------------------------------------------------------------
// Plain-matrix forms.

/// Weight matrices of one GCN, input dimension first.
struct GcnStack {
    std::vector<Matrix> layers;

    std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().rows(); }
    std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().cols(); }

    void validate() const {
        if (layers.empty()) throw ShapeError("GCN stack has no layers");
        for (std::size_t l = 1; l < layers.size(); ++l)
            if (layers[l - 1].cols() != layers[l].rows()) {
                throw ShapeError("GCN layer " + std::to_string(l) + " expects input width " +
                                 std::to_string(layers[l].rows()) + ", previous layer gives " +
                                 std::to_string(layers[l - 1].cols()));
            }
    }
};

struct DenseLayer {
    Matrix weight;  // in×out
    Matrix bias;    // 1×out
};

struct AutoencoderParams {
    std::vector<DenseLayer> encoder;
    std::vector<DenseLayer> decoder;
};

struct EmbeddingBundle {
    std::vector<Matrix> u;
    Matrix z;
    Matrix h;
    Matrix krep;
};

inline Matrix gcn_layer(const NormalizedAdjacency& a_hat, const Matrix& h, const Matrix& w) {
    Tape t;
    return gcn_layer(t.constant(a_hat.matrix()), t.constant(h), t.constant(w)).value();
}

inline std::vector<Var> constants(Tape& t, const std::vector<Matrix>& ms) {
    std::vector<Var> out;
    for (const auto& m : ms) out.push_back(t.constant(m));
    return out;
}

inline std::vector<DenseVars> constants(Tape& t, const std::vector<DenseLayer>& layers) {
    std::vector<DenseVars> out;
    for (const auto& l : layers) out.push_back({t.constant(l.weight), t.constant(l.bias)});
    return out;
}

inline std::vector<Matrix> multiview_encode(const MultiViewGraph& g, const NormalizedAdjacency& a_hat,
                                            const std::vector<GcnStack>& stacks) {
    Tape t;
    const Var a = t.constant(a_hat.matrix());
    std::vector<Var> views = constants(t, g.views);
    std::vector<std::vector<Var>> ws;
    for (const auto& s : stacks) {
        s.validate();
        ws.push_back(constants(t, s.layers));
    }
    std::vector<Matrix> out;
    for (const Var& u : multiview_encode(a, views, ws)) out.push_back(u.value());
    return out;
}

inline Matrix ae_encode(const ModularityMatrix& b, const AutoencoderParams& p) {
    Tape t;
    const auto enc = constants(t, p.encoder);
    return ae_encode(t.constant(b.b), enc).value();
}

inline Matrix ae_decode(const Matrix& h, const AutoencoderParams& p) {
    Tape t;
    const auto dec = constants(t, p.decoder);
    return ae_decode(t.constant(h), dec).value();
}

inline double ae_loss(const Matrix& b, const Matrix& b_hat) {
    require_same_shape(b, b_hat, "ae_loss");
    return frobenius_sq(b - b_hat);
}

inline Matrix community_gcn(const NormalizedAdjacency& a_hat, const Matrix& x_cat, const GcnStack& stack) {
    stack.validate();
    Tape t;
    const auto ws = constants(t, stack.layers);
    return community_gcn(t.constant(a_hat.matrix()), t.constant(x_cat), ws).value();
}

inline Matrix combine_community(const Matrix& z, const Matrix& h) {
    Tape t;
    return combine_community(t.constant(z), t.constant(h)).value();
}

}  // namespace mvad::encoders
