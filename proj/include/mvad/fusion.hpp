#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mvad/autodiff.hpp"
#include "mvad/matrix.hpp"

namespace mvad::fusion {

using ad::Tape;
using ad::Var;

enum class FusionMode { concat, weighted };

inline std::string_view to_string(FusionMode m) { return m == FusionMode::concat ? "concat" : "weighted"; }

inline FusionMode parse_fusion_mode(std::string_view s) {
    if (s == "concat") return FusionMode::concat;
    if (s == "weighted") return FusionMode::weighted;
    throw std::invalid_argument("fusion mode must be 'concat' or 'weighted', got '" + std::string(s) + "'");
}

class SimplexError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Convex weights over the K view embeddings (alphas) and the community representation (beta).
struct AggregationWeights {
    std::vector<double> alphas;
    double beta = 0.0;

    static AggregationWeights uniform(std::size_t views) {
        const double w = 1.0 / static_cast<double>(views + 1);
        return {std::vector<double>(views, w), w};
    }

    void validate() const {
        double sum = beta;
        bool negative = !(beta >= 0.0);
        for (double a : alphas) {
            sum += a;
            negative = negative || !(a >= 0.0);
        }
        if (negative || !(std::abs(sum - 1.0) <= 1e-9)) {
            std::ostringstream os;
            os << "aggregation weights must be non-negative and sum to 1: alphas=[";
            for (std::size_t i = 0; i < alphas.size(); ++i) os << (i ? ", " : "") << alphas[i];
            os << "], beta=" << beta << ", sum=" << sum;
            throw SimplexError(os.str());
        }
    }
};

/// Q = [U_1 ‖ … ‖ U_K ‖ K]
inline Var aggregate_concat(std::span<const Var> u, const Var& krep) {
    std::vector<Var> parts(u.begin(), u.end());
    parts.push_back(krep);
    for (const Var& p : parts)
        if (p.rows() != krep.rows()) {
            throw ShapeError("aggregate_concat: row mismatch " + p.value().shape() + " vs " +
                             krep.value().shape());
        }
    return ad::concat_cols(parts);
}

namespace detail {
inline void check_widths(std::span<const Var> u, const Var& krep, const std::optional<Var>& projection) {
    if (u.empty()) throw ShapeError("weighted aggregation needs at least one view embedding");
    const std::size_t width = u.front().cols();
    for (const Var& x : u) {
        if (x.cols() != width || x.rows() != u.front().rows()) {
            throw ShapeError("weighted aggregation: view embeddings differ in shape (" +
                             u.front().value().shape() + " vs " + x.value().shape() + ")");
        }
    }
    if (krep.rows() != u.front().rows()) {
        throw ShapeError("weighted aggregation: community representation has " +
                         std::to_string(krep.rows()) + " rows, expected " + std::to_string(u.front().rows()));
    }
    if (projection) {
        if (projection->rows() != krep.cols() || projection->cols() != width) {
            throw ShapeError("weighted aggregation: projection " + projection->value().shape() +
                             " does not map width " + std::to_string(krep.cols()) + " to " +
                             std::to_string(width));
        }
    } else if (krep.cols() != width) {
        throw ShapeError("weighted aggregation: community width " + std::to_string(krep.cols()) +
                         " differs from view width " + std::to_string(width) + " and no projection given");
    }
}

inline Var projected(const Var& krep, const std::optional<Var>& projection) {
    return projection ? ad::matmul(krep, *projection) : krep;
}
}  // namespace detail

/// Q = Σ_k α_k U_k + β·(K·P). Without a projection, K must already have the
/// view width and P is the identity.
inline Var aggregate_weighted(std::span<const Var> u, const Var& krep, const AggregationWeights& w,
                              const std::optional<Var>& projection = std::nullopt) {
    w.validate();
    if (w.alphas.size() != u.size()) {
        throw SimplexError("aggregation weights: " + std::to_string(w.alphas.size()) + " alphas for " +
                           std::to_string(u.size()) + " views");
    }
    detail::check_widths(u, krep, projection);
    std::optional<Var> q;
    auto accumulate = [&q](Var term) { q = q ? ad::add(*q, term) : term; };
    for (std::size_t k = 0; k < u.size(); ++k)
        if (w.alphas[k] != 0.0) accumulate(ad::scale(w.alphas[k], u[k]));
    if (w.beta != 0.0) accumulate(ad::scale(w.beta, detail::projected(krep, projection)));
    if (!q) throw SimplexError("aggregation weights are all zero");
    return *q;
}

/// Weighted aggregation with weights softmax(logits), logits being 1×(K+1)
/// with the community weight last. The weights stay on the simplex by construction.
inline Var aggregate_weighted_learned(std::span<const Var> u, const Var& krep, const Var& logits,
                                      const std::optional<Var>& projection = std::nullopt) {
    if (logits.rows() != 1 || logits.cols() != u.size() + 1) {
        throw ShapeError("learned aggregation: logits must be 1x" + std::to_string(u.size() + 1) +
                         ", got " + logits.value().shape());
    }
    detail::check_widths(u, krep, projection);
    const Var weights = ad::softmax_row(logits);
    Var q = ad::scale(ad::slice_cols(weights, 0, 1), u[0]);
    for (std::size_t k = 1; k < u.size(); ++k) q = ad::add(q, ad::scale(ad::slice_cols(weights, k, 1), u[k]));
    return ad::add(q, ad::scale(ad::slice_cols(weights, u.size(), 1), detail::projected(krep, projection)));
}

// ---------------------------------------------------------------------------
// Plain-matrix forms.

struct FusedRep {
    Matrix q;
    FusionMode mode = FusionMode::concat;
};

inline FusedRep aggregate_concat(const std::vector<Matrix>& u, const Matrix& krep) {
    Tape t;
    std::vector<Var> us;
    for (const auto& m : u) us.push_back(t.constant(m));
    return {aggregate_concat(us, t.constant(krep)).value(), FusionMode::concat};
}

inline FusedRep aggregate_weighted(const std::vector<Matrix>& u, const Matrix& krep,
                                   const AggregationWeights& w,
                                   const std::optional<Matrix>& projection = std::nullopt) {
    Tape t;
    std::vector<Var> us;
    for (const auto& m : u) us.push_back(t.constant(m));
    std::optional<Var> p;
    if (projection) p = t.constant(*projection);
    return {aggregate_weighted(us, t.constant(krep), w, p).value(), FusionMode::weighted};
}

}  // namespace mvad::fusion
