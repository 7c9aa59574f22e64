#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mvad/matrix.hpp"

namespace mvad {

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AnomalyKind { normal, global, structural, community };

inline std::string_view to_string(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::normal: return "normal";
        case AnomalyKind::global: return "global";
        case AnomalyKind::structural: return "structural";
        case AnomalyKind::community: return "community";
    }
    return "normal";
}

inline AnomalyKind parse_anomaly_kind(std::string_view s) {
    if (s == "normal") return AnomalyKind::normal;
    if (s == "global") return AnomalyKind::global;
    if (s == "structural") return AnomalyKind::structural;
    if (s == "community") return AnomalyKind::community;
    throw GraphError("unknown anomaly kind '" + std::string(s) + "'");
}

inline bool is_anomalous(AnomalyKind k) noexcept { return k != AnomalyKind::normal; }

/// Undirected, unweighted graph whose nodes carry K attribute matrices.
struct MultiViewGraph {
    Matrix adjacency;                               // n×n, 0/1, symmetric, zero diagonal
    std::vector<Matrix> views;                      // K matrices, each n×D_k
    std::optional<std::vector<AnomalyKind>> labels; // ground truth, length n when present

    std::size_t node_count() const noexcept { return adjacency.rows(); }
    std::size_t view_count() const noexcept { return views.size(); }

    std::vector<std::size_t> view_dims() const {
        std::vector<std::size_t> d;
        for (const auto& v : views) d.push_back(v.cols());
        return d;
    }

    std::size_t edge_count() const noexcept {
        std::size_t m = 0;
        for (std::size_t i = 0; i < adjacency.rows(); ++i)
            for (std::size_t j = i + 1; j < adjacency.cols(); ++j)
                if (adjacency(i, j) != 0.0) ++m;
        return m;
    }

    bool has_edge(std::size_t u, std::size_t v) const { return adjacency(u, v) != 0.0; }

    void set_edge(std::size_t u, std::size_t v) {
        if (u == v) throw GraphError("self-loops are not allowed (node " + std::to_string(u) + ")");
        adjacency(u, v) = 1.0;
        adjacency(v, u) = 1.0;
    }

    /// [X¹ ‖ … ‖ X^K]
    Matrix concatenated_attributes() const { return concat_cols(views); }

    /// Throws GraphError when any structural invariant is broken.
    void validate() const {
        const std::size_t n = adjacency.rows();
        if (adjacency.cols() != n) throw GraphError("adjacency must be square, got " + adjacency.shape());
        for (std::size_t i = 0; i < n; ++i) {
            if (adjacency(i, i) != 0.0) {
                throw GraphError("adjacency diagonal must be zero (node " + std::to_string(i) + ")");
            }
            for (std::size_t j = 0; j < n; ++j) {
                const double a = adjacency(i, j);
                if (a != 0.0 && a != 1.0) throw GraphError("adjacency entries must be 0 or 1");
                if (a != adjacency(j, i)) throw GraphError("adjacency must be symmetric");
            }
        }
        if (views.empty()) throw GraphError("graph needs at least one attribute view");
        for (std::size_t k = 0; k < views.size(); ++k) {
            if (views[k].rows() != n) {
                throw GraphError("view row count mismatch: view " + std::to_string(k) + " has " +
                                 std::to_string(views[k].rows()) + " rows, expected " +
                                 std::to_string(n));
            }
            if (views[k].cols() == 0) throw GraphError("view " + std::to_string(k) + " has no columns");
            if (!views[k].all_finite()) throw GraphError("view " + std::to_string(k) + " has non-finite entries");
        }
        if (labels && labels->size() != n) {
            throw GraphError("label count " + std::to_string(labels->size()) + " does not match n=" +
                             std::to_string(n));
        }
    }

    friend bool operator==(const MultiViewGraph&, const MultiViewGraph&) = default;
};

/// Â = D^{-1/2}(A + I)D^{-1/2} with D_ii = Σ_j (A + I)_ij.
class NormalizedAdjacency {
public:
    explicit NormalizedAdjacency(const Matrix& adjacency) : a_hat_(adjacency.rows(), adjacency.cols()) {
        const std::size_t n = adjacency.rows();
        std::vector<double> inv_sqrt_deg(n);
        for (std::size_t i = 0; i < n; ++i) {
            double d = 1.0;
            for (std::size_t j = 0; j < n; ++j) d += adjacency(i, j);
            inv_sqrt_deg[i] = 1.0 / std::sqrt(d);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double a = adjacency(i, j) + (i == j ? 1.0 : 0.0);
                if (a != 0.0) a_hat_(i, j) = inv_sqrt_deg[i] * a * inv_sqrt_deg[j];
            }
    }

    const Matrix& matrix() const noexcept { return a_hat_; }

private:
    Matrix a_hat_;
};

inline NormalizedAdjacency normalize_adjacency(const MultiViewGraph& g) {
    return NormalizedAdjacency(g.adjacency);
}

/// B with b_ij = a_ij − k_i k_j / (2m). Rows sum to zero.
struct ModularityMatrix {
    Matrix b;
    std::size_t edges = 0;
};

inline ModularityMatrix modularity_matrix(const Matrix& adjacency) {
    const std::size_t n = adjacency.rows();
    std::vector<double> degree(n, 0.0);
    double two_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) degree[i] += adjacency(i, j);
        two_m += degree[i];
    }
    if (two_m == 0.0) throw GraphError("modularity undefined for edgeless graph");
    ModularityMatrix out{Matrix(n, n), static_cast<std::size_t>(two_m / 2.0)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out.b(i, j) = adjacency(i, j) - degree[i] * degree[j] / two_m;
    return out;
}

inline ModularityMatrix modularity_matrix(const MultiViewGraph& g) {
    return modularity_matrix(g.adjacency);
}

}  // namespace mvad
