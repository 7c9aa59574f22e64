#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvad/graph.hpp"

namespace mvad::datagen {

class GenError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct GenConfig {
    std::size_t n = 500;
    std::size_t communities = 5;
    double p_in = 0.1;
    double p_out = 0.005;
    std::vector<std::size_t> view_dims{16, 16};
    double anomaly_fraction = 0.01;  // per anomaly type
    std::size_t clique_size = 5;
    double attr_shift = 6.0;
    // Community mean vectors are drawn uniformly from [mean_low, mean_high]^D.
    double mean_low = 1.0;
    double mean_high = 6.0;
    std::uint64_t seed = 42;

    std::size_t anomalies_per_type() const {
        return static_cast<std::size_t>(std::llround(anomaly_fraction * static_cast<double>(n)));
    }

    void validate() const {
        if (n == 0) throw GenError("n must be positive");
        if (communities == 0 || communities > n) {
            throw GenError("communities must be in [1, n], got " + std::to_string(communities));
        }
        if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0)) {
            throw GenError("edge probabilities must satisfy 0 <= p_out < p_in <= 1 (p_in=" +
                           std::to_string(p_in) + ", p_out=" + std::to_string(p_out) + ")");
        }
        if (view_dims.empty()) throw GenError("at least one view is required");
        for (std::size_t d : view_dims)
            if (d == 0) throw GenError("view dimensions must be positive");
        if (!(anomaly_fraction >= 0.0)) throw GenError("anomaly_fraction must be non-negative");
        if (3 * anomalies_per_type() > n) {
            throw GenError("anomaly_fraction too large: 3 x " + std::to_string(anomalies_per_type()) +
                           " anomalies exceed n=" + std::to_string(n));
        }
        if (clique_size < 3) throw GenError("clique_size must be at least 3");
        if (!(attr_shift >= 0.0)) throw GenError("attr_shift must be non-negative");
        if (!(mean_low <= mean_high)) throw GenError("mean_low must not exceed mean_high");
    }
};

/// A generated graph together with the latent quantities that produced it.
struct SyntheticGraph {
    MultiViewGraph graph;
    std::vector<std::size_t> community;      // per node
    std::vector<Matrix> community_means;     // per view: communities × D_k
    std::size_t communities = 0;
};

/// Per-view attribute mean vector and pooled standard deviation.
struct ViewStats {
    std::vector<double> mean;
    double sigma = 0.0;
};

inline ViewStats view_statistics(const Matrix& x) {
    ViewStats s;
    s.mean.assign(x.cols(), 0.0);
    const double n = static_cast<double>(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) s.mean[c] += x(r, c) / n;
    double var = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double d = x(r, c) - s.mean[c];
            var += d * d;
        }
    s.sigma = std::sqrt(var / (n * static_cast<double>(x.cols())));
    return s;
}

inline std::size_t community_of(std::size_t node, std::size_t n, std::size_t communities) {
    return node * communities / n;
}

/// Planted-partition graph with Gaussian community attributes; all labels normal.
inline SyntheticGraph generate_base(const GenConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    const std::size_t n = cfg.n;
    const std::size_t c = cfg.communities;

    std::vector<std::size_t> community(n);
    std::vector<std::size_t> sizes(c, 0);
    for (std::size_t i = 0; i < n; ++i) {
        community[i] = community_of(i, n, c);
        ++sizes[community[i]];
    }
    double expected_edges = 0.0;
    for (std::size_t a = 0; a < c; ++a) {
        expected_edges += cfg.p_in * static_cast<double>(sizes[a] * (sizes[a] - 1)) / 2.0;
        for (std::size_t b = a + 1; b < c; ++b)
            expected_edges += cfg.p_out * static_cast<double>(sizes[a] * sizes[b]);
    }
    if (expected_edges == 0.0) throw GenError("configuration implies an edgeless graph");

    SyntheticGraph out;
    out.communities = c;
    out.community = community;
    out.graph.adjacency = Matrix(n, n);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = community[i] == community[j] ? cfg.p_in : cfg.p_out;
            if (unit(rng) < p) out.graph.set_edge(i, j);
        }

    std::uniform_real_distribution<double> mean_dist(cfg.mean_low, cfg.mean_high);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t d : cfg.view_dims) {
        Matrix means(c, d);
        for (double& v : means.data()) v = mean_dist(rng);
        Matrix x(n, d);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) x(i, k) = means(community[i], k) + noise(rng);
        out.community_means.push_back(std::move(means));
        out.graph.views.push_back(std::move(x));
    }
    out.graph.labels = std::vector<AnomalyKind>(n, AnomalyKind::normal);
    return out;
}

namespace detail {
inline std::vector<std::size_t> pick_normal_nodes(SyntheticGraph& g, std::size_t count,
                                                  std::mt19937_64& rng, const char* what) {
    if (!g.graph.labels) g.graph.labels = std::vector<AnomalyKind>(g.graph.node_count(), AnomalyKind::normal);
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < g.graph.node_count(); ++i)
        if ((*g.graph.labels)[i] == AnomalyKind::normal) pool.push_back(i);
    if (count > pool.size()) {
        throw GenError(std::string(what) + ": requested " + std::to_string(count) +
                       " anomalies but only " + std::to_string(pool.size()) + " normal nodes remain");
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(count);
    return pool;
}
}  // namespace detail

/// Replaces every view of `count` normal nodes with the view's global mean
/// shifted along a random non-negative direction, plus unit Gaussian noise.
/// The shift has length attr_shift·σ·√D, i.e. attr_shift·σ per coordinate
/// in root-mean-square terms.
inline std::vector<std::size_t> inject_global(SyntheticGraph& g, std::size_t count, double attr_shift,
                                              std::mt19937_64& rng) {
    auto chosen = detail::pick_normal_nodes(g, count, rng, "inject_global");
    if (chosen.empty()) return chosen;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Matrix& x : g.graph.views) {
        const ViewStats stats = view_statistics(x);
        const double length = attr_shift * stats.sigma * std::sqrt(static_cast<double>(x.cols()));
        for (std::size_t node : chosen) {
            std::vector<double> dir(x.cols());
            double norm = 0.0;
            while (norm == 0.0) {
                norm = 0.0;
                for (double& v : dir) {
                    v = std::abs(gauss(rng));
                    norm += v * v;
                }
                norm = std::sqrt(norm);
            }
            for (std::size_t c = 0; c < x.cols(); ++c)
                x(node, c) = stats.mean[c] + length * dir[c] / norm + gauss(rng);
        }
    }
    for (std::size_t node : chosen) (*g.graph.labels)[node] = AnomalyKind::global;
    return chosen;
}

/// Wires `count` normal nodes into ⌈count/clique_size⌉ fully connected groups
/// of near-equal size. Attributes are untouched.
inline std::vector<std::size_t> inject_structural(SyntheticGraph& g, std::size_t count,
                                                  std::size_t clique_size, std::mt19937_64& rng) {
    if (clique_size < 2) throw GenError("inject_structural: clique_size must be at least 2");
    if (count == 1) throw GenError("inject_structural: a clique needs at least 2 nodes, count=1");
    auto chosen = detail::pick_normal_nodes(g, count, rng, "inject_structural");
    if (chosen.empty()) return chosen;
    const std::size_t groups = (count + clique_size - 1) / clique_size;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < groups; ++k) {
        const std::size_t size = count / groups + (k < count % groups ? 1 : 0);
        for (std::size_t a = offset; a < offset + size; ++a)
            for (std::size_t b = a + 1; b < offset + size; ++b) g.graph.set_edge(chosen[a], chosen[b]);
        offset += size;
    }
    for (std::size_t node : chosen) (*g.graph.labels)[node] = AnomalyKind::structural;
    return chosen;
}

/// Gives `count` normal nodes the attributes of a different community
/// (donor mean plus unit Gaussian noise, in every view). Edges are untouched.
inline std::vector<std::size_t> inject_community(SyntheticGraph& g, std::size_t count,
                                                 std::mt19937_64& rng,
                                                 std::vector<std::size_t>* donors = nullptr) {
    if (count > 0 && g.communities < 2) {
        throw GenError("community anomalies require >=2 communities");
    }
    auto chosen = detail::pick_normal_nodes(g, count, rng, "inject_community");
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> other(0, g.communities >= 2 ? g.communities - 2 : 0);
    if (donors) donors->clear();
    for (std::size_t node : chosen) {
        const std::size_t own = g.community[node];
        std::size_t donor = other(rng);
        if (donor >= own) ++donor;
        if (donors) donors->push_back(donor);
        for (std::size_t k = 0; k < g.graph.views.size(); ++k) {
            Matrix& x = g.graph.views[k];
            const Matrix& means = g.community_means[k];
            for (std::size_t c = 0; c < x.cols(); ++c) x(node, c) = means(donor, c) + noise(rng);
        }
        (*g.graph.labels)[node] = AnomalyKind::community;
    }
    return chosen;
}

/// Base graph followed by structural, global and community injection, all
/// driven by one RNG stream seeded from cfg.seed.
inline SyntheticGraph generate(const GenConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    SyntheticGraph g = generate_base(cfg, rng);
    const std::size_t per_type = cfg.anomalies_per_type();
    inject_structural(g, per_type, cfg.clique_size, rng);
    inject_global(g, per_type, cfg.attr_shift, rng);
    if (cfg.communities >= 2) {
        inject_community(g, per_type, rng);
    } else if (per_type > 0) {
        throw GenError("community anomalies require >=2 communities");
    }
    return g;
}

}  // namespace mvad::datagen
