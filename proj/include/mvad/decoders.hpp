#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvad/autodiff.hpp"
#include "mvad/dataset_io.hpp"
#include "mvad/matrix.hpp"

namespace mvad::decoders {

using ad::Tape;
using ad::Var;

struct LossConfig {
    double lambda = 0.5;  // attribute weight; structure gets 1 − λ
    double gamma = 0.1;   // modularity reconstruction weight

    void validate() const {
        if (!(lambda >= 0.0 && lambda <= 1.0)) {
            throw std::invalid_argument("lambda must be in [0, 1], got " + std::to_string(lambda));
        }
        if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0, got " + std::to_string(gamma));
    }
};

/// Ã = sigmoid(Q Qᵀ)
inline Var structure_decode(const Var& q) { return ad::sigmoid(ad::matmul_nt(q, q)); }

/// X̃ = relu(Q·W + b), b broadcast over rows.
inline Var attribute_decode(const Var& q, const Var& weight, const Var& bias) {
    if (q.cols() != weight.rows()) {
        throw ShapeError("attribute_decode: Q " + q.value().shape() + " does not chain with W " +
                         weight.value().shape());
    }
    return ad::relu(ad::add_row(ad::matmul(q, weight), bias));
}

/// Both reconstruction terms, unweighted, plus the weighted total.
struct JointLoss {
    Var total;
    Var structure;  // ‖A − Ã‖²_F
    Var attribute;  // ‖X − X̃‖²_F
};

/// L = (1 − λ)‖A − Ã‖²_F + λ‖X − X̃‖²_F
inline JointLoss joint_loss(const Var& a, const Var& a_tilde, const Var& x, const Var& x_tilde,
                            const LossConfig& cfg) {
    cfg.validate();
    require_same_shape(a.value(), a_tilde.value(), "joint_loss (structure)");
    require_same_shape(x.value(), x_tilde.value(), "joint_loss (attributes)");
    const Var ls = ad::frobenius_sq(ad::sub(a, a_tilde));
    const Var la = ad::frobenius_sq(ad::sub(x, x_tilde));
    return {ad::add(ad::scale(1.0 - cfg.lambda, ls), ad::scale(cfg.lambda, la)), ls, la};
}

// ---------------------------------------------------------------------------
// Plain-matrix forms and scoring.

struct DecoderParams {
    Matrix weight;  // d_Q × ΣD_k
    Matrix bias;    // 1 × ΣD_k
};

inline Matrix structure_decode(const Matrix& q) {
    Tape t;
    return structure_decode(t.constant(q)).value();
}

inline Matrix attribute_decode(const Matrix& q, const DecoderParams& p) {
    Tape t;
    return attribute_decode(t.constant(q), t.constant(p.weight), t.constant(p.bias)).value();
}

inline double joint_loss(const Matrix& a, const Matrix& a_tilde, const Matrix& x, const Matrix& x_tilde,
                         const LossConfig& cfg) {
    Tape t;
    return joint_loss(t.constant(a), t.constant(a_tilde), t.constant(x), t.constant(x_tilde), cfg)
        .total.value()(0, 0);
}

/// Node ids sorted by descending score; ties keep ascending id.
inline std::vector<std::size_t> rank_nodes(const std::vector<double>& scores) {
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (std::isnan(scores[i])) {
            throw std::domain_error("rank_nodes: NaN score for node " + std::to_string(i));
        }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

struct AnomalyReport {
    std::vector<double> scores;
    std::vector<double> structure_err;  // ‖A_i − Ã_i‖₂
    std::vector<double> attribute_err;  // ‖X_i − X̃_i‖₂
    std::vector<std::size_t> ranking;
};

inline double row_distance(const Matrix& a, const Matrix& b, std::size_t r) {
    double s = 0.0;
    const auto ra = a.row(r);
    const auto rb = b.row(r);
    for (std::size_t c = 0; c < ra.size(); ++c) {
        const double d = ra[c] - rb[c];
        s += d * d;
    }
    return std::sqrt(s);
}

/// score_i = (1 − λ)‖A_i − Ã_i‖₂ + λ‖X_i − X̃_i‖₂
inline AnomalyReport node_scores(const Matrix& a, const Matrix& a_tilde, const Matrix& x,
                                 const Matrix& x_tilde, const LossConfig& cfg) {
    cfg.validate();
    require_same_shape(a, a_tilde, "node_scores (structure)");
    require_same_shape(x, x_tilde, "node_scores (attributes)");
    if (a.rows() != x.rows()) throw ShapeError("node_scores: adjacency and attributes differ in node count");
    AnomalyReport r;
    const std::size_t n = a.rows();
    r.scores.resize(n);
    r.structure_err.resize(n);
    r.attribute_err.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.structure_err[i] = row_distance(a, a_tilde, i);
        r.attribute_err[i] = row_distance(x, x_tilde, i);
        r.scores[i] = (1.0 - cfg.lambda) * r.structure_err[i] + cfg.lambda * r.attribute_err[i];
    }
    r.ranking = rank_nodes(r.scores);
    return r;
}

/// scores.csv: header then "node_id,score,structure_err,attr_err,rank" rows in
/// rank order, rank starting at 1.
inline void write_scores_csv(const AnomalyReport& r, const std::filesystem::path& path) {
    std::string s = "node_id,score,structure_err,attr_err,rank\n";
    for (std::size_t pos = 0; pos < r.ranking.size(); ++pos) {
        const std::size_t id = r.ranking[pos];
        s += std::to_string(id) + ',' + io::format_double(r.scores[id]) + ',' +
             io::format_double(r.structure_err[id]) + ',' + io::format_double(r.attribute_err[id]) + ',' +
             std::to_string(pos + 1) + '\n';
    }
    io::write_file(path, s);
}

/// Reads scores.csv back into a report indexed by node id.
inline AnomalyReport read_scores_csv(const std::filesystem::path& path) {
    auto lines = io::read_lines(path);
    if (lines.empty() || lines.front().rfind("node_id,", 0) != 0) {
        throw io::DatasetError(path.string() + ": missing scores header");
    }
    const std::size_t n = lines.size() - 1;
    AnomalyReport r;
    r.scores.assign(n, 0.0);
    r.structure_err.assign(n, 0.0);
    r.attribute_err.assign(n, 0.0);
    r.ranking.assign(n, 0);
    std::vector<bool> seen(n, false);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string where = path.string() + ":" + std::to_string(li + 1);
        const auto cells = io::split(lines[li], ',');
        if (cells.size() != 5) throw io::DatasetError(where + ": expected 5 columns");
        const long long id = io::parse_int(cells[0], where);
        const long long rank = io::parse_int(cells[4], where);
        if (id < 0 || static_cast<std::size_t>(id) >= n || seen[id]) {
            throw io::DatasetError(where + ": invalid or duplicate node id " + std::to_string(id));
        }
        if (rank < 1 || static_cast<std::size_t>(rank) > n) {
            throw io::DatasetError(where + ": rank out of range");
        }
        seen[id] = true;
        r.scores[id] = io::parse_double(cells[1], where);
        r.structure_err[id] = io::parse_double(cells[2], where);
        r.attribute_err[id] = io::parse_double(cells[3], where);
        r.ranking[rank - 1] = static_cast<std::size_t>(id);
    }
    return r;
}

}  // namespace mvad::decoders
