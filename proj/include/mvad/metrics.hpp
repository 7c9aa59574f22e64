#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvad/graph.hpp"

namespace mvad::metrics {

/// Probability that a random (anomaly, normal) pair is ordered correctly,
/// ties counting one half. Exact, via mid-ranks.
inline double auc_roc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    if (scores.size() != positive.size()) {
        throw std::invalid_argument("auc_roc: " + std::to_string(scores.size()) + " scores but " +
                                    std::to_string(positive.size()) + " labels");
    }
    const std::size_t n = scores.size();
    std::size_t pos = 0;
    for (bool p : positive) pos += p ? 1 : 0;
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) throw std::invalid_argument("AUC undefined: labels contain a single class");
    for (double s : scores)
        if (std::isnan(s)) throw std::invalid_argument("auc_roc: NaN score");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Twice the rank sum keeps every mid-rank an integer.
    double twice_rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double twice_mid = static_cast<double>(i + 1 + j + 1);
        for (std::size_t t = i; t <= j; ++t)
            if (positive[order[t]]) twice_rank_sum += twice_mid;
        i = j + 1;
    }
    const double p = static_cast<double>(pos);
    // Numerator counts correctly ordered pairs, with ties as one half.
    const double correct = (twice_rank_sum - p * (p + 1.0)) / 2.0;
    return correct / (p * static_cast<double>(neg));
}

/// Fraction of the first k ranked nodes that are anomalous.
inline double precision_at_k(const std::vector<std::size_t>& ranking, const std::vector<bool>& positive,
                             std::size_t k) {
    if (k < 1 || k > ranking.size()) {
        throw std::out_of_range("precision_at_k: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(ranking.size()) + "]");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k; ++i) hits += positive.at(ranking[i]) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(k);
}

struct EvalResult {
    double auc_roc = 0.0;
    std::map<std::size_t, double> precision_at_k;
    std::map<std::size_t, std::map<std::string, std::size_t>> per_kind_top_k;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["auc_roc"] = auc_roc;
        auto& p = j["precision_at_k"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : precision_at_k) p[std::to_string(k)] = v;
        auto& per = j["per_kind_top_k"] = nlohmann::ordered_json::object();
        for (const auto& [k, counts] : per_kind_top_k) {
            auto& entry = per[std::to_string(k)] = nlohmann::ordered_json::object();
            for (const auto& [kind, c] : counts) entry[kind] = c;
        }
        return j;
    }
};

inline std::vector<bool> anomaly_flags(const std::vector<AnomalyKind>& labels) {
    std::vector<bool> out;
    out.reserve(labels.size());
    for (AnomalyKind k : labels) out.push_back(is_anomalous(k));
    return out;
}

/// AUC, precision@k and anomaly-kind counts among the top k for each k.
/// An empty `ks` evaluates at k = number of labelled anomalies.
inline EvalResult evaluate(const std::vector<double>& scores, const std::vector<std::size_t>& ranking,
                           const std::vector<AnomalyKind>& labels, std::vector<std::size_t> ks = {}) {
    const auto flags = anomaly_flags(labels);
    EvalResult r;
    r.auc_roc = auc_roc(scores, flags);
    if (ks.empty()) ks.push_back(static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true)));
    for (std::size_t k : ks) {
        r.precision_at_k[k] = precision_at_k(ranking, flags, k);
        auto& counts = r.per_kind_top_k[k];
        for (AnomalyKind kind : {AnomalyKind::global, AnomalyKind::structural, AnomalyKind::community})
            counts[std::string(to_string(kind))] = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const AnomalyKind kind = labels.at(ranking[i]);
            if (is_anomalous(kind)) ++counts[std::string(to_string(kind))];
        }
    }
    return r;
}

}  // namespace mvad::metrics
