#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <toml.hpp>

#include "mvad/datagen.hpp"
#include "mvad/training.hpp"

// TOML configuration. Every key is optional; omitted keys keep the defaults
// of GenConfig / TrainConfig. Recognised layout:
//
//   [generate]  n, communities, p_in, p_out, view_dims, anomaly_fraction,
//               clique_size, attr_shift, mean_low, mean_high, seed
//   [train]     epochs, lr, optimizer, beta1, beta2, eps, lambda, gamma,
//               seed, pretrain_ae_epochs
//   [model]     view_hidden, ae_hidden, community_hidden, isolate_autoencoder
//   [fusion]    mode, alphas, beta, learn_weights
namespace mvad::config {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline const toml::table* section(const toml::table& root, std::string_view name,
                                  const std::set<std::string_view>& known) {
    const toml::node* node = root.get(name);
    if (!node) return nullptr;
    const toml::table* t = node->as_table();
    if (!t) throw ConfigError("[" + std::string(name) + "] must be a table");
    for (const auto& [key, _] : *t) {
        if (!known.contains(key.str())) {
            throw ConfigError("unknown key '" + std::string(key.str()) + "' in [" + std::string(name) + "]");
        }
    }
    return t;
}

inline std::string where(std::string_view sec, std::string_view key) {
    return std::string(sec) + "." + std::string(key);
}

inline void read(const toml::table* t, std::string_view sec, std::string_view key, double& out) {
    if (!t || !t->contains(key)) return;
    const auto* n = t->get(key);
    if (auto v = n->value<double>()) {
        out = *v;
    } else {
        throw ConfigError(where(sec, key) + " must be a number");
    }
}

template <typename U>
    requires std::is_unsigned_v<U> && (!std::is_same_v<U, bool>)
void read(const toml::table* t, std::string_view sec, std::string_view key, U& out) {
    if (!t || !t->contains(key)) return;
    auto v = t->get(key)->value<std::int64_t>();
    if (!v || *v < 0 || !t->get(key)->is_integer()) throw ConfigError(where(sec, key) + " must be a non-negative integer");
    out = static_cast<U>(*v);
}

inline void read(const toml::table* t, std::string_view sec, std::string_view key, bool& out) {
    if (!t || !t->contains(key)) return;
    auto v = t->get(key)->value<bool>();
    if (!v) throw ConfigError(where(sec, key) + " must be a boolean");
    out = *v;
}

inline void read(const toml::table* t, std::string_view sec, std::string_view key, std::string& out) {
    if (!t || !t->contains(key)) return;
    auto v = t->get(key)->value<std::string>();
    if (!v) throw ConfigError(where(sec, key) + " must be a string");
    out = *v;
}

inline void read(const toml::table* t, std::string_view sec, std::string_view key,
                 std::vector<std::size_t>& out) {
    if (!t || !t->contains(key)) return;
    const auto* arr = t->get(key)->as_array();
    if (!arr || arr->empty()) throw ConfigError(where(sec, key) + " must be a non-empty array of integers");
    std::vector<std::size_t> v;
    for (const auto& e : *arr) {
        auto x = e.value<std::int64_t>();
        if (!e.is_integer() || !x || *x <= 0) throw ConfigError(where(sec, key) + " must contain positive integers");
        v.push_back(static_cast<std::size_t>(*x));
    }
    out = std::move(v);
}

inline void read(const toml::table* t, std::string_view sec, std::string_view key, std::vector<double>& out) {
    if (!t || !t->contains(key)) return;
    const auto* arr = t->get(key)->as_array();
    if (!arr) throw ConfigError(where(sec, key) + " must be an array of numbers");
    std::vector<double> v;
    for (const auto& e : *arr) {
        auto x = e.value<double>();
        if (!x) throw ConfigError(where(sec, key) + " must contain numbers");
        v.push_back(*x);
    }
    out = std::move(v);
}

}  // namespace detail

inline toml::table parse_file(const std::filesystem::path& path) {
    try {
        return toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw ConfigError(path.string() + ": " + std::string(e.description()));
    }
}

inline toml::table parse_string(std::string_view text) {
    try {
        return toml::parse(text);
    } catch (const toml::parse_error& e) {
        throw ConfigError("config: " + std::string(e.description()));
    }
}

inline void check_sections(const toml::table& root) {
    static const std::set<std::string_view> sections{"generate", "train", "model", "fusion"};
    for (const auto& [key, _] : root)
        if (!sections.contains(key.str())) throw ConfigError("unknown config section '" + std::string(key.str()) + "'");
}

inline datagen::GenConfig gen_config(const toml::table& root) {
    check_sections(root);
    datagen::GenConfig c;
    const auto* t = detail::section(root, "generate",
                                    {"n", "communities", "p_in", "p_out", "view_dims", "anomaly_fraction",
                                     "clique_size", "attr_shift", "mean_low", "mean_high", "seed"});
    detail::read(t, "generate", "n", c.n);
    detail::read(t, "generate", "communities", c.communities);
    detail::read(t, "generate", "p_in", c.p_in);
    detail::read(t, "generate", "p_out", c.p_out);
    detail::read(t, "generate", "view_dims", c.view_dims);
    detail::read(t, "generate", "anomaly_fraction", c.anomaly_fraction);
    detail::read(t, "generate", "clique_size", c.clique_size);
    detail::read(t, "generate", "attr_shift", c.attr_shift);
    detail::read(t, "generate", "mean_low", c.mean_low);
    detail::read(t, "generate", "mean_high", c.mean_high);
    detail::read(t, "generate", "seed", c.seed);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[generate] ") + e.what());
    }
    return c;
}

inline training::TrainConfig train_config(const toml::table& root) {
    check_sections(root);
    training::TrainConfig c;
    const auto* t = detail::section(root, "train",
                                    {"epochs", "lr", "optimizer", "beta1", "beta2", "eps", "lambda", "gamma",
                                     "seed", "pretrain_ae_epochs"});
    detail::read(t, "train", "epochs", c.epochs);
    detail::read(t, "train", "lr", c.lr);
    std::string optimizer = training::to_string(c.optimizer);
    detail::read(t, "train", "optimizer", optimizer);
    detail::read(t, "train", "beta1", c.beta1);
    detail::read(t, "train", "beta2", c.beta2);
    detail::read(t, "train", "eps", c.eps);
    detail::read(t, "train", "lambda", c.loss.lambda);
    detail::read(t, "train", "gamma", c.loss.gamma);
    detail::read(t, "train", "seed", c.seed);
    detail::read(t, "train", "pretrain_ae_epochs", c.pretrain_ae_epochs);

    const auto* m =
        detail::section(root, "model", {"view_hidden", "ae_hidden", "community_hidden", "isolate_autoencoder"});
    detail::read(m, "model", "view_hidden", c.arch.view_hidden);
    detail::read(m, "model", "ae_hidden", c.arch.ae_hidden);
    detail::read(m, "model", "community_hidden", c.arch.community_hidden);
    detail::read(m, "model", "isolate_autoencoder", c.arch.isolate_autoencoder);

    const auto* f = detail::section(root, "fusion", {"mode", "alphas", "beta", "learn_weights"});
    std::string mode = std::string(fusion::to_string(c.arch.fusion));
    detail::read(f, "fusion", "mode", mode);
    detail::read(f, "fusion", "alphas", c.arch.weights.alphas);
    detail::read(f, "fusion", "beta", c.arch.weights.beta);
    detail::read(f, "fusion", "learn_weights", c.arch.learn_fusion_weights);
    try {
        c.optimizer = training::parse_optimizer(optimizer);
        c.arch.fusion = fusion::parse_fusion_mode(mode);
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

}  // namespace mvad::config
