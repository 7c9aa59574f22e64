#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mvad/autodiff.hpp"
#include "mvad/matrix.hpp"

namespace mvad {

/// Ordered collection of named trainable matrices. Order is insertion order
/// and is part of the checkpoint format.
class ParamSet {
public:
    Matrix& add(std::string name, Matrix value) {
        if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
        entries_.emplace_back(std::move(name), std::move(value));
        return entries_.back().second;
    }

    bool contains(const std::string& name) const {
        for (const auto& [n, _] : entries_)
            if (n == name) return true;
        return false;
    }

    const Matrix& at(const std::string& name) const {
        for (const auto& [n, m] : entries_)
            if (n == name) return m;
        throw std::out_of_range("unknown parameter '" + name + "'");
    }

    Matrix& at(const std::string& name) {
        return const_cast<Matrix&>(std::as_const(*this).at(name));
    }

    std::size_t size() const noexcept { return entries_.size(); }
    auto begin() noexcept { return entries_.begin(); }
    auto end() noexcept { return entries_.end(); }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    std::size_t scalar_count() const noexcept {
        std::size_t n = 0;
        for (const auto& [_, m] : entries_) n += m.size();
        return n;
    }

    friend bool operator==(const ParamSet&, const ParamSet&) = default;

private:
    std::vector<std::pair<std::string, Matrix>> entries_;
};

struct AdamOptions {
    double lr = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment estimates and the step counter.
struct AdamState {
    std::map<std::string, Matrix> m;
    std::map<std::string, Matrix> v;
    long step = 0;
};

namespace detail {
inline const Matrix& grad_for(const ad::Gradients& grads, const std::string& name,
                              const Matrix& param) {
    auto it = grads.find(name);
    if (it == grads.end()) throw std::invalid_argument("no gradient for parameter '" + name + "'");
    if (it->second.rows() != param.rows() || it->second.cols() != param.cols()) {
        throw ShapeError("gradient for '" + name + "' has shape " + it->second.shape() +
                         ", parameter has " + param.shape());
    }
    return it->second;
}
}  // namespace detail

/// One Adam update of every parameter in `params`. Parameters without a
/// gradient entry are an error; use a separate ParamSet to freeze weights.
inline void adam_step(ParamSet& params, const ad::Gradients& grads, const AdamOptions& opt,
                      AdamState& state) {
    for (const auto& [name, p] : params) detail::grad_for(grads, name, p);
    ++state.step;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
    for (auto& [name, p] : params) {
        const Matrix& g = grads.at(name);
        Matrix& m = state.m.try_emplace(name, p.rows(), p.cols()).first->second;
        Matrix& v = state.v.try_emplace(name, p.rows(), p.cols()).first->second;
        auto pd = p.data();
        auto gd = g.data();
        auto md = m.data();
        auto vd = v.data();
        for (std::size_t i = 0; i < pd.size(); ++i) {
            md[i] = opt.beta1 * md[i] + (1.0 - opt.beta1) * gd[i];
            vd[i] = opt.beta2 * vd[i] + (1.0 - opt.beta2) * gd[i] * gd[i];
            const double mhat = md[i] / bc1;
            const double vhat = vd[i] / bc2;
            pd[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
        }
    }
}

/// Plain gradient descent: p ← p − lr·g.
inline void sgd_step(ParamSet& params, const ad::Gradients& grads, double lr) {
    for (const auto& [name, p] : params) detail::grad_for(grads, name, p);
    for (auto& [name, p] : params) {
        const auto gd = grads.at(name).data();
        auto pd = p.data();
        for (std::size_t i = 0; i < pd.size(); ++i) pd[i] -= lr * gd[i];
    }
}

}  // namespace mvad
