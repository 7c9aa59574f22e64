#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mvad/matrix.hpp"

/// Reverse-mode automatic differentiation over dense matrices.
///
/// A Tape records every operation whose operands include a trainable
/// parameter. Nodes are appended in evaluation order, so the node list is
/// already a topological order and the backward sweep is a single reverse
/// pass. Operations on constants only are evaluated eagerly and stored as
/// constant nodes without a backward rule.
namespace mvad::ad {

/// Parameter name → gradient with the parameter's shape.
using Gradients = std::map<std::string, Matrix>;

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    bool requires_grad() const;
    std::size_t id() const noexcept { return id_; }
    Tape* tape() const noexcept { return tape_; }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }

private:
    friend class Tape;
    Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    /// Receives the gradient of the node's output and pushes contributions to operands.
    using BackwardFn = std::function<void(Tape&, const Matrix&)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value) {
        nodes_.push_back({std::move(value), {}, false, false, {}, nullptr});
        return {this, nodes_.size() - 1};
    }

    Var parameter(std::string name, Matrix value) {
        for (const auto& n : nodes_) {
            if (n.requires_grad && n.param_name == name) {
                throw std::invalid_argument("parameter '" + name + "' registered twice on tape");
            }
        }
        nodes_.push_back({std::move(value), {}, false, true, std::move(name), nullptr});
        return {this, nodes_.size() - 1};
    }

    /// Appends the result of an operation. `fn` is dropped when no operand is trainable.
    Var record(Matrix value, std::initializer_list<Var> operands, BackwardFn fn) {
        return record(std::move(value), std::vector<Var>(operands), std::move(fn));
    }

    Var record(Matrix value, const std::vector<Var>& operands, BackwardFn fn) {
        bool trainable = false;
        for (const Var& v : operands) {
            check_owner(v);
            trainable = trainable || nodes_[v.id()].requires_grad;
        }
        if (!value.all_finite()) {
            throw std::domain_error("non-finite value produced by tape operation (shape " +
                                    value.shape() + ")");
        }
        nodes_.push_back(
            {std::move(value), {}, false, trainable, {}, trainable ? std::move(fn) : nullptr});
        return {this, nodes_.size() - 1};
    }

    const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Adds `g` into the gradient slot of node `v` if it is trainable.
    void accumulate(const Var& v, const Matrix& g) {
        Node& n = nodes_[v.id()];
        if (!n.requires_grad) return;
        if (!n.has_grad) {
            n.grad = g;
            n.has_grad = true;
        } else {
            n.grad += g;
        }
    }

    bool needs_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }

    /// Reverse sweep from a 1×1 loss. Returns a gradient for every parameter
    /// on the tape (zeros for parameters the loss does not depend on).
    Gradients backward(const Var& loss) {
        check_owner(loss);
        const Matrix& lv = nodes_[loss.id()].value;
        if (lv.rows() != 1 || lv.cols() != 1) {
            throw std::invalid_argument("backward: loss must be a 1x1 scalar, got " + lv.shape());
        }
        for (auto& n : nodes_) {
            n.grad = Matrix();
            n.has_grad = false;
        }
        if (nodes_[loss.id()].requires_grad) {
            accumulate(loss, Matrix(1, 1, 1.0));
            for (std::size_t i = loss.id() + 1; i-- > 0;) {
                Node& n = nodes_[i];
                if (!n.backward || !n.has_grad) continue;
                // Interior gradients are consumed exactly once.
                const Matrix g = std::move(n.grad);
                n.grad = Matrix();
                n.has_grad = false;
                n.backward(*this, g);
            }
        }
        Gradients out;
        for (auto& n : nodes_) {
            if (!n.requires_grad || n.param_name.empty()) continue;
            out[n.param_name] =
                n.has_grad ? std::move(n.grad) : Matrix(n.value.rows(), n.value.cols());
            n.has_grad = false;
        }
        return out;
    }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool has_grad = false;
        bool requires_grad;
        std::string param_name;
        BackwardFn backward;
    };

    void check_owner(const Var& v) const {
        if (v.tape() != this || v.id() >= nodes_.size()) {
            throw std::invalid_argument("variable does not belong to this tape");
        }
    }

    std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

namespace detail {
inline Tape& same_tape(const Var& a, const Var& b) {
    if (a.tape() == nullptr || a.tape() != b.tape()) {
        throw std::invalid_argument("operands live on different tapes");
    }
    return *a.tape();
}
}  // namespace detail

inline Var matmul(const Var& a, const Var& b) {
    Tape& t = detail::same_tape(a, b);
    return t.record(mvad::matmul(a.value(), b.value()), {a, b}, [a, b](Tape& tp, const Matrix& g) {
        if (tp.needs_grad(a)) tp.accumulate(a, mvad::matmul_nt(g, b.value()));
        if (tp.needs_grad(b)) tp.accumulate(b, mvad::matmul_tn(a.value(), g));
    });
}

/// a · bᵀ
inline Var matmul_nt(const Var& a, const Var& b) {
    Tape& t = detail::same_tape(a, b);
    return t.record(mvad::matmul_nt(a.value(), b.value()), {a, b},
                    [a, b](Tape& tp, const Matrix& g) {
                        if (tp.needs_grad(a)) tp.accumulate(a, mvad::matmul(g, b.value()));
                        if (tp.needs_grad(b)) tp.accumulate(b, mvad::matmul_tn(g, a.value()));
                    });
}

inline Var transpose(const Var& a) {
    return a.tape()->record(mvad::transpose(a.value()), {a}, [a](Tape& tp, const Matrix& g) {
        tp.accumulate(a, mvad::transpose(g));
    });
}

inline Var add(const Var& a, const Var& b) {
    Tape& t = detail::same_tape(a, b);
    return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g);
        tp.accumulate(b, g);
    });
}

inline Var sub(const Var& a, const Var& b) {
    Tape& t = detail::same_tape(a, b);
    return t.record(a.value() - b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g);
        if (tp.needs_grad(b)) tp.accumulate(b, -1.0 * g);
    });
}

/// a (n×m) + bias (1×m) broadcast over rows.
inline Var add_row(const Var& a, const Var& bias) {
    Tape& t = detail::same_tape(a, bias);
    const Matrix& av = a.value();
    const Matrix& bv = bias.value();
    if (bv.rows() != 1 || bv.cols() != av.cols()) {
        throw ShapeError("add_row: bias " + bv.shape() + " does not broadcast over " + av.shape());
    }
    Matrix out = av;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
    return t.record(std::move(out), {a, bias}, [a, bias](Tape& tp, const Matrix& g) {
        tp.accumulate(a, g);
        if (tp.needs_grad(bias)) {
            Matrix gb(1, g.cols());
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
            tp.accumulate(bias, gb);
        }
    });
}

inline Var scale(double s, const Var& a) {
    return a.tape()->record(s * a.value(), {a},
                            [a, s](Tape& tp, const Matrix& g) { tp.accumulate(a, s * g); });
}

/// s (1×1) · a, where the scalar itself may be trainable.
inline Var scale(const Var& s, const Var& a) {
    Tape& t = detail::same_tape(s, a);
    if (s.rows() != 1 || s.cols() != 1) {
        throw ShapeError("scale: expected 1x1 scalar, got " + s.value().shape());
    }
    return t.record(s.value()(0, 0) * a.value(), {s, a}, [s, a](Tape& tp, const Matrix& g) {
        if (tp.needs_grad(a)) tp.accumulate(a, s.value()(0, 0) * g);
        if (tp.needs_grad(s)) {
            double d = 0.0;
            const auto av = a.value().data();
            const auto gd = g.data();
            for (std::size_t i = 0; i < gd.size(); ++i) d += gd[i] * av[i];
            tp.accumulate(s, Matrix(1, 1, d));
        }
    });
}

/// Entrywise max(0, x); the subgradient at exactly 0 is 0.
inline Var relu(const Var& a) {
    return a.tape()->record(mvad::relu(a.value()), {a}, [a](Tape& tp, const Matrix& g) {
        Matrix ga = g;
        const auto av = a.value().data();
        auto gd = ga.data();
        for (std::size_t i = 0; i < gd.size(); ++i)
            if (!(av[i] > 0.0)) gd[i] = 0.0;
        tp.accumulate(a, ga);
    });
}

inline Var sigmoid(const Var& a) {
    Matrix out = mvad::sigmoid(a.value());
    Tape& t = *a.tape();
    const std::size_t out_id = t.size();
    return t.record(std::move(out), {a}, [a, out_id](Tape& tp, const Matrix& g) {
        const auto sv = tp.value(out_id).data();
        Matrix ga = g;
        auto gd = ga.data();
        for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= sv[i] * (1.0 - sv[i]);
        tp.accumulate(a, ga);
    });
}

/// Sum of squared entries as a 1×1 node.
inline Var frobenius_sq(const Var& a) {
    return a.tape()->record(Matrix(1, 1, mvad::frobenius_sq(a.value())), {a},
                            [a](Tape& tp, const Matrix& g) {
                                tp.accumulate(a, (2.0 * g(0, 0)) * a.value());
                            });
}

inline Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no operands");
    Tape& t = *parts.front().tape();
    std::vector<const Matrix*> blocks;
    std::vector<std::size_t> widths;
    for (const Var& p : parts) {
        detail::same_tape(parts.front(), p);
        blocks.push_back(&p.value());
        widths.push_back(p.cols());
    }
    Matrix out = mvad::concat_cols(std::span<const Matrix* const>(blocks));
    return t.record(std::move(out), parts, [parts, widths](Tape& tp, const Matrix& g) {
        std::size_t off = 0;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (tp.needs_grad(parts[i])) tp.accumulate(parts[i], mvad::slice_cols(g, off, widths[i]));
            off += widths[i];
        }
    });
}

inline Var slice_cols(const Var& a, std::size_t begin, std::size_t width) {
    return a.tape()->record(mvad::slice_cols(a.value(), begin, width), {a},
                            [a, begin, width](Tape& tp, const Matrix& g) {
                                Matrix ga(a.rows(), a.cols());
                                for (std::size_t r = 0; r < g.rows(); ++r)
                                    for (std::size_t c = 0; c < width; ++c)
                                        ga(r, begin + c) = g(r, c);
                                tp.accumulate(a, ga);
                            });
}

/// Softmax across the columns of a 1×k row.
inline Var softmax_row(const Var& a) {
    const Matrix& av = a.value();
    if (av.rows() != 1) throw ShapeError("softmax_row: expected a single row, got " + av.shape());
    double mx = av(0, 0);
    for (double v : av.data()) mx = std::max(mx, v);
    Matrix out(1, av.cols());
    double z = 0.0;
    for (std::size_t c = 0; c < av.cols(); ++c) z += (out(0, c) = std::exp(av(0, c) - mx));
    for (double& v : out.data()) v /= z;
    Tape& t = *a.tape();
    const std::size_t out_id = t.size();
    return t.record(std::move(out), {a}, [a, out_id](Tape& tp, const Matrix& g) {
        const Matrix& s = tp.value(out_id);
        double dot = 0.0;
        for (std::size_t c = 0; c < s.cols(); ++c) dot += g(0, c) * s(0, c);
        Matrix ga(1, s.cols());
        for (std::size_t c = 0; c < s.cols(); ++c) ga(0, c) = s(0, c) * (g(0, c) - dot);
        tp.accumulate(a, ga);
    });
}

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(double s, const Var& a) { return scale(s, a); }

}  // namespace mvad::ad
