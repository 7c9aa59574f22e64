#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvad {

/// Raised whenever two operands do not have compatible shapes.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_string(rows_, cols_));
        }
    }
    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw ShapeError("ragged matrix literal");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::string shape() const { return shape_string(rows_, cols_); }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

    static std::string shape_string(std::size_t r, std::size_t c) {
        std::ostringstream os;
        os << r << "x" << c;
        return os.str();
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape() + " vs " + b.shape());
    }
}

// Product kernels. The i-k-j loop order keeps the inner loop contiguous in both
// the output and the right operand, which the compiler vectorizes.

/// a (m×k) · b (k×n)
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: shape mismatch " + a.shape() + " * " + b.shape());
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Matrix out(m, n);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = po + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = pa[i * k + p];
            if (aip == 0.0) continue;
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
        }
    }
    return out;
}

/// aᵀ (k×m)ᵀ · b (k×n) → m×n
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_tn: shape mismatch " + a.shape() + "^T * " + b.shape());
    }
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    Matrix out(m, n);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t p = 0; p < k; ++p) {
        const double* brow = pb + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double api = pa[p * m + i];
            if (api == 0.0) continue;
            double* orow = po + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += api * brow[j];
        }
    }
    return out;
}

/// a (m×k) · bᵀ (n×k)ᵀ → m×n
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: shape mismatch " + a.shape() + " * " + b.shape() + "^T");
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Matrix out(m, n);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = pb + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            po[i * n + j] = s;
        }
    }
    return out;
}

inline Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    auto o = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
    return out;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix out = a;
    auto o = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
    return out;
}

inline Matrix operator*(double s, const Matrix& a) {
    Matrix out = a;
    for (double& v : out.data()) v *= s;
    return out;
}

inline Matrix& operator+=(Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    auto o = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
    return a;
}

inline double relu(double x) noexcept { return x > 0.0 ? x : 0.0; }

/// Logistic function evaluated without overflow for large |x|.
inline double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Matrix relu(const Matrix& a) {
    Matrix out = a;
    for (double& v : out.data()) v = relu(v);
    return out;
}

inline Matrix sigmoid(const Matrix& a) {
    Matrix out = a;
    for (double& v : out.data()) v = sigmoid(v);
    return out;
}

inline double frobenius_sq(const Matrix& a) noexcept {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return s;
}

/// Column-wise concatenation [a ‖ b ‖ ...]; all blocks must share a row count.
inline Matrix concat_cols(std::span<const Matrix* const> blocks) {
    if (blocks.empty()) return {};
    const std::size_t rows = blocks.front()->rows();
    std::size_t cols = 0;
    for (const Matrix* b : blocks) {
        if (b->rows() != rows) {
            throw ShapeError("concat_cols: row mismatch " + blocks.front()->shape() + " vs " +
                             b->shape());
        }
        cols += b->cols();
    }
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t off = 0;
        for (const Matrix* b : blocks) {
            std::copy_n(b->row(r).begin(), b->cols(), out.row(r).begin() + off);
            off += b->cols();
        }
    }
    return out;
}

inline Matrix concat_cols(const std::vector<Matrix>& blocks) {
    std::vector<const Matrix*> ptrs;
    ptrs.reserve(blocks.size());
    for (const auto& b : blocks) ptrs.push_back(&b);
    return concat_cols(std::span<const Matrix* const>(ptrs));
}

/// Columns [begin, begin + width).
inline Matrix slice_cols(const Matrix& a, std::size_t begin, std::size_t width) {
    if (begin + width > a.cols()) {
        throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + width) + ") out of range for " + a.shape());
    }
    Matrix out(a.rows(), width);
    for (std::size_t r = 0; r < a.rows(); ++r)
        std::copy_n(a.row(r).begin() + begin, width, out.row(r).begin());
    return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace mvad
