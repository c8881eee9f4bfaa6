#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dalta/errors.hpp"

namespace dalta {

// Dense row-major matrix of doubles. The whole kernel is 64-bit on purpose:
// gradient checks at 1e-4 relative tolerance are not reliable in 32-bit.
struct Tensor2 {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {
        if (r < 0 || c < 0) throw DimensionError("Tensor2: negative dimension");
    }

    static Tensor2 identity(int n) {
        Tensor2 t(n, n);
        for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
        return t;
    }

    size_t size() const { return data.size(); }

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    double* row_ptr(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row_ptr(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }

    Tensor2& operator+=(const Tensor2& o) {
        if (!same_shape(o)) throw DimensionError("Tensor2 +=: shape mismatch");
        for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
        return *this;
    }

    Tensor2& scale(double s) {
        for (double& v : data) v *= s;
        return *this;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void ensure_finite(const Tensor2& t, const std::string& where) {
    if (!t.all_finite()) throw NumericError("non-finite values in " + where);
}

// a(m,k) * b(k,n). ikj order keeps the inner loop contiguous in both b and out.
inline Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.rows)
        throw DimensionError("matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                             " times " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    Tensor2 out(a.rows, b.cols);
    const int m = a.rows, k = a.cols, n = b.cols;
    for (int i = 0; i < m; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b.row_ptr(p);
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    ensure_finite(out, "matmul output");
    return out;
}

// a(k,m)^T * b(k,n) -> (m,n). Used for weight gradients (X^T dY).
inline Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
    if (a.rows != b.rows) throw DimensionError("matmul_tn: row mismatch");
    Tensor2 out(a.cols, b.cols);
    const int k = a.rows, m = a.cols, n = b.cols;
    for (int p = 0; p < k; ++p) {
        const double* arow = a.row_ptr(p);
        const double* brow = b.row_ptr(p);
        for (int i = 0; i < m; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* orow = out.row_ptr(i);
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    ensure_finite(out, "matmul_tn output");
    return out;
}

// a(m,k) * b(n,k)^T -> (m,n). Used for input gradients (dY W^T).
inline Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.cols) throw DimensionError("matmul_nt: col mismatch");
    Tensor2 out(a.rows, b.rows);
    const int m = a.rows, k = a.cols, n = b.rows;
    for (int i = 0; i < m; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (int j = 0; j < n; ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            orow[j] = acc;
        }
    }
    ensure_finite(out, "matmul_nt output");
    return out;
}

// x + broadcast row bias (bias is 1 x cols).
inline Tensor2 add_row_bias(const Tensor2& x, const Tensor2& bias) {
    if (bias.rows != 1 || bias.cols != x.cols) throw DimensionError("add_row_bias: bias shape");
    Tensor2 out = x;
    for (int i = 0; i < x.rows; ++i) {
        double* row = out.row_ptr(i);
        const double* b = bias.row_ptr(0);
        for (int j = 0; j < x.cols; ++j) row[j] += b[j];
    }
    return out;
}

inline Tensor2 column_sums(const Tensor2& x) {
    Tensor2 out(1, x.cols);
    for (int i = 0; i < x.rows; ++i) {
        const double* row = x.row_ptr(i);
        for (int j = 0; j < x.cols; ++j) out.data[j] += row[j];
    }
    return out;
}

// Row-wise softmax with per-row max subtraction; rows sum to 1 within 1e-12
// for any finite input.
inline Tensor2 softmax_rows(const Tensor2& x) {
    Tensor2 out(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i) {
        const double* row = x.row_ptr(i);
        double* orow = out.row_ptr(i);
        double mx = row[0];
        for (int j = 1; j < x.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < x.cols; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (int j = 0; j < x.cols; ++j) orow[j] /= sum;
    }
    return out;
}

// Backward of softmax_rows given its output y and upstream dy:
// dx_i = y_i * (dy_i - sum_j dy_j y_j), per row.
inline Tensor2 softmax_rows_backward(const Tensor2& y, const Tensor2& dy) {
    if (!y.same_shape(dy)) throw DimensionError("softmax_rows_backward: shape mismatch");
    Tensor2 dx(y.rows, y.cols);
    for (int i = 0; i < y.rows; ++i) {
        const double* yr = y.row_ptr(i);
        const double* dr = dy.row_ptr(i);
        double* xr = dx.row_ptr(i);
        double dot = 0.0;
        for (int j = 0; j < y.cols; ++j) dot += dr[j] * yr[j];
        for (int j = 0; j < y.cols; ++j) xr[j] = yr[j] * (dr[j] - dot);
    }
    return dx;
}

inline double stable_softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Tensor2 softplus(const Tensor2& x) {
    Tensor2 out(x.rows, x.cols);
    for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = stable_softplus(x.data[i]);
    return out;
}

// d softplus(x) = sigmoid(x), applied to the pre-activation.
inline Tensor2 softplus_backward(const Tensor2& pre, const Tensor2& dpost) {
    if (!pre.same_shape(dpost)) throw DimensionError("softplus_backward: shape mismatch");
    Tensor2 dx(pre.rows, pre.cols);
    for (size_t i = 0; i < pre.data.size(); ++i) dx.data[i] = dpost.data[i] * sigmoid(pre.data[i]);
    return dx;
}

inline Tensor2 relu(const Tensor2& x) {
    Tensor2 out(x.rows, x.cols);
    for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
    return out;
}

inline Tensor2 relu_backward(const Tensor2& pre, const Tensor2& dpost) {
    if (!pre.same_shape(dpost)) throw DimensionError("relu_backward: shape mismatch");
    Tensor2 dx(pre.rows, pre.cols);
    for (size_t i = 0; i < pre.data.size(); ++i)
        dx.data[i] = pre.data[i] > 0.0 ? dpost.data[i] : 0.0;
    return dx;
}

} // namespace dalta
