// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "l2a/mat.hpp"

namespace l2a {

inline constexpr float kDefaultLnEps = 1e-5f;

struct RopeConfig {
    float base_frequency = 10000.0f;
    int head_dim = 0;
    bool enabled = true;
};

// c[i][j] = sum_k a[i][k] * b[k][j], k accumulated in ascending order.
template <typename T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
    if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
    Mat<T> c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const T* arow = a.row(i);
        T* crow = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const T aik = arow[k];
            if (aik == T(0)) continue;
            const T* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

// Row-wise softmax with per-row max subtraction. -inf entries act as masks;
// a row that is entirely -inf comes back all zero.
template <typename T>
Mat<T> row_softmax(const Mat<T>& x) {
    Mat<T> out(x.rows, x.cols);
    const T neg_inf = -std::numeric_limits<T>::infinity();
    for (int i = 0; i < x.rows; ++i) {
        const T* xr = x.row(i);
        T* yr = out.row(i);
        T m = neg_inf;
        for (int j = 0; j < x.cols; ++j)
            if (xr[j] > m) m = xr[j];
        if (m == neg_inf) continue;  // fully masked row stays zero
        T sum = 0;
        for (int j = 0; j < x.cols; ++j) {
            T e = (xr[j] == neg_inf) ? T(0) : std::exp(xr[j] - m);
            yr[j] = e;
            sum += e;
        }
        for (int j = 0; j < x.cols; ++j) yr[j] /= sum;
    }
    return out;
}

template <typename T>
struct LayerNormP {
    std::vector<T> gamma;
    std::vector<T> beta;

    static LayerNormP identity(int dim) {
        LayerNormP p;
        p.gamma.assign(dim, T(1));
        p.beta.assign(dim, T(0));
        return p;
    }
};
using LayerNormParams = LayerNormP<float>;

template <typename T>
Mat<T> layer_norm(const Mat<T>& x, const std::vector<T>& gamma, const std::vector<T>& beta, T eps) {
    if (static_cast<int>(gamma.size()) != x.cols || static_cast<int>(beta.size()) != x.cols)
        throw ShapeError("layer_norm: gamma/beta length mismatch");
    Mat<T> out(x.rows, x.cols);
    const T inv_n = T(1) / T(x.cols);
    for (int i = 0; i < x.rows; ++i) {
        const T* xr = x.row(i);
        T* yr = out.row(i);
        T mean = 0;
        for (int j = 0; j < x.cols; ++j) mean += xr[j];
        mean *= inv_n;
        T var = 0;
        for (int j = 0; j < x.cols; ++j) {
            T d = xr[j] - mean;
            var += d * d;
        }
        var *= inv_n;
        T rstd = T(1) / std::sqrt(var + eps);
        for (int j = 0; j < x.cols; ++j) yr[j] = (xr[j] - mean) * rstd * gamma[j] + beta[j];
    }
    return out;
}

// Saved statistics for the backward pass: normalized rows and per-row rstd.
struct LayerNormSaved {
    SeqMatrix x_hat;
    std::vector<float> rstd;
};

inline SeqMatrix layer_norm_fwd(const SeqMatrix& x, const LayerNormParams& p, float eps, LayerNormSaved* saved) {
    if (static_cast<int>(p.gamma.size()) != x.cols) throw ShapeError("layer_norm_fwd: param length mismatch");
    SeqMatrix out(x.rows, x.cols);
    if (saved) {
        saved->x_hat = SeqMatrix(x.rows, x.cols);
        saved->rstd.assign(x.rows, 0.0f);
    }
    const float inv_n = 1.0f / static_cast<float>(x.cols);
    for (int i = 0; i < x.rows; ++i) {
        const float* xr = x.row(i);
        float mean = 0;
        for (int j = 0; j < x.cols; ++j) mean += xr[j];
        mean *= inv_n;
        float var = 0;
        for (int j = 0; j < x.cols; ++j) {
            float d = xr[j] - mean;
            var += d * d;
        }
        var *= inv_n;
        float rstd = 1.0f / std::sqrt(var + eps);
        float* yr = out.row(i);
        for (int j = 0; j < x.cols; ++j) {
            float xh = (xr[j] - mean) * rstd;
            if (saved) saved->x_hat.at(i, j) = xh;
            yr[j] = xh * p.gamma[j] + p.beta[j];
        }
        if (saved) saved->rstd[i] = rstd;
    }
    return out;
}

struct LayerNormGrads {
    SeqMatrix d_x;
    std::vector<float> d_gamma;
    std::vector<float> d_beta;
};

inline LayerNormGrads layer_norm_bwd(const LayerNormSaved& saved, const LayerNormParams& p, const SeqMatrix& d_y) {
    const int n = saved.x_hat.rows, dim = saved.x_hat.cols;
    LayerNormGrads g;
    g.d_x = SeqMatrix(n, dim);
    g.d_gamma.assign(dim, 0.0f);
    g.d_beta.assign(dim, 0.0f);
    const float inv_dim = 1.0f / static_cast<float>(dim);
    for (int i = 0; i < n; ++i) {
        const float* dy = d_y.row(i);
        const float* xh = saved.x_hat.row(i);
        float sum_dxh = 0, sum_dxh_xh = 0;
        for (int j = 0; j < dim; ++j) {
            g.d_beta[j] += dy[j];
            g.d_gamma[j] += dy[j] * xh[j];
            float dxh = dy[j] * p.gamma[j];
            sum_dxh += dxh;
            sum_dxh_xh += dxh * xh[j];
        }
        const float mean_dxh = sum_dxh * inv_dim;
        const float mean_dxh_xh = sum_dxh_xh * inv_dim;
        float* dx = g.d_x.row(i);
        for (int j = 0; j < dim; ++j) {
            float dxh = dy[j] * p.gamma[j];
            dx[j] = saved.rstd[i] * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
        }
    }
    return g;
}

// Standard pairwise rotation, theta_i = pos * base^(-2i/head_dim).
// Norm of every 2-D pair is preserved; position 0 is the identity.
template <typename T>
Mat<T> apply_rope(const Mat<T>& x, const std::vector<int>& positions, const RopeConfig& cfg, bool inverse = false) {
    if (!cfg.enabled) return x;
    if (x.cols % 2 != 0) throw ShapeError("apply_rope: head_dim must be even");
    if (static_cast<int>(positions.size()) != x.rows) throw ShapeError("apply_rope: positions length mismatch");
    Mat<T> out(x.rows, x.cols);
    const int half = x.cols / 2;
    for (int i = 0; i < x.rows; ++i) {
        const T* xr = x.row(i);
        T* yr = out.row(i);
        for (int p = 0; p < half; ++p) {
            double theta = static_cast<double>(positions[i]) *
                           std::pow(static_cast<double>(cfg.base_frequency), -2.0 * p / x.cols);
            if (inverse) theta = -theta;
            T c = static_cast<T>(std::cos(theta));
            T s = static_cast<T>(std::sin(theta));
            T a = xr[2 * p], b = xr[2 * p + 1];
            yr[2 * p] = a * c - b * s;
            yr[2 * p + 1] = a * s + b * c;
        }
    }
    return out;
}

// Gradient of apply_rope: the rotation is orthogonal, so the pullback is the
// inverse rotation.
template <typename T>
Mat<T> rope_backward(const Mat<T>& d_y, const std::vector<int>& positions, const RopeConfig& cfg) {
    return apply_rope(d_y, positions, cfg, /*inverse=*/true);
}

// Central differences (f(x+h e) - f(x-h e)) / 2h per entry; the universal
// gradient oracle. The double overload evaluates a float64 objective to keep
// rounding noise out of the quotient.
inline SeqMatrix finite_diff_grad(const std::function<float(const SeqMatrix&)>& f, const SeqMatrix& x, float h) {
    SeqMatrix g(x.rows, x.cols);
    SeqMatrix probe = x;
    for (size_t i = 0; i < x.data.size(); ++i) {
        const float orig = x.data[i];
        probe.data[i] = orig + h;
        float fp = f(probe);
        probe.data[i] = orig - h;
        float fm = f(probe);
        probe.data[i] = orig;
        g.data[i] = (fp - fm) / (2.0f * h);
    }
    return g;
}

inline Mat<double> finite_diff_grad_d(const std::function<double(const Mat<double>&)>& f, const Mat<double>& x,
                                      double h) {
    Mat<double> g(x.rows, x.cols);
    Mat<double> probe = x;
    for (size_t i = 0; i < x.data.size(); ++i) {
        const double orig = x.data[i];
        probe.data[i] = orig + h;
        double fp = f(probe);
        probe.data[i] = orig - h;
        double fm = f(probe);
        probe.data[i] = orig;
        g.data[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

template <typename T>
T gelu(T x) {
    return T(0.5) * x * (T(1) + std::erf(x * T(0.7071067811865476)));
}

template <typename T>
T gelu_grad(T x) {
    const T cdf = T(0.5) * (T(1) + std::erf(x * T(0.7071067811865476)));
    const T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014327);
    return cdf + x * pdf;
}

template <typename T>
bool all_finite(const Mat<T>& m) {
    for (T v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace l2a
