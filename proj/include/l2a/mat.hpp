// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace l2a {

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Dense row-major 2-D matrix. Everything sequence-shaped in the library is
// one of these; float is the working precision, double instantiations exist
// for oracle twins in the tests and gradient checks.
template <typename T>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, T(0)) {
        if (r < 0 || c < 0) throw ShapeError("Mat: negative dimensions");
    }
    Mat(int r, int c, std::vector<T> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != static_cast<size_t>(r) * c) throw ShapeError("Mat: data length mismatch");
    }

    static Mat zeros(int r, int c) { return Mat(r, c); }

    T* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
    const T* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }

    T& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    const T& at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    size_t size() const { return data.size(); }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

using SeqMatrix = Mat<float>;

template <typename T>
Mat<T> transpose(const Mat<T>& a) {
    Mat<T> t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

template <typename T>
void add_inplace(Mat<T>& a, const Mat<T>& b) {
    if (!a.same_shape(b)) throw ShapeError("add_inplace: shape mismatch");
    for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

template <typename T>
Mat<T> operator+(const Mat<T>& a, const Mat<T>& b) {
    Mat<T> c = a;
    add_inplace(c, b);
    return c;
}

template <typename T>
T max_abs_diff(const Mat<T>& a, const Mat<T>& b) {
    if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shape mismatch");
    T m = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        T d = a.data[i] - b.data[i];
        if (d < 0) d = -d;
        if (d > m) m = d;
    }
    return m;
}

template <typename T, typename U>
Mat<T> castmat(const Mat<U>& a) {
    Mat<T> out(a.rows, a.cols);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = static_cast<T>(a.data[i]);
    return out;
}

}  // namespace l2a
