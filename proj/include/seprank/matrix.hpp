#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "seprank/kernels.hpp"

namespace seprank {

// Dense row-major matrix over double or Rational.
template <class T>
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<T> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, T(0)) {}
    Mat(std::size_t r, std::size_t c, std::vector<T> entries)
        : rows(r), cols(c), a(std::move(entries)) {
        if (rows * cols != a.size()) throw std::invalid_argument("Mat: entry count mismatch");
    }

    T& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

    Mat transposed() const {
        Mat t(cols, rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool operator==(const Mat& o) const = default;
};

template <class T>
Mat<T> operator+(const Mat<T>& x, const Mat<T>& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("Mat: shape mismatch");
    Mat<T> out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.a.size(); ++i) out.a[i] = x.a[i] + y.a[i];
    return out;
}

template <class T>
Mat<T> operator-(const Mat<T>& x, const Mat<T>& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("Mat: shape mismatch");
    Mat<T> out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.a.size(); ++i) out.a[i] = x.a[i] - y.a[i];
    return out;
}

template <class T>
Mat<T> operator*(const Mat<T>& x, const Mat<T>& y) {
    if (x.cols != y.rows) throw std::invalid_argument("Mat: inner dimension mismatch");
    Mat<T> out(x.rows, y.cols);
    if constexpr (std::is_same_v<T, double>) {
        kern::active().gemm(x.a.data(), y.a.data(), out.a.data(), x.rows, x.cols, y.cols, false);
    } else {
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t p = 0; p < x.cols; ++p) {
                const T& v = x(i, p);
                if (v == T(0)) continue;
                for (std::size_t j = 0; j < y.cols; ++j) out(i, j) += v * y(p, j);
            }
    }
    return out;
}

template <class T>
std::vector<T> operator*(const Mat<T>& m, const std::vector<T>& v) {
    if (m.cols != v.size()) throw std::invalid_argument("Mat: vector length mismatch");
    std::vector<T> out(m.rows, T(0));
    if constexpr (std::is_same_v<T, double>) {
        kern::active().gemm(m.a.data(), v.data(), out.data(), m.rows, m.cols, 1, false);
    } else {
        for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t j = 0; j < m.cols; ++j) out[i] += m(i, j) * v[j];
    }
    return out;
}

template <class T>
Mat<T> operator*(const T& s, Mat<T> m) {
    for (auto& v : m.a) v = s * v;
    return m;
}

}  // namespace seprank
