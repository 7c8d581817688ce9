#pragma once

#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include <json.hpp>

#include "seprank/common.hpp"
#include "seprank/matrix.hpp"
#include "seprank/rational.hpp"

namespace seprank {

// Dense order-T tensor, flat row-major storage with the last index fastest.
// Order 0 (a scalar) is permitted: shape is empty and there is one entry.
template <class T>
struct DenseTensor {
    std::vector<std::size_t> shape;
    std::vector<T> v;

    DenseTensor() : v(1, T(0)) {}
    explicit DenseTensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        for (std::size_t d : shape)
            if (d == 0) throw std::invalid_argument("DenseTensor: zero mode dimension");
        v.assign(size_from_shape(shape), T(0));
    }
    DenseTensor(std::vector<std::size_t> s, std::vector<T> entries)
        : shape(std::move(s)), v(std::move(entries)) {
        if (size_from_shape(shape) != v.size())
            throw std::invalid_argument("DenseTensor: entry count does not match shape");
    }

    static std::size_t size_from_shape(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }

    std::size_t order() const { return shape.size(); }
    std::size_t size() const { return v.size(); }

    // Multi-index access; indices are 0-based here.
    std::size_t flat(std::span<const std::size_t> idx) const {
        if (idx.size() != shape.size()) throw std::invalid_argument("DenseTensor: index order");
        std::size_t f = 0;
        for (std::size_t t = 0; t < idx.size(); ++t) {
            if (idx[t] >= shape[t]) throw std::out_of_range("DenseTensor: index out of range");
            f = f * shape[t] + idx[t];
        }
        return f;
    }
    T& at(std::span<const std::size_t> idx) { return v[flat(idx)]; }
    const T& at(std::span<const std::size_t> idx) const { return v[flat(idx)]; }

    bool operator==(const DenseTensor& o) const = default;
};

// (a (x) b): shape is the concatenation, entries are all pairwise products.
template <class T>
DenseTensor<T> tensor_product(const DenseTensor<T>& a, const DenseTensor<T>& b) {
    std::vector<std::size_t> shape = a.shape;
    shape.insert(shape.end(), b.shape.begin(), b.shape.end());
    DenseTensor<T> out(std::move(shape));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.v[i] == T(0)) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out.v[i * b.size() + j] = a.v[i] * b.v[j];
    }
    return out;
}

// Ordered partition of the mode set [T]; mode indices are 1-based as in the
// matricization definition. I and J must be disjoint, sorted, and cover [T].
struct Partition {
    std::vector<std::size_t> i_modes;
    std::vector<std::size_t> j_modes;

    void validate(std::size_t order) const;
    static Partition start_end(std::size_t order);
};

// Requires every mode of `a` to have the same dimension M. The entry at
// (d_1..d_T) lands at row 1 + sum_t (d_{i_t}-1) M^{|I|-t} (1-based), i.e. the
// first listed mode varies slowest.
template <class T>
Mat<T> matricize(const DenseTensor<T>& a, const Partition& p) {
    p.validate(a.order());
    std::size_t m = a.order() == 0 ? 1 : a.shape[0];
    for (std::size_t d : a.shape)
        if (d != m) throw std::invalid_argument("matricize: unequal mode dimensions");
    std::size_t rows = 1, cols = 1;
    for (std::size_t t = 0; t < p.i_modes.size(); ++t) rows *= m;
    for (std::size_t t = 0; t < p.j_modes.size(); ++t) cols *= m;
    Mat<T> out(rows, cols);
    std::vector<std::size_t> idx(a.order(), 0);
    for (std::size_t f = 0; f < a.size(); ++f) {
        std::size_t r = 0, c = 0;
        for (std::size_t mode : p.i_modes) r = r * m + idx[mode - 1];
        for (std::size_t mode : p.j_modes) c = c * m + idx[mode - 1];
        out(r, c) = a.v[f];
        for (std::size_t t = a.order(); t-- > 0;) {
            if (++idx[t] < a.shape[t]) break;
            idx[t] = 0;
        }
    }
    return out;
}

// Inverse of matricize for equal mode dimension M and a given order.
template <class T>
DenseTensor<T> unmatricize(const Mat<T>& mat, const Partition& p, std::size_t m,
                           std::size_t order) {
    p.validate(order);
    DenseTensor<T> out(std::vector<std::size_t>(order, m));
    std::vector<std::size_t> idx(order, 0);
    for (std::size_t f = 0; f < out.size(); ++f) {
        std::size_t r = 0, c = 0;
        for (std::size_t mode : p.i_modes) r = r * m + idx[mode - 1];
        for (std::size_t mode : p.j_modes) c = c * m + idx[mode - 1];
        out.v[f] = mat(r, c);
        for (std::size_t t = order; t-- > 0;) {
            if (++idx[t] < m) break;
            idx[t] = 0;
        }
    }
    return out;
}

// Order-3 tensor with ones exactly on the super-diagonal.
template <class T>
DenseTensor<T> delta_tensor(std::size_t r) {
    if (r == 0) throw std::invalid_argument("delta_tensor: R >= 1 required");
    DenseTensor<T> out({r, r, r});
    for (std::size_t i = 0; i < r; ++i) out.v[(i * r + i) * r + i] = T(1);
    return out;
}

// Entrywise p-th power; p = 0 yields the all-ones matrix.
template <class T>
Mat<T> hadamard_power(const Mat<T>& m, std::uint64_t p) {
    Mat<T> out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.a.size(); ++i) {
        if constexpr (std::is_same_v<T, double>) {
            out.a[i] = std::pow(m.a[i], static_cast<double>(p));
        } else {
            out.a[i] = m.a[i].pow(static_cast<long long>(p));
        }
    }
    return out;
}

// Multiset coefficient ((n multichoose k)) = binomial(n+k-1, k).
// k > 0 together with n = 0 is a domain error.
BigInt multiset_coeff(std::uint64_t n, std::uint64_t k);
BigInt binomial(std::uint64_t n, std::uint64_t k);

// Count of singular values above rel_tol * sigma_max * max(rows, cols).
std::size_t numeric_rank(const Mat<double>& m, double rel_tol = 1e-10);

// Exact rank over the rationals: rows are scaled integer-free, then reduced by
// fraction-free (Bareiss) elimination with partial pivoting on numerator
// magnitude.
std::size_t exact_rank(const Mat<Rational>& m);
std::size_t exact_rank_int(Mat<BigInt> m);

// Matrix-product-state chain: order-3 cores (bond_left, phys, bond_right)
// plus boundary vectors closing the first and last bond.
template <class T>
struct MpsChain {
    std::vector<DenseTensor<T>> cores;
    std::vector<T> left;
    std::vector<T> right;

    void validate() const {
        if (cores.empty()) throw std::invalid_argument("MpsChain: no cores");
        for (const auto& c : cores)
            if (c.order() != 3) throw std::invalid_argument("MpsChain: cores must be order 3");
        if (left.size() != cores.front().shape[0] || right.size() != cores.back().shape[2])
            throw std::invalid_argument("MpsChain: boundary length mismatch");
        for (std::size_t t = 0; t + 1 < cores.size(); ++t)
            if (cores[t].shape[2] != cores[t + 1].shape[0])
                throw std::invalid_argument("MpsChain: bond dimension mismatch");
    }
};

// The recurrent unit cell: core(k', d, k) = w_in(k, d) * w_hid(k, k').
template <class T>
DenseTensor<T> mps_unit_cell(const Mat<T>& w_in, const Mat<T>& w_hid) {
    const std::size_t r = w_in.rows, m = w_in.cols;
    if (w_hid.rows != r || w_hid.cols != r)
        throw std::invalid_argument("mps_unit_cell: hidden matrix must be R x R");
    DenseTensor<T> core({r, m, r});
    for (std::size_t kp = 0; kp < r; ++kp)
        for (std::size_t d = 0; d < m; ++d)
            for (std::size_t k = 0; k < r; ++k)
                core.v[(kp * m + d) * r + k] = w_in(k, d) * w_hid(k, kp);
    return core;
}

// Contracts all bond indices, leaving the physical legs open, in one
// left-to-right sweep. The cap bounds the materialized output entry count.
template <class T>
DenseTensor<T> mps_contract(const MpsChain<T>& chain, std::size_t cap = kDefaultTensorCap) {
    chain.validate();
    std::size_t out_size = 1;
    for (const auto& c : chain.cores) {
        out_size *= c.shape[1];
        if (out_size > cap) throw CapExceeded("mps_contract: output exceeds entry cap");
    }
    // cur holds the partial contraction over (d_1..d_t, k_t), k_t fastest.
    std::vector<T> cur = chain.left;
    std::size_t phys_prefix = 1;
    for (const auto& core : chain.cores) {
        const std::size_t bl = core.shape[0], m = core.shape[1], br = core.shape[2];
        std::vector<T> next(phys_prefix * m * br, T(0));
        for (std::size_t x = 0; x < phys_prefix; ++x) {
            const T* row = &cur[x * bl];
            for (std::size_t kp = 0; kp < bl; ++kp) {
                if (row[kp] == T(0)) continue;
                const T* slab = &core.v[kp * m * br];
                T* dst = &next[x * m * br];
                for (std::size_t i = 0; i < m * br; ++i) {
                    if (slab[i] == T(0)) continue;
                    dst[i] += row[kp] * slab[i];
                }
            }
        }
        cur = std::move(next);
        phys_prefix *= m;
    }
    std::vector<std::size_t> shape;
    shape.reserve(chain.cores.size());
    for (const auto& c : chain.cores) shape.push_back(c.shape[1]);
    DenseTensor<T> out(std::move(shape));
    const std::size_t br = chain.right.size();
    for (std::size_t x = 0; x < phys_prefix; ++x) {
        T acc(0);
        for (std::size_t k = 0; k < br; ++k) acc += cur[x * br + k] * chain.right[k];
        out.v[x] = acc;
    }
    return out;
}

// Debug/golden-file JSON form: {"shape": [...], "entries": [...]}.
void to_json(nlohmann::json& j, const DenseTensor<double>& t);
void from_json(const nlohmann::json& j, DenseTensor<double>& t);
void to_json(nlohmann::json& j, const DenseTensor<Rational>& t);
void from_json(const nlohmann::json& j, DenseTensor<Rational>& t);

}  // namespace seprank
