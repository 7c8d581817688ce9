#include "seprank/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "seprank/linalg.hpp"

namespace seprank {

void Partition::validate(std::size_t order) const {
    std::vector<bool> seen(order, false);
    auto check = [&](const std::vector<std::size_t>& modes) {
        for (std::size_t t = 0; t < modes.size(); ++t) {
            std::size_t mode = modes[t];
            if (mode == 0 || mode > order) throw std::invalid_argument("Partition: mode out of range");
            if (seen[mode - 1]) throw std::invalid_argument("Partition: duplicate mode");
            if (t > 0 && modes[t - 1] >= mode)
                throw std::invalid_argument("Partition: modes must be ascending");
            seen[mode - 1] = true;
        }
    };
    check(i_modes);
    check(j_modes);
    if (i_modes.size() + j_modes.size() != order)
        throw std::invalid_argument("Partition: does not cover all modes");
}

Partition Partition::start_end(std::size_t order) {
    if (order % 2 != 0) throw std::invalid_argument("Partition: start-end needs even order");
    Partition p;
    for (std::size_t t = 1; t <= order / 2; ++t) p.i_modes.push_back(t);
    for (std::size_t t = order / 2 + 1; t <= order; ++t) p.j_modes.push_back(t);
    return p;
}

BigInt binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    BigInt out = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        out *= BigInt::from_u64(n - k + i);
        out = out / BigInt::from_u64(i);
    }
    return out;
}

BigInt multiset_coeff(std::uint64_t n, std::uint64_t k) {
    if (k == 0) return 1;
    if (n == 0) throw std::domain_error("multiset_coeff: n = 0 with k > 0");
    return binomial(n + k - 1, k);
}

std::size_t numeric_rank(const Mat<double>& m, double rel_tol) {
    if (rel_tol <= 0) throw std::invalid_argument("numeric_rank: rel_tol must be positive");
    for (double x : m.a)
        if (!std::isfinite(x)) throw NumericError("numeric_rank: non-finite entry");
    if (m.a.empty()) return 0;
    Svd s = jacobi_svd(m);
    if (s.sigma.empty() || s.sigma[0] == 0.0) return 0;
    const double thresh = rel_tol * s.sigma[0] * static_cast<double>(std::max(m.rows, m.cols));
    std::size_t rank = 0;
    for (double sig : s.sigma)
        if (sig > thresh) ++rank;
    return rank;
}

std::size_t exact_rank_int(Mat<BigInt> m) {
    const std::size_t rows = m.rows, cols = m.cols;
    std::size_t rank = 0;
    BigInt prev = 1;
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        std::size_t pivot = rank;
        bool found = false;
        for (std::size_t i = rank; i < rows; ++i) {
            if (m(i, col).is_zero()) continue;
            if (!found || m(i, col).compare_abs(m(pivot, col)) > 0) {
                pivot = i;
                found = true;
            }
        }
        if (!found) continue;
        if (pivot != rank)
            for (std::size_t j = col; j < cols; ++j) std::swap(m(pivot, j), m(rank, j));
        const BigInt& p = m(rank, col);
        for (std::size_t i = rank + 1; i < rows; ++i) {
            const BigInt f = m(i, col);
            for (std::size_t j = col + 1; j < cols; ++j) {
                BigInt q, r;
                BigInt::divmod(m(i, j) * p - f * m(rank, j), prev, q, r);
                // Bareiss guarantees exact division by the previous pivot.
                if (!r.is_zero()) throw NumericError("exact_rank: inexact Bareiss division");
                m(i, j) = std::move(q);
            }
            m(i, col) = 0;
        }
        prev = p;
        ++rank;
    }
    return rank;
}

std::size_t exact_rank(const Mat<Rational>& m) {
    Mat<BigInt> scaled(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        // Row scaling by the lcm of denominators preserves rank.
        BigInt l = 1;
        for (std::size_t j = 0; j < m.cols; ++j) {
            const BigInt& d = m(i, j).den();
            l = l / BigInt::gcd(l, d) * d;
        }
        for (std::size_t j = 0; j < m.cols; ++j) {
            scaled(i, j) = m(i, j).num() * (l / m(i, j).den());
        }
    }
    return exact_rank_int(std::move(scaled));
}

void to_json(nlohmann::json& j, const DenseTensor<double>& t) {
    j = nlohmann::json{{"shape", t.shape}, {"entries", t.v}};
}

void from_json(const nlohmann::json& j, DenseTensor<double>& t) {
    t = DenseTensor<double>(j.at("shape").get<std::vector<std::size_t>>(),
                            j.at("entries").get<std::vector<double>>());
}

void to_json(nlohmann::json& j, const DenseTensor<Rational>& t) {
    std::vector<std::string> entries;
    entries.reserve(t.v.size());
    for (const auto& r : t.v) entries.push_back(r.to_string());
    j = nlohmann::json{{"shape", t.shape}, {"entries", entries}};
}

void from_json(const nlohmann::json& j, DenseTensor<Rational>& t) {
    auto shape = j.at("shape").get<std::vector<std::size_t>>();
    std::vector<Rational> entries;
    for (const auto& s : j.at("entries")) entries.push_back(Rational::from_string(s.get<std::string>()));
    t = DenseTensor<Rational>(std::move(shape), std::move(entries));
}

}  // namespace seprank
