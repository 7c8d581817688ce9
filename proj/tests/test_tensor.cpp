#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "seprank/tensor.hpp"
#include "testutil.hpp"

using namespace seprank;

namespace {

template <class T>
DenseTensor<T> vec_tensor(std::vector<T> v) {
    const std::size_t n = v.size();
    return DenseTensor<T>({n}, std::move(v));
}

// Independent contraction oracle: literal nested sum over every bond index.
template <class T>
DenseTensor<T> naive_mps_contract(const MpsChain<T>& chain) {
    chain.validate();
    std::vector<std::size_t> shape;
    for (const auto& c : chain.cores) shape.push_back(c.shape[1]);
    DenseTensor<T> out(shape);
    std::vector<std::size_t> phys(chain.cores.size(), 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        {
            std::size_t rem = flat;
            for (std::size_t t = chain.cores.size(); t-- > 0;) {
                phys[t] = rem % shape[t];
                rem /= shape[t];
            }
        }
        // Sum over all bond assignments k_0..k_T.
        std::vector<std::size_t> bonds(chain.cores.size() + 1, 0);
        T acc(0);
        for (;;) {
            bool valid = true;
            for (std::size_t t = 0; t <= chain.cores.size() && valid; ++t) {
                const std::size_t dim = t == 0 ? chain.left.size() : chain.cores[t - 1].shape[2];
                if (bonds[t] >= dim) valid = false;
            }
            if (valid) {
                T term = chain.left[bonds[0]] * chain.right[bonds[chain.cores.size()]];
                for (std::size_t t = 0; t < chain.cores.size(); ++t) {
                    const auto& c = chain.cores[t];
                    term = term * c.v[(bonds[t] * c.shape[1] + phys[t]) * c.shape[2] + bonds[t + 1]];
                }
                acc += term;
            }
            std::size_t t = chain.cores.size() + 1;
            bool done = true;
            while (t-- > 0) {
                const std::size_t dim = t == 0 ? chain.left.size() : chain.cores[t - 1].shape[2];
                if (++bonds[t] < dim) {
                    done = false;
                    break;
                }
                bonds[t] = 0;
            }
            if (done) break;
        }
        out.v[flat] = acc;
    }
    return out;
}

}  // namespace

TEST_CASE("tensor product basics") {
    auto a = vec_tensor<Rational>({1, 2});
    auto b = vec_tensor<Rational>({3, 4});
    auto ab = tensor_product(a, b);
    CHECK(ab.shape == std::vector<std::size_t>{2, 2});
    CHECK(ab.v == std::vector<Rational>{3, 4, 6, 8});

    DenseTensor<Rational> scalar;
    scalar.v[0] = 1;
    CHECK(tensor_product(scalar, ab) == ab);
    CHECK(tensor_product(ab, scalar) == ab);

    auto e1 = vec_tensor<Rational>({1, 0});
    auto e2 = vec_tensor<Rational>({0, 1});
    auto basis = tensor_product(e1, e2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            std::vector<std::size_t> idx{i, j};
            CHECK(basis.at(idx) == Rational(i == 0 && j == 1 ? 1 : 0));
        }
}

TEST_CASE("matricize follows the index formula") {
    // Order 2, I={1}, J={2}: the tensor read verbatim.
    DenseTensor<Rational> t({2, 2}, {Rational(1), Rational(2), Rational(3), Rational(4)});
    Mat<Rational> m = matricize(t, Partition{{1}, {2}});
    CHECK(m(0, 0) == Rational(1));
    CHECK(m(0, 1) == Rational(2));
    CHECK(m(1, 0) == Rational(3));
    CHECK(m(1, 1) == Rational(4));

    // Order 4, M=2: entry (2,1,1,2) lands at row 3, col 2 (1-based) under the
    // start-end split.
    DenseTensor<Rational> t4({2, 2, 2, 2});
    std::vector<std::size_t> idx{1, 0, 0, 1};  // 0-based for (2,1,1,2)
    t4.at(idx) = 7;
    Mat<Rational> m4 = matricize(t4, Partition::start_end(4));
    CHECK(m4(2, 1) == Rational(7));  // 0-based (2,1) == 1-based (3,2)
    std::size_t nonzero = 0;
    for (auto& v : m4.a)
        if (!v.is_zero()) ++nonzero;
    CHECK(nonzero == 1);

    // matricize(u (x) v) is the outer product u v^T.
    auto u = vec_tensor<Rational>({2, -1, 3});
    auto v = vec_tensor<Rational>({5, 0, 1});
    Mat<Rational> outer = matricize(tensor_product(u, v), Partition{{1}, {2}});
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(outer(i, j) == u.v[i] * v.v[j]);
    CHECK(exact_rank(outer) == 1);

    // Rank 1 for every pair of nonzero vectors.
    Rng rng(71);
    std::uniform_int_distribution<int> e(-6, 6);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 2 + trial % 4;
        DenseTensor<Rational> a({n}), b({n});
        do {
            for (auto& x : a.v) x = Rational(e(rng));
        } while (std::all_of(a.v.begin(), a.v.end(), [](const Rational& r) { return r.is_zero(); }));
        do {
            for (auto& x : b.v) x = Rational(e(rng));
        } while (std::all_of(b.v.begin(), b.v.end(), [](const Rational& r) { return r.is_zero(); }));
        CHECK(exact_rank(matricize(tensor_product(a, b), Partition{{1}, {2}})) == 1);
    }
}

TEST_CASE("matricize round-trips for random tensors and partitions") {
    Rng rng(41);
    std::uniform_int_distribution<int> entry(-9, 9);
    for (std::size_t order = 1; order <= 6; ++order) {
        const std::size_t m = order <= 3 ? 3 : 2;
        DenseTensor<Rational> t(std::vector<std::size_t>(order, m));
        for (auto& v : t.v) v = Rational(entry(rng));
        for (int trial = 0; trial < 4; ++trial) {
            Partition p;
            for (std::size_t mode = 1; mode <= order; ++mode) {
                if (rng() % 2)
                    p.i_modes.push_back(mode);
                else
                    p.j_modes.push_back(mode);
            }
            Mat<Rational> m2 = matricize(t, p);
            CHECK(unmatricize(m2, p, m, order) == t);
        }
    }
}

TEST_CASE("matricize rejects invalid input") {
    DenseTensor<Rational> uneven({2, 3});
    CHECK_THROWS_AS(matricize(uneven, Partition{{1}, {2}}), std::invalid_argument);
    DenseTensor<Rational> t({2, 2});
    CHECK_THROWS_AS(matricize(t, Partition{{1}, {1}}), std::invalid_argument);
    CHECK_THROWS_AS(matricize(t, Partition{{1}, {}}), std::invalid_argument);
    CHECK_THROWS_AS(matricize(t, Partition{{2, 1}, {}}), std::invalid_argument);
}

TEST_CASE("numeric rank") {
    CHECK(numeric_rank(Mat<double>::identity(3)) == 3);
    Mat<double> outer(3, 4);
    std::vector<double> x{1, -2, 0.5}, y{3, 1, 0, -1};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) outer(i, j) = x[i] * y[j];
    CHECK(numeric_rank(outer) == 1);
    Mat<double> prop(2, 2, {1, 2, 2, 4});
    CHECK(numeric_rank(prop) == 1);
    CHECK(numeric_rank(Mat<double>(5, 5)) == 0);
    Mat<double> infbad(1, 1, {std::numeric_limits<double>::infinity()});
    CHECK_THROWS_AS(numeric_rank(infbad), NumericError);
}

TEST_CASE("exact rank") {
    CHECK(exact_rank(Mat<Rational>::identity(4)) == 4);
    CHECK(exact_rank(Mat<Rational>(3, 5)) == 0);
    // Vandermonde on nodes {1,2,3} is nonsingular.
    Mat<Rational> vand(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) vand(i, j) = Rational(i + 1).pow(j);
    CHECK(exact_rank(vand) == 3);
    // Rational entries exercise the row-lcm clearing.
    Mat<Rational> frac(2, 2, {Rational(1, 2), Rational(1, 3), Rational(3, 2), Rational(1, 5)});
    CHECK(exact_rank(frac) == 2);
    // Proportional rows: (1/2, 1/3) * 3 == (3/2, 1).
    Mat<Rational> fracdef(2, 2, {Rational(1, 2), Rational(1, 3), Rational(3, 2), Rational(1, 1)});
    CHECK(exact_rank(fracdef) == 1);
}

TEST_CASE("numeric_rank agrees with exact_rank on random integer matrices") {
    Rng rng(2024);
    std::uniform_int_distribution<std::size_t> dim(1, 20);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t r = dim(rng), c = dim(rng);
        Mat<Rational> m = testutil::random_int_matrix(r, c, rng, -4, 4);
        // Bias toward interesting ranks: zero out a random set of rows.
        if (trial % 3 == 0) {
            for (std::size_t i = 0; i < r; i += 2)
                for (std::size_t j = 0; j < c; ++j) m(i, j) = m((i + 1) % r, j);
        }
        CHECK(numeric_rank(testutil::to_double(m)) == exact_rank(m));
    }
}

TEST_CASE("hadamard power") {
    Mat<Rational> m(2, 2, {1, 2, 3, 4});
    Mat<Rational> sq = hadamard_power(m, 2);
    CHECK(sq.a == std::vector<Rational>{1, 4, 9, 16});
    CHECK(hadamard_power(m, 1) == m);
    Mat<Rational> ones = hadamard_power(m, 0);
    for (auto& v : ones.a) CHECK(v == Rational(1));
}

TEST_CASE("hadamard rank bound on random rank-2 matrices at p=3") {
    Rng rng(5);
    const BigInt bound = multiset_coeff(2, 3);  // 4
    CHECK(bound == BigInt(4));
    for (int trial = 0; trial < 40; ++trial) {
        Mat<double> m = testutil::random_low_rank(5, 5, 2, rng);
        CHECK(numeric_rank(hadamard_power(m, 3)) <= 4);
    }
}

TEST_CASE("multiset coefficient") {
    CHECK(multiset_coeff(3, 2) == BigInt(6));
    CHECK(multiset_coeff(7, 0) == BigInt(1));
    CHECK(multiset_coeff(2, 2) == BigInt(3));
    CHECK(multiset_coeff(0, 0) == BigInt(1));
    CHECK_THROWS_AS(multiset_coeff(0, 1), std::domain_error);
    // Pascal-style recurrence; the n = 1 boundary has an empty n-1 term.
    for (std::uint64_t n = 2; n <= 6; ++n)
        for (std::uint64_t k = 1; k <= 6; ++k)
            CHECK(multiset_coeff(n, k) == multiset_coeff(n - 1, k) + multiset_coeff(n, k - 1));
    for (std::uint64_t k = 1; k <= 6; ++k) CHECK(multiset_coeff(1, k) == multiset_coeff(1, k - 1));
}

TEST_CASE("delta tensor") {
    auto d1 = delta_tensor<Rational>(1);
    CHECK(d1.v == std::vector<Rational>{1});
    auto d2 = delta_tensor<Rational>(2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k) {
                std::vector<std::size_t> idx{i, j, k};
                CHECK(d2.at(idx) == Rational(i == j && j == k ? 1 : 0));
            }
    // Contracting one leg with all-ones gives the identity.
    for (std::size_t r = 1; r <= 4; ++r) {
        auto d = delta_tensor<Rational>(r);
        Mat<Rational> contracted(r, r);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < r; ++j) {
                Rational acc(0);
                for (std::size_t k = 0; k < r; ++k) {
                    std::vector<std::size_t> idx{i, j, k};
                    acc += d.at(idx);
                }
                contracted(i, j) = acc;
            }
        CHECK(contracted == Mat<Rational>::identity(r));
    }
}

TEST_CASE("mps unit cell") {
    // Identity weights: entry 1 iff k' = d = k.
    auto core = mps_unit_cell(Mat<Rational>::identity(3), Mat<Rational>::identity(3));
    CHECK(core == delta_tensor<Rational>(3));

    // R=1 reduces to the single input row scaled by W^H_{11}.
    Mat<Rational> w_in(1, 4, {2, 3, 5, 7});
    Mat<Rational> w_hid(1, 1, {Rational(1, 2)});
    auto tiny = mps_unit_cell(w_in, w_hid);
    CHECK(tiny.shape == std::vector<std::size_t>{1, 4, 1});
    for (std::size_t d = 0; d < 4; ++d) CHECK(tiny.v[d] == w_in(0, d) * Rational(1, 2));

    // Random 2x2: direct formula at every entry.
    Rng rng(3);
    auto a = testutil::random_int_matrix(2, 2, rng);
    auto b = testutil::random_int_matrix(2, 2, rng);
    auto c = mps_unit_cell(a, b);
    for (std::size_t kp = 0; kp < 2; ++kp)
        for (std::size_t d = 0; d < 2; ++d)
            for (std::size_t k = 0; k < 2; ++k) {
                std::vector<std::size_t> idx{kp, d, k};
                CHECK(c.at(idx) == a(k, d) * b(k, kp));
            }
}

TEST_CASE("mps contraction against the naive oracle") {
    // Single core with dim-1 boundaries: the physical slice.
    Mat<Rational> w_in(1, 3, {4, 5, 6});
    Mat<Rational> w_hid(1, 1, {1});
    MpsChain<Rational> single{{mps_unit_cell(w_in, w_hid)}, {Rational(1)}, {Rational(1)}};
    auto got = mps_contract(single);
    CHECK(got.shape == std::vector<std::size_t>{3});
    CHECK(got.v == std::vector<Rational>{4, 5, 6});

    // All-identity cores with all-ones boundaries: 1 iff all indices equal.
    MpsChain<Rational> ident;
    for (int t = 0; t < 3; ++t)
        ident.cores.push_back(mps_unit_cell(Mat<Rational>::identity(2), Mat<Rational>::identity(2)));
    ident.left.assign(2, Rational(1));
    ident.right.assign(2, Rational(1));
    auto diag = mps_contract(ident);
    std::vector<std::size_t> idx(3);
    for (idx[0] = 0; idx[0] < 2; ++idx[0])
        for (idx[1] = 0; idx[1] < 2; ++idx[1])
            for (idx[2] = 0; idx[2] < 2; ++idx[2]) {
                const bool same = idx[0] == idx[1] && idx[1] == idx[2];
                CHECK(diag.at(idx) == Rational(same ? 1 : 0));
            }

    // Random chains, exact equality with the nested-loop oracle.
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t r = 1 + trial % 3, m = 2 + trial % 2, t_len = 2 + trial % 3;
        MpsChain<Rational> chain;
        for (std::size_t t = 0; t < t_len; ++t) {
            DenseTensor<Rational> core({r, m, r});
            std::uniform_int_distribution<int> e(-3, 3);
            for (auto& v : core.v) v = Rational(e(rng));
            chain.cores.push_back(std::move(core));
        }
        std::uniform_int_distribution<int> e(-3, 3);
        chain.left.resize(r);
        chain.right.resize(r);
        for (auto& v : chain.left) v = Rational(e(rng));
        for (auto& v : chain.right) v = Rational(e(rng));
        CHECK(mps_contract(chain) == naive_mps_contract(chain));
    }
}

TEST_CASE("mps contraction errors") {
    MpsChain<Rational> bad;
    bad.cores.push_back(DenseTensor<Rational>({2, 2, 3}));
    bad.cores.push_back(DenseTensor<Rational>({2, 2, 2}));  // bond mismatch 3 vs 2
    bad.left.assign(2, Rational(1));
    bad.right.assign(2, Rational(1));
    CHECK_THROWS_AS(mps_contract(bad), std::invalid_argument);

    MpsChain<Rational> big;
    for (int t = 0; t < 4; ++t) big.cores.push_back(DenseTensor<Rational>({1, 10, 1}));
    big.left.assign(1, Rational(1));
    big.right.assign(1, Rational(1));
    CHECK_THROWS_AS(mps_contract(big, 100), CapExceeded);
}

TEST_CASE("tensor json debug form round-trips") {
    DenseTensor<Rational> t({2, 2}, {Rational(1, 3), Rational(-2), Rational(0), Rational(7, 5)});
    nlohmann::json j = t;
    CHECK(j.at("shape") == nlohmann::json({2, 2}));
    auto back = j.get<DenseTensor<Rational>>();
    CHECK(back == t);

    DenseTensor<double> td({3}, {0.5, -1.25, 3.0});
    nlohmann::json jd = td;
    CHECK(jd.get<DenseTensor<double>>() == td);
}
