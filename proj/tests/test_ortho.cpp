#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "seprank/ortho.hpp"
#include "testutil.hpp"

using namespace seprank;

TEST_CASE("cayley map basics") {
    // A = 0, D = +1: identity.
    SkewParam p;
    p.n = 3;
    p.upper.assign(3, 0.0);
    p.dsign.assign(3, 1);
    CHECK(cayley(p) == Mat<double>::identity(3));

    // A = 0, mixed D: diag(D).
    p.dsign = {1, -1, 1};
    Mat<double> w = cayley(p);
    CHECK(w(0, 0) == 1.0);
    CHECK(w(1, 1) == -1.0);
    CHECK(w(2, 2) == 1.0);

    // R = 2 closed form: rotation by 2*atan(a).
    for (double a : {0.1, 1.0, 10.0}) {
        SkewParam q;
        q.n = 2;
        q.upper = {a};
        q.dsign = {1, 1};
        Mat<double> rot = cayley(q);
        const double theta = 2.0 * std::atan(a);
        CHECK(rot(0, 0) == doctest::Approx(std::cos(theta)).epsilon(1e-12));
        CHECK(rot(0, 1) == doctest::Approx(-std::sin(theta)).epsilon(1e-10));
        CHECK(rot(1, 0) == doctest::Approx(std::sin(theta)).epsilon(1e-10));
        CHECK(orthogonality_deviation(rot) < 1e-12);
    }
}

TEST_CASE("cayley outputs are orthogonal up to R = 256") {
    Rng rng(11);
    for (std::size_t r : {std::size_t{2}, std::size_t{4}, std::size_t{8}, std::size_t{32},
                          std::size_t{64}, std::size_t{128}, std::size_t{256}}) {
        for (int trial = 0; trial < (r >= 128 ? 2 : 8); ++trial) {
            SkewParam p = sample_skew_init(r, r / 2, rng);
            CHECK(orthogonality_deviation(cayley(p)) < 1e-12);
        }
    }
}

TEST_CASE("inverse cayley") {
    std::vector<int> dplus{1, 1, 1};
    CHECK(frob_norm(inverse_cayley(Mat<double>::identity(3), dplus)) == 0.0);

    // Round trip through the bijection.
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        SkewParam p = sample_skew_init(6, 3, rng);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (auto& v : p.upper) v = u(rng);
        Mat<double> w = cayley(p);
        Mat<double> a = inverse_cayley(w, p.dsign);
        Mat<double> a0 = p.skew();
        for (std::size_t i = 0; i < a.a.size(); ++i)
            CHECK(a.a[i] == doctest::Approx(a0.a[i]).epsilon(1e-10).scale(1.0));
        // Exact skewness by construction.
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j) CHECK(a(i, j) == -a(j, i));
    }

    // W = -I has eigenvalue -1: outside the bijection's domain.
    Mat<double> minus = Mat<double>::identity(3);
    for (auto& v : minus.a) v = -v;
    CHECK_THROWS_AS(inverse_cayley(minus, dplus), NumericError);
}

namespace {

// Loss l(W) = ||W - W0||_F^2 and its gradient dl/dW = 2 (W - W0).
struct FrobLoss {
    Mat<double> w0;
    double value(const Mat<double>& w) const {
        Mat<double> d = w - w0;
        return kern::active().sumsq(d.a.data(), d.a.size());
    }
    Mat<double> grad(const Mat<double>& w) const {
        Mat<double> g = w - w0;
        kern::active().scal(2.0, g.a.data(), g.a.size());
        return g;
    }
};

}  // namespace

TEST_CASE("scornn gradient matches central finite differences through cayley") {
    Rng rng(17);
    for (std::size_t r : {std::size_t{2}, std::size_t{4}, std::size_t{8}}) {
        for (int trial = 0; trial < 7; ++trial) {
            SkewParam p = sample_skew_init(r, r / 2, rng);
            FrobLoss loss{testutil::random_matrix(r, r, rng)};
            Mat<double> w = cayley(p);
            Mat<double> dl_da = scornn_grad(loss.grad(w), w, p);
            // dl/dW = 0 gives dl/dA = 0, and skewness is structural.
            CHECK(frob_norm(scornn_grad(Mat<double>(r, r), w, p)) == 0.0);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < r; ++j) CHECK(dl_da(i, j) == -dl_da(j, i));
            // Central differences on each free entry.
            const double eps = 1e-6;
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = i + 1; j < r; ++j) {
                    SkewParam plus = p, minus = p;
                    plus.upper[SkewParam::upper_index(r, i, j)] += eps;
                    minus.upper[SkewParam::upper_index(r, i, j)] -= eps;
                    const double fd =
                        (loss.value(cayley(plus)) - loss.value(cayley(minus))) / (2 * eps);
                    const double an = dl_da(i, j);
                    CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(fd)));
                }
            }
        }
    }
}

TEST_CASE("scornn step") {
    Rng rng(19);
    SkewParam p = sample_skew_init(4, 2, rng);
    Mat<double> w0 = cayley(p);

    // eta = 0 changes nothing.
    Mat<double> zero(4, 4);
    auto [p2, w2] = scornn_step(p, zero, 0.0);
    CHECK(p2.upper == p.upper);
    CHECK(w2 == w0);

    // A known skew gradient moves the upper triangle entrywise.
    Mat<double> g(4, 4);
    g(0, 1) = 0.5;
    g(1, 0) = -0.5;
    g(2, 3) = -1.5;
    g(3, 2) = 1.5;
    auto [p3, w3] = scornn_step(p, g, 0.1);
    CHECK(p3.upper[SkewParam::upper_index(4, 0, 1)] ==
          doctest::Approx(p.upper[SkewParam::upper_index(4, 0, 1)] - 0.05));
    CHECK(p3.upper[SkewParam::upper_index(4, 2, 3)] ==
          doctest::Approx(p.upper[SkewParam::upper_index(4, 2, 3)] + 0.15));
    CHECK(orthogonality_deviation(w3) < 1e-12);

    // Skewness of the gradient is enforced.
    Mat<double> asym(4, 4);
    asym(0, 1) = 1.0;
    CHECK_THROWS_AS(scornn_step(p, asym, 0.1), std::invalid_argument);

    // 1000 random steps keep W orthogonal to 1e-8 (and much better).
    SkewParam cur = p;
    Mat<double> w = w0;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int it = 0; it < 1000; ++it) {
        Mat<double> dl_da(4, 4);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = i + 1; j < 4; ++j) {
                const double v = u(rng);
                dl_da(i, j) = v;
                dl_da(j, i) = -v;
            }
        std::tie(cur, w) = scornn_step(cur, dl_da, 0.01);
        worst = std::max(worst, orthogonality_deviation(w));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("stiefel multiplicative update") {
    Rng rng(23);
    SkewParam p = sample_skew_init(5, 2, rng);
    Mat<double> w = cayley(p);

    // G = 0 and G = c W both leave W unchanged (A vanishes identically).
    CHECK(stiefel_step(w, Mat<double>(5, 5), 0.05) == w);
    for (double c : {1.0, -2.5, 0.3}) {
        Mat<double> g = w;
        kern::active().scal(c, g.a.data(), g.a.size());
        Mat<double> stepped = stiefel_step(w, g, 0.05);
        for (std::size_t i = 0; i < w.a.size(); ++i)
            CHECK(stepped.a[i] == doctest::Approx(w.a[i]).epsilon(1e-12));
    }

    // 1000 random steps from the identity: drift stays below 1e-6.
    Mat<double> cur = Mat<double>::identity(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int it = 0; it < 1000; ++it) {
        Mat<double> g = testutil::random_matrix(8, 8, rng);
        cur = stiefel_step(cur, g, 0.01);
        worst = std::max(worst, orthogonality_deviation(cur));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("modrelu") {
    std::vector<double> z{1.0, -2.0, 3.0, 0.0};
    std::vector<double> zero_bias(4, 0.0);
    CHECK(modrelu(z, zero_bias) == std::vector<double>{1.0, -2.0, 3.0, 0.0});
    CHECK(modrelu({3.0}, {-5.0}) == std::vector<double>{0.0});
    CHECK(modrelu({-2.0}, {1.0}) == std::vector<double>{-3.0});
    CHECK_THROWS_AS(modrelu({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("orthogonality deviation") {
    CHECK(orthogonality_deviation(Mat<double>::identity(4)) == 0.0);
    Mat<double> twice = Mat<double>::identity(2);
    kern::active().scal(2.0, twice.a.data(), twice.a.size());
    CHECK(orthogonality_deviation(twice) == doctest::Approx(3.0 * std::sqrt(2.0)));
}

TEST_CASE("skew initialization") {
    Rng rng(29);
    SkewParam a = sample_skew_init(6, 0, rng);
    CHECK(a.dsign == std::vector<int>(6, 1));
    SkewParam b = sample_skew_init(6, 6, rng);
    CHECK(b.dsign == std::vector<int>(6, -1));
    SkewParam c = sample_skew_init(4, 2, rng);
    CHECK(c.dsign == std::vector<int>{-1, -1, 1, 1});
    CHECK(c.rho() == 2);
    for (double v : c.upper) CHECK(std::abs(v) <= 0.5);  // 1/sqrt(4)
    CHECK_THROWS_AS(sample_skew_init(3, 4, rng), std::invalid_argument);
}
