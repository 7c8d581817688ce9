#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "seprank/linalg.hpp"
#include "seprank/racnet.hpp"
#include "seprank/theorem.hpp"
#include "seprank/train.hpp"
#include "testutil.hpp"

using namespace seprank;

namespace {

RacNetwork<Rational> tiny_rac_11() {
    // R = M = 1, W^I = W^H = [2], h0 = [1], W^O = [1].
    RacNetwork<Rational> net;
    net.nonlin = Nonlin::Rac;
    net.embed_dim = 1;
    net.channels = 1;
    net.num_classes = 1;
    LayerWeights<Rational> lw;
    lw.w_in = Mat<Rational>(1, 1, {Rational(2)});
    lw.w_hid = Mat<Rational>(1, 1, {Rational(2)});
    lw.h0 = {Rational(1)};
    net.layers.push_back(lw);
    net.w_out = Mat<Rational>(1, 1, {Rational(1)});
    return net;
}

std::vector<std::size_t> decode_tokens(std::size_t flat, std::size_t m, std::size_t t_steps) {
    std::vector<std::size_t> tokens(t_steps);
    for (std::size_t t = t_steps; t-- > 0;) {
        tokens[t] = flat % m + 1;
        flat /= m;
    }
    return tokens;
}

}  // namespace

TEST_CASE("shallow forward hand iteration") {
    auto net = tiny_rac_11();
    // h^t = (W^H h^{t-1}) .* (W^I f(x^t)): with everything scalar 2 and
    // h0 = 1, tokens (1,1) give h1 = 2*2 = 4, h2 = (2*4)*(2*1) = 16.
    CHECK(shallow_forward(net, {1}) == std::vector<Rational>{Rational(4)});
    CHECK(shallow_forward(net, {1, 1}) == std::vector<Rational>{Rational(16)});
    // Empty sequence convention: W^O h0.
    CHECK(shallow_forward(net, {}) == std::vector<Rational>{Rational(1)});
    CHECK_THROWS_AS(shallow_forward(net, {2}), std::out_of_range);
}

TEST_CASE("deep forward with one layer matches shallow exactly") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        RacNetwork<Rational> net = random_rational_shallow_net(2, 3, 2, rng);
        for (std::size_t flat = 0; flat < 16; ++flat) {
            auto tokens = decode_tokens(flat, 2, 4);
            CHECK(deep_forward(net, tokens) == shallow_forward(net, tokens));
        }
    }
}

TEST_CASE("deep forward on all-ones identity network") {
    // Identity-shaped weights with all-ones initial states keep one-hot
    // products at one in the matching channel.
    RacNetwork<Rational> net;
    net.nonlin = Nonlin::Rac;
    net.embed_dim = 2;
    net.channels = 2;
    net.num_classes = 2;
    for (int l = 0; l < 2; ++l) {
        LayerWeights<Rational> lw;
        lw.w_in = Mat<Rational>::identity(2);
        lw.w_hid = Mat<Rational>::identity(2);
        lw.h0 = {Rational(1), Rational(1)};
        net.layers.push_back(lw);
    }
    net.w_out = Mat<Rational>::identity(2);
    auto out = deep_forward(net, {1, 1});
    CHECK(out[0] == Rational(1));
    CHECK(out[1] == Rational(0));
}

TEST_CASE("pseudoinverse initial state") {
    CHECK(pseudo_inverse_init(Mat<Rational>::identity(3)) ==
          std::vector<Rational>(3, Rational(1)));
    Mat<Rational> twice(2, 2, {2, 0, 0, 2});
    CHECK(pseudo_inverse_init(twice) == std::vector<Rational>(2, Rational(1, 2)));

    CHECK(pseudo_inverse_init(Mat<double>::identity(4)) == std::vector<double>(4, 1.0));

    // Orthogonal W: the pseudoinverse is the transpose.
    Rng rng(12);
    SkewParam p = sample_skew_init(5, 2, rng);
    Mat<double> w = cayley(p);
    auto got = pseudo_inverse_init(w);
    std::vector<double> ones(5, 1.0);
    auto expect = w.transposed() * ones;
    for (std::size_t i = 0; i < 5; ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-9));
}

TEST_CASE("weights tensor TT recursion at R=1") {
    // Pure outer power of the W^I row, scaled by (W^H_{11})^{T-1} W^O_{c1}.
    RacNetwork<Rational> net;
    net.nonlin = Nonlin::Rac;
    net.embed_dim = 3;
    net.channels = 1;
    net.num_classes = 1;
    LayerWeights<Rational> lw;
    lw.w_in = Mat<Rational>(1, 3, {2, 3, 5});
    lw.w_hid = Mat<Rational>(1, 1, {Rational(7)});
    lw.h0 = pseudo_inverse_init(lw.w_hid);
    net.layers.push_back(lw);
    net.w_out = Mat<Rational>(1, 1, {Rational(11)});
    const std::size_t t_steps = 3;
    auto a = build_weights_tensor_tt(net, 0, t_steps);
    std::vector<std::size_t> idx(t_steps);
    for (idx[0] = 0; idx[0] < 3; ++idx[0])
        for (idx[1] = 0; idx[1] < 3; ++idx[1])
            for (idx[2] = 0; idx[2] < 3; ++idx[2]) {
                Rational expect = Rational(7).pow(2) * Rational(11);
                for (std::size_t t = 0; t < t_steps; ++t) expect *= net.layers[0].w_in(0, idx[t]);
                CHECK(a.at(idx) == expect);
            }

    // h0 mismatch is rejected: the recursion assumes the pseudoinverse init.
    RacNetwork<Rational> bad = net;
    bad.layers[0].h0 = {Rational(3)};
    CHECK_THROWS_AS(build_weights_tensor_tt(bad, 0, 2), std::invalid_argument);
}

TEST_CASE("weights tensor golden value") {
    // Frozen expected entries for the R=1 net above at T=2:
    // A_{d1 d2} = W^O * W^H * w_{d1} * w_{d2} with w = (2, 3, 5).
    RacNetwork<Rational> net;
    net.nonlin = Nonlin::Rac;
    net.embed_dim = 3;
    net.channels = 1;
    net.num_classes = 1;
    LayerWeights<Rational> lw;
    lw.w_in = Mat<Rational>(1, 3, {2, 3, 5});
    lw.w_hid = Mat<Rational>(1, 1, {Rational(7)});
    lw.h0 = pseudo_inverse_init(lw.w_hid);
    net.layers.push_back(lw);
    net.w_out = Mat<Rational>(1, 1, {Rational(11)});
    nlohmann::json got = build_weights_tensor_tt(net, 0, 2);
    const auto golden = nlohmann::json::parse(
        R"({"shape":[3,3],"entries":["308","462","770","462","693","1155","770","1155","1925"]})");
    CHECK(got == golden);
}

TEST_CASE("score equivalence: TT tensor + closed form == forward on the grid") {
    Rng rng(21);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t m = 2 + trial % 2, r = 1 + trial % 3, t_steps = 1 + trial % 4;
        RacNetwork<Rational> net = random_rational_shallow_net(m, r, 2, rng);
        auto a = build_weights_tensor_tt(net, 1, t_steps);
        Mat<Rational> f = Mat<Rational>::identity(m);  // one-hot templates
        std::size_t grid = 1;
        for (std::size_t t = 0; t < t_steps; ++t) grid *= m;
        for (std::size_t flat = 0; flat < grid; ++flat) {
            auto tokens = decode_tokens(flat, m, t_steps);
            CHECK(closed_form_score(a, f, tokens) == shallow_forward(net, tokens)[1]);
        }
    }
}

TEST_CASE("closed form score basics") {
    DenseTensor<Rational> zero({2, 2});
    CHECK(closed_form_score(zero, Mat<Rational>::identity(2), {1, 2}) == Rational(0));
    DenseTensor<Rational> t({2, 2}, {Rational(9), Rational(8), Rational(7), Rational(6)});
    // One-hot embedding picks out the entry at the token multi-index.
    CHECK(closed_form_score(t, Mat<Rational>::identity(2), {2, 1}) == Rational(7));
    // A dense F mixes entries.
    Mat<Rational> f(2, 2, {1, 1, 1, 1});
    CHECK(closed_form_score(t, f, {1, 1}) == Rational(30));
}

TEST_CASE("TT equals the MPS contraction of unit cells") {
    Rng rng(33);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t m = 2 + trial % 2, r = 1 + trial % 3, t_steps = 2 + trial % 3;
        RacNetwork<Rational> net = random_rational_shallow_net(m, r, 1, rng);
        auto tt = build_weights_tensor_tt(net, 0, t_steps);
        MpsChain<Rational> chain;
        for (std::size_t t = 0; t < t_steps; ++t)
            chain.cores.push_back(mps_unit_cell(net.layers[0].w_in, net.layers[0].w_hid));
        chain.left = net.layers[0].h0;  // (W^H)^+ 1 closes the first bond
        chain.right.assign(r, Rational(0));
        for (std::size_t k = 0; k < r; ++k) chain.right[k] = net.w_out(0, k);
        CHECK(mps_contract(chain) == tt);
    }
}

TEST_CASE("grid tensor") {
    auto constant =
        grid_tensor<Rational>([](const std::vector<std::size_t>&) { return Rational(5); }, 3, 2);
    for (auto& v : constant.v) CHECK(v == Rational(5));

    // Grid of a shallow forward equals the TT weights tensor under one-hot.
    Rng rng(5);
    RacNetwork<Rational> net = random_rational_shallow_net(2, 2, 1, rng);
    auto tt = build_weights_tensor_tt(net, 0, 4);
    auto grid = grid_tensor<Rational>(
        [&](const std::vector<std::size_t>& tokens) { return shallow_forward(net, tokens)[0]; }, 2,
        4);
    CHECK(grid == tt);

    // Separable evaluator: start-end matricization has rank 1.
    auto separable = grid_tensor<Rational>(
        [](const std::vector<std::size_t>& tokens) {
            Rational g1 = Rational(static_cast<long long>(tokens[0] + 2 * tokens[1]));
            Rational g2 = Rational(static_cast<long long>(3 * tokens[2] + tokens[3] * tokens[3]));
            return g1 * g2;
        },
        2, 4);
    CHECK(exact_rank(matricize(separable, Partition::start_end(4))) == 1);

    // Parallel evaluation matches serial.
    auto serial = grid_tensor<Rational>(
        [&](const std::vector<std::size_t>& tokens) { return shallow_forward(net, tokens)[0]; }, 2,
        6, kDefaultTensorCap, 1);
    auto parallel = grid_tensor<Rational>(
        [&](const std::vector<std::size_t>& tokens) { return shallow_forward(net, tokens)[0]; }, 2,
        6, kDefaultTensorCap, 3);
    CHECK(serial == parallel);

    CHECK_THROWS_AS(grid_tensor<Rational>(
                        [](const std::vector<std::size_t>&) { return Rational(0); }, 10, 10, 1000),
                    CapExceeded);
}

TEST_CASE("TT construction enforces the entry cap, including intermediates") {
    Rng rng(9);
    RacNetwork<Rational> net = random_rational_shallow_net(3, 4, 1, rng);
    CHECK_THROWS_AS(build_weights_tensor_tt(net, 0, 8, 100), CapExceeded);
    // The 3^6 = 729 output fits a 900-entry cap, but the four order-5
    // intermediates (4 * 243 = 972) do not.
    CHECK_THROWS_AS(build_weights_tensor_tt(net, 0, 6, 900), CapExceeded);
    CHECK(build_weights_tensor_tt(net, 0, 6, 1000).size() == 729);
}

TEST_CASE("deep lower-bound witness structure") {
    // M = R = 2, z = 2, Omega = 5: diagonal z^(Omega^i), ones elsewhere in
    // the top M rows.
    Mat<Rational> z = deep_witness_z(2, 2, Rational(2), 5);
    CHECK(z(0, 0) == Rational(2).pow(5));
    CHECK(z(1, 1) == Rational(2).pow(25));
    CHECK(z(0, 1) == Rational(1));
    CHECK(z(1, 0) == Rational(1));

    // Rows past M vanish.
    Mat<Rational> tall = deep_witness_z(2, 4, Rational(2), 5);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(tall(2, j) == Rational(0));
        CHECK(tall(3, j) == Rational(0));
    }

    RacNetwork<Rational> net = deep_witness_assignment(2, 2, Rational(2), 5);
    CHECK(net.depth() == 2);
    CHECK(net.layers[0].w_in == z);  // one-hot F: W^{I,1} = Z
    CHECK(net.layers[0].w_hid == Mat<Rational>::identity(2));
    CHECK(net.layers[1].w_hid == Mat<Rational>::identity(2));
    for (int l = 0; l < 2; ++l) CHECK(net.layers[l].h0 == std::vector<Rational>(2, Rational(1)));
    CHECK(net.layers[1].w_in(0, 0) == Rational(1));
    CHECK(net.layers[1].w_in(0, 1) == Rational(1));
    CHECK(net.layers[1].w_in(1, 0) == Rational(0));
    CHECK(net.w_out(0, 0) == Rational(1));

    CHECK_THROWS_AS(deep_witness_assignment(2, 2, Rational(0), 5), std::invalid_argument);
    CHECK_THROWS_AS(deep_witness_assignment(2, 2, Rational(2), 0), std::invalid_argument);
}

TEST_CASE("deep grid closed form equals the forward pass of the assignment") {
    const Rational z(2);
    const std::uint64_t omega = 5;
    for (auto [m, r, t_steps] :
         std::vector<std::array<std::size_t, 3>>{{2, 2, 4}, {2, 1, 4}, {2, 2, 2}}) {
        RacNetwork<Rational> net = deep_witness_assignment(m, r, z, omega);
        auto closed = deep_grid_closed_form(m, r, t_steps, z, omega);
        auto grid = grid_tensor<Rational>(
            [&](const std::vector<std::size_t>& tokens) { return deep_forward(net, tokens)[0]; },
            m, t_steps);
        CHECK(closed == grid);
    }
    // Forward output at tokens (1,2,1,2) matches the closed-form entry.
    RacNetwork<Rational> net = deep_witness_assignment(2, 2, z, omega);
    auto closed = deep_grid_closed_form(2, 2, 4, z, omega);
    std::vector<std::size_t> idx{0, 1, 0, 1};
    CHECK(deep_forward(net, {1, 2, 1, 2})[0] == closed.at(idx));
}

TEST_CASE("deep grid closed form ranks") {
    // Rbar = 1 collapses to a separable tensor.
    auto rank1 = deep_grid_closed_form(2, 1, 4, Rational(2), 5);
    CHECK(exact_rank(matricize(rank1, Partition::start_end(4))) == 1);
    // T = 2, M = Rbar = 2: exact rank 2 == multiset(2, 1).
    auto t2 = deep_grid_closed_form(2, 2, 2, Rational(2), 2);
    CHECK(exact_rank(matricize(t2, Partition::start_end(2))) == 2);
}

TEST_CASE("param count") {
    CHECK(param_count(1, 1, 1, 1, Nonlin::Rac) == 3);
    // L = 2 adds exactly 2R^2 over L = 1 for RAC.
    for (std::size_t r : {std::size_t{1}, std::size_t{2}, std::size_t{5}}) {
        CHECK(param_count(2, r, 3, 4, Nonlin::Rac) - param_count(1, r, 3, 4, Nonlin::Rac) ==
              2 * r * r);
    }
    CHECK(param_count(1, 2, 1, 1, Nonlin::Rac) == 2 + 4 + 2);
    // modReLU adds one bias per channel per layer.
    CHECK(param_count(3, 4, 2, 2, Nonlin::ModRelu) == param_count(3, 4, 2, 2, Nonlin::Tanh) + 12);
    CHECK_THROWS_AS(param_count(0, 1, 1, 1, Nonlin::Rac), std::invalid_argument);
}

TEST_CASE("network json round trip") {
    Rng rng(77);
    TrainableModel model = init_model(2, 3, 4, 5, Nonlin::ModRelu, false, rng);
    nlohmann::json j = model.net;
    auto back = j.get<RacNetwork<double>>();
    CHECK(back.channels == 3);
    CHECK(back.embed_dim == 4);
    CHECK(back.num_classes == 5);
    CHECK(back.nonlin == Nonlin::ModRelu);
    CHECK(back.layers[0].w_in == model.net.layers[0].w_in);
    CHECK(back.layers[1].w_hid == model.net.layers[1].w_hid);
    CHECK(back.w_out == model.net.w_out);
    CHECK(back.layers[0].bias == model.net.layers[0].bias);
}
