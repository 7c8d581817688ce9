#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <thread>

#include "seprank/tensor.hpp"

namespace seprank {

enum class Nonlin { Rac, Tanh, ModRelu };

std::string nonlin_name(Nonlin g);
Nonlin nonlin_from_name(const std::string& name);

// Weights of one recurrent layer. w_in is R x M for layer 1 and R x R above;
// bias is the modReLU per-channel bias and stays empty otherwise.
template <class T>
struct LayerWeights {
    Mat<T> w_in;
    Mat<T> w_hid;
    std::vector<T> h0;
    std::vector<T> bias;
};

template <class T>
struct RacNetwork {
    std::vector<LayerWeights<T>> layers;
    Mat<T> w_out;  // C x R
    Nonlin nonlin = Nonlin::Rac;
    std::size_t embed_dim = 0;    // M
    std::size_t num_classes = 0;  // C
    std::size_t channels = 0;     // R

    std::size_t depth() const { return layers.size(); }
    void validate() const;
};

// Tokens are 1-based values in [M] throughout, matching the discrete-input
// grid convention; one-hot embedding unless an explicit F matrix is given
// (rows F[i] = f(x^(i))).

// Hidden-state update of one layer: g(w_hid h_prev, w_in x).
template <class T>
std::vector<T> layer_step(const LayerWeights<T>& lw, Nonlin g, const std::vector<T>& h_prev,
                          const std::vector<T>& x);

// Full stacked forward; returns the class scores w_out h^{T,L}.
// An empty token sequence yields w_out h^{0,L}.
template <class T>
std::vector<T> deep_forward(const RacNetwork<T>& net, const std::vector<std::size_t>& tokens);

// Forward over pre-embedded inputs; `inputs` holds one row per time-step.
template <class T>
std::vector<T> deep_forward_embedded(const RacNetwork<T>& net, const Mat<T>& inputs);

// Depth-1 convenience wrapper (checks L == 1).
template <class T>
std::vector<T> shallow_forward(const RacNetwork<T>& net, const std::vector<std::size_t>& tokens);

// (W^H)^+ 1: float path goes through the SVD pseudoinverse, the exact path
// through the rational inverse (square nonsingular only).
std::vector<double> pseudo_inverse_init(const Mat<double>& w_hid);
std::vector<Rational> pseudo_inverse_init(const Mat<Rational>& w_hid);

// Solves a x = b exactly; nullopt when singular. Square a only.
std::optional<std::vector<Rational>> rational_solve(Mat<Rational> a, std::vector<Rational> b);
std::optional<Mat<Rational>> rational_inverse(const Mat<Rational>& a);

// The depth-1 RAC weights tensor of class c, built by the tensor-train
// recursion. Requires h0 == pseudo_inverse_init(w_hid), which the recursion
// assumes.
template <class T>
DenseTensor<T> build_weights_tensor_tt(const RacNetwork<T>& net, std::size_t c, std::size_t t_steps,
                                       std::size_t cap = kDefaultTensorCap);

// sum_{d_1..d_T} A_{d...} prod_t F_{x^t, d_t} — the closed-form score of a
// weights tensor against embedded inputs.
template <class T>
T closed_form_score(const DenseTensor<T>& weights, const Mat<T>& f, const std::vector<std::size_t>& tokens);

// Evaluates a sequence function on every point of the M^T token grid.
template <class T>
DenseTensor<T> grid_tensor(const std::function<T(const std::vector<std::size_t>&)>& eval,
                           std::size_t m, std::size_t t_steps, std::size_t cap = kDefaultTensorCap,
                           unsigned jobs = 1);

// The exact depth-2 network used in the deep lower-bound argument:
// W^{I,1} = Z (one-hot templates), W^{I,2}_{ij} = [i == 1], identity hidden
// matrices, W^O_{ij} = [j == 1], all-ones initial states, where
// Z_{ij} = z^(Omega^i) on the diagonal up to M, 1 off-diagonal, 0 below.
RacNetwork<Rational> deep_witness_assignment(std::size_t m, std::size_t r, const Rational& z,
                                           std::uint64_t omega);
Mat<Rational> deep_witness_z(std::size_t m, std::size_t r, const Rational& z, std::uint64_t omega);

// Closed form of the grid tensor of that network:
// A_{d_1..d_T} = prod_t sum_{r<=min(R,M)} prod_{j<=t} Z_{r d_j}.
DenseTensor<Rational> deep_grid_closed_form(std::size_t m, std::size_t r, std::size_t t_steps,
                                            const Rational& z, std::uint64_t omega,
                                            std::size_t cap = kDefaultTensorCap);

// Total trainable parameter count for (L, R, M, C) and a nonlinearity.
std::size_t param_count(std::size_t depth, std::size_t channels, std::size_t embed_dim,
                        std::size_t classes, Nonlin g);

void to_json(nlohmann::json& j, const Mat<double>& m);
void from_json(const nlohmann::json& j, Mat<double>& m);
void to_json(nlohmann::json& j, const RacNetwork<double>& net);
void from_json(const nlohmann::json& j, RacNetwork<double>& net);

// --- template definitions -------------------------------------------------

template <class T>
void RacNetwork<T>::validate() const {
    if (layers.empty()) throw std::invalid_argument("RacNetwork: at least one layer");
    if (channels == 0 || embed_dim == 0 || num_classes == 0)
        throw std::invalid_argument("RacNetwork: zero dimension");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& lw = layers[l];
        const std::size_t want_cols = l == 0 ? embed_dim : channels;
        if (lw.w_in.rows != channels || lw.w_in.cols != want_cols)
            throw std::invalid_argument("RacNetwork: w_in shape");
        if (lw.w_hid.rows != channels || lw.w_hid.cols != channels)
            throw std::invalid_argument("RacNetwork: w_hid shape");
        if (lw.h0.size() != channels) throw std::invalid_argument("RacNetwork: h0 length");
        if (nonlin == Nonlin::ModRelu && lw.bias.size() != channels)
            throw std::invalid_argument("RacNetwork: modReLU bias length");
    }
    if (w_out.rows != num_classes || w_out.cols != channels)
        throw std::invalid_argument("RacNetwork: w_out shape");
}

namespace detail {
double g_apply(Nonlin g, double a, double b, double bias);
Rational g_apply(Nonlin g, const Rational& a, const Rational& b, const Rational& bias);
}  // namespace detail

template <class T>
std::vector<T> layer_step(const LayerWeights<T>& lw, Nonlin g, const std::vector<T>& h_prev,
                          const std::vector<T>& x) {
    std::vector<T> a = lw.w_hid * h_prev;
    std::vector<T> b = lw.w_in * x;
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = detail::g_apply(g, a[i], b[i], lw.bias.empty() ? T(0) : lw.bias[i]);
    }
    return out;
}

template <class T>
std::vector<T> deep_forward_embedded(const RacNetwork<T>& net, const Mat<T>& inputs) {
    net.validate();
    const std::size_t t_steps = inputs.rows;
    std::vector<std::vector<T>> h;
    h.reserve(net.depth());
    for (const auto& lw : net.layers) h.push_back(lw.h0);
    for (std::size_t t = 0; t < t_steps; ++t) {
        std::vector<T> below(inputs.a.begin() + t * inputs.cols,
                             inputs.a.begin() + (t + 1) * inputs.cols);
        for (std::size_t l = 0; l < net.depth(); ++l) {
            h[l] = layer_step(net.layers[l], net.nonlin, h[l], below);
            below = h[l];
        }
    }
    return net.w_out * h.back();
}

template <class T>
std::vector<T> deep_forward(const RacNetwork<T>& net, const std::vector<std::size_t>& tokens) {
    Mat<T> inputs(tokens.size(), net.embed_dim);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (tokens[t] == 0 || tokens[t] > net.embed_dim)
            throw std::out_of_range("deep_forward: token outside [M]");
        inputs(t, tokens[t] - 1) = T(1);
    }
    return deep_forward_embedded(net, inputs);
}

template <class T>
std::vector<T> shallow_forward(const RacNetwork<T>& net, const std::vector<std::size_t>& tokens) {
    if (net.depth() != 1) throw std::invalid_argument("shallow_forward: depth-1 network required");
    return deep_forward(net, tokens);
}

template <class T>
DenseTensor<T> build_weights_tensor_tt(const RacNetwork<T>& net, std::size_t c, std::size_t t_steps,
                                       std::size_t cap) {
    net.validate();
    if (net.depth() != 1 || net.nonlin != Nonlin::Rac)
        throw std::invalid_argument("build_weights_tensor_tt: depth-1 RAC required");
    if (c >= net.num_classes) throw std::invalid_argument("build_weights_tensor_tt: class index");
    const std::size_t r = net.channels, m = net.embed_dim;
    const auto& lw = net.layers[0];
    {
        // The recursion silently assumes the pseudoinverse initial state.
        std::vector<T> expect = pseudo_inverse_init(lw.w_hid);
        for (std::size_t i = 0; i < r; ++i) {
            if constexpr (std::is_same_v<T, double>) {
                if (std::abs(expect[i] - lw.h0[i]) > 1e-9)
                    throw std::invalid_argument("build_weights_tensor_tt: h0 is not (W^H)^+ 1");
            } else {
                if (!(expect[i] == lw.h0[i]))
                    throw std::invalid_argument("build_weights_tensor_tt: h0 is not (W^H)^+ 1");
            }
        }
    }
    std::size_t out_size = 1;
    for (std::size_t t = 0; t < t_steps; ++t) {
        out_size *= m;
        if (out_size > cap) throw CapExceeded("build_weights_tensor_tt: entry cap exceeded");
        // The recursion keeps R order-t intermediates alive at once.
        if (t + 1 < t_steps && out_size > cap / r)
            throw CapExceeded("build_weights_tensor_tt: intermediate entry cap exceeded");
    }
    if (t_steps == 0) {
        DenseTensor<T> scalar;
        T acc(0);
        for (std::size_t alpha = 0; alpha < r; ++alpha) acc += net.w_out(c, alpha) * lw.h0[alpha];
        scalar.v[0] = acc;
        return scalar;
    }
    // phi[beta] after step t holds an order-t tensor; the final contraction
    // swaps the hidden matrix row for the output row.
    auto contract = [&](const std::vector<DenseTensor<T>>& phi, const Mat<T>& rows,
                        std::size_t row) {
        DenseTensor<T> out(std::vector<std::size_t>(phi[0].order() + 1, m));
        for (std::size_t alpha = 0; alpha < r; ++alpha) {
            const T& coef = rows(row, alpha);
            if (coef == T(0)) continue;
            for (std::size_t i = 0; i < phi[alpha].size(); ++i) {
                if (phi[alpha].v[i] == T(0)) continue;
                const T scaled = coef * phi[alpha].v[i];
                for (std::size_t d = 0; d < m; ++d) {
                    out.v[i * m + d] += scaled * lw.w_in(alpha, d);
                }
            }
        }
        return out;
    };
    if (t_steps == 1) {
        DenseTensor<T> out({m});
        for (std::size_t alpha = 0; alpha < r; ++alpha)
            for (std::size_t d = 0; d < m; ++d)
                out.v[d] += net.w_out(c, alpha) * lw.w_in(alpha, d);
        return out;
    }
    std::vector<DenseTensor<T>> phi(r, DenseTensor<T>({m}));
    for (std::size_t beta = 0; beta < r; ++beta)
        for (std::size_t alpha = 0; alpha < r; ++alpha)
            for (std::size_t d = 0; d < m; ++d)
                phi[beta].v[d] += lw.w_hid(beta, alpha) * lw.w_in(alpha, d);
    for (std::size_t t = 2; t + 1 <= t_steps; ++t) {
        std::vector<DenseTensor<T>> next;
        next.reserve(r);
        for (std::size_t beta = 0; beta < r; ++beta) next.push_back(contract(phi, lw.w_hid, beta));
        phi = std::move(next);
    }
    return contract(phi, net.w_out, c);
}

template <class T>
T closed_form_score(const DenseTensor<T>& weights, const Mat<T>& f,
                    const std::vector<std::size_t>& tokens) {
    const std::size_t t_steps = weights.order();
    if (tokens.size() != t_steps) throw std::invalid_argument("closed_form_score: token count");
    const std::size_t m = t_steps == 0 ? 1 : weights.shape[0];
    if (f.rows != m || f.cols != m) throw std::invalid_argument("closed_form_score: F must be M x M");
    for (std::size_t tok : tokens)
        if (tok == 0 || tok > m) throw std::out_of_range("closed_form_score: token outside [M]");
    T acc(0);
    std::vector<std::size_t> idx(t_steps, 0);
    for (std::size_t flat = 0; flat < weights.size(); ++flat) {
        if (!(weights.v[flat] == T(0))) {
            T term = weights.v[flat];
            for (std::size_t t = 0; t < t_steps; ++t) term = term * f(tokens[t] - 1, idx[t]);
            acc += term;
        }
        for (std::size_t t = t_steps; t-- > 0;) {
            if (++idx[t] < m) break;
            idx[t] = 0;
        }
    }
    return acc;
}

template <class T>
DenseTensor<T> grid_tensor(const std::function<T(const std::vector<std::size_t>&)>& eval,
                           std::size_t m, std::size_t t_steps, std::size_t cap, unsigned jobs) {
    std::size_t out_size = 1;
    for (std::size_t t = 0; t < t_steps; ++t) {
        out_size *= m;
        if (out_size > cap) throw CapExceeded("grid_tensor: entry cap exceeded");
    }
    DenseTensor<T> out(std::vector<std::size_t>(t_steps, m));
    auto fill_range = [&](std::size_t lo, std::size_t hi) {
        std::vector<std::size_t> tokens(t_steps);
        for (std::size_t flat = lo; flat < hi; ++flat) {
            std::size_t rem = flat;
            for (std::size_t t = t_steps; t-- > 0;) {
                tokens[t] = rem % m + 1;
                rem /= m;
            }
            out.v[flat] = eval(tokens);
        }
    };
    if (jobs <= 1 || out.size() < 64) {
        fill_range(0, out.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (out.size() + jobs - 1) / jobs;
        for (unsigned w = 0; w < jobs; ++w) {
            std::size_t lo = w * chunk, hi = std::min(out.size(), lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(fill_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

}  // namespace seprank
