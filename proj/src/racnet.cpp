#include "seprank/racnet.hpp"

#include <cmath>

#include "seprank/linalg.hpp"

namespace seprank {

std::string nonlin_name(Nonlin g) {
    switch (g) {
        case Nonlin::Rac: return "rac";
        case Nonlin::Tanh: return "tanh";
        case Nonlin::ModRelu: return "modrelu";
    }
    return "rac";
}

Nonlin nonlin_from_name(const std::string& name) {
    if (name == "rac") return Nonlin::Rac;
    if (name == "tanh") return Nonlin::Tanh;
    if (name == "modrelu") return Nonlin::ModRelu;
    throw std::invalid_argument("unknown nonlinearity: " + name);
}

namespace detail {

double g_apply(Nonlin g, double a, double b, double bias) {
    switch (g) {
        case Nonlin::Rac: return a * b;
        case Nonlin::Tanh: return std::tanh(a + b);
        case Nonlin::ModRelu: {
            const double z = a + b;
            if (z == 0.0) return 0.0;
            const double mag = std::abs(z) + bias;
            return mag > 0.0 ? mag * (z / std::abs(z)) : 0.0;
        }
    }
    return 0.0;
}

Rational g_apply(Nonlin g, const Rational& a, const Rational& b, const Rational&) {
    if (g != Nonlin::Rac)
        throw std::invalid_argument("exact arithmetic supports the RAC nonlinearity only");
    return a * b;
}

}  // namespace detail

std::vector<double> pseudo_inverse_init(const Mat<double>& w_hid) {
    Mat<double> p = pinv(w_hid);
    std::vector<double> ones(p.cols, 1.0);
    return p * ones;
}

std::vector<Rational> pseudo_inverse_init(const Mat<Rational>& w_hid) {
    if (w_hid.rows != w_hid.cols)
        throw std::invalid_argument("pseudo_inverse_init: exact path needs a square matrix");
    auto sol = rational_solve(w_hid, std::vector<Rational>(w_hid.rows, Rational(1)));
    if (!sol) throw NumericError("pseudo_inverse_init: singular hidden matrix (exact path)");
    return *sol;
}

std::optional<std::vector<Rational>> rational_solve(Mat<Rational> a, std::vector<Rational> b) {
    if (a.rows != a.cols || a.rows != b.size())
        throw std::invalid_argument("rational_solve: square system required");
    const std::size_t n = a.rows;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && a(piv, col).is_zero()) ++piv;
        if (piv == n) return std::nullopt;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
            std::swap(b[piv], b[col]);
        }
        const Rational inv = a(col, col).inverse();
        for (std::size_t j = col; j < n; ++j) a(col, j) *= inv;
        b[col] *= inv;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == col || a(i, col).is_zero()) continue;
            const Rational f = a(i, col);
            for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(col, j);
            b[i] -= f * b[col];
        }
    }
    return b;
}

std::optional<Mat<Rational>> rational_inverse(const Mat<Rational>& a) {
    if (a.rows != a.cols) throw std::invalid_argument("rational_inverse: square matrix required");
    const std::size_t n = a.rows;
    Mat<Rational> out(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<Rational> e(n, Rational(0));
        e[j] = 1;
        auto col = rational_solve(a, std::move(e));
        if (!col) return std::nullopt;
        for (std::size_t i = 0; i < n; ++i) out(i, j) = (*col)[i];
    }
    return out;
}

Mat<Rational> deep_witness_z(std::size_t m, std::size_t r, const Rational& z, std::uint64_t omega) {
    if (z.is_zero()) throw std::invalid_argument("deep_witness_z: z must be nonzero");
    if (omega == 0) throw std::invalid_argument("deep_witness_z: omega must be positive");
    Mat<Rational> out(r, m);
    std::uint64_t wpow = 1;  // omega^i, i is the 1-based row index
    for (std::size_t i = 0; i < r; ++i) {
        if (i < m) {
            if (wpow > (std::uint64_t{1} << 40) / omega)
                throw CapExceeded("deep_witness_z: omega^i too large");
            wpow *= omega;
            for (std::size_t j = 0; j < m; ++j) {
                out(i, j) = i == j ? z.pow(static_cast<long long>(wpow)) : Rational(1);
            }
        }
        // Rows beyond M stay zero.
    }
    return out;
}

RacNetwork<Rational> deep_witness_assignment(std::size_t m, std::size_t r, const Rational& z,
                                           std::uint64_t omega) {
    RacNetwork<Rational> net;
    net.nonlin = Nonlin::Rac;
    net.embed_dim = m;
    net.channels = r;
    net.num_classes = 1;
    LayerWeights<Rational> l1, l2;
    l1.w_in = deep_witness_z(m, r, z, omega);  // one-hot templates: (F^T)^{-1} = I
    l1.w_hid = Mat<Rational>::identity(r);
    l1.h0.assign(r, Rational(1));
    l2.w_in = Mat<Rational>(r, r);
    for (std::size_t j = 0; j < r; ++j) l2.w_in(0, j) = 1;  // rows i > 1 vanish
    l2.w_hid = Mat<Rational>::identity(r);
    l2.h0.assign(r, Rational(1));
    net.layers = {std::move(l1), std::move(l2)};
    net.w_out = Mat<Rational>(1, r);
    net.w_out(0, 0) = 1;  // W^O_{ij} = [j == 1]
    net.validate();
    return net;
}

DenseTensor<Rational> deep_grid_closed_form(std::size_t m, std::size_t r, std::size_t t_steps,
                                            const Rational& z, std::uint64_t omega,
                                            std::size_t cap) {
    const std::size_t rbar = std::min(r, m);
    Mat<Rational> zmat = deep_witness_z(m, r, z, omega);
    std::size_t out_size = 1;
    for (std::size_t t = 0; t < t_steps; ++t) {
        out_size *= m;
        if (out_size > cap) throw CapExceeded("deep_grid_closed_form: entry cap exceeded");
    }
    DenseTensor<Rational> out(std::vector<std::size_t>(t_steps, m));
    std::vector<std::size_t> idx(t_steps, 0);
    std::vector<Rational> run(rbar);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        // run[r] tracks prod_{j<=t} Z_{r d_j} as t advances.
        for (std::size_t rr = 0; rr < rbar; ++rr) run[rr] = 1;
        Rational prod(1);
        for (std::size_t t = 0; t < t_steps; ++t) {
            Rational s(0);
            for (std::size_t rr = 0; rr < rbar; ++rr) {
                run[rr] *= zmat(rr, idx[t]);
                s += run[rr];
            }
            prod *= s;
        }
        out.v[flat] = prod;
        for (std::size_t t = t_steps; t-- > 0;) {
            if (++idx[t] < m) break;
            idx[t] = 0;
        }
    }
    return out;
}

std::size_t param_count(std::size_t depth, std::size_t channels, std::size_t embed_dim,
                        std::size_t classes, Nonlin g) {
    if (depth == 0 || channels == 0 || embed_dim == 0 || classes == 0)
        throw std::invalid_argument("param_count: positive arguments required");
    std::size_t count = channels * embed_dim + channels * channels  // layer 1
                        + (depth - 1) * 2 * channels * channels     // stacked layers
                        + classes * channels;                       // output
    if (g == Nonlin::ModRelu) count += depth * channels;
    return count;
}

void to_json(nlohmann::json& j, const Mat<double>& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        rows.push_back(std::vector<double>(m.a.begin() + i * m.cols, m.a.begin() + (i + 1) * m.cols));
    }
    j = nlohmann::json{{"rows", m.rows}, {"cols", m.cols}, {"entries", rows}};
}

void from_json(const nlohmann::json& j, Mat<double>& m) {
    m = Mat<double>(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto& rows = j.at("entries");
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t c = 0; c < m.cols; ++c) m(i, c) = rows.at(i).at(c).get<double>();
}

void to_json(nlohmann::json& j, const RacNetwork<double>& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& lw : net.layers) {
        layers.push_back({{"w_in", lw.w_in}, {"w_hid", lw.w_hid}, {"h0", lw.h0}, {"bias", lw.bias}});
    }
    j = nlohmann::json{{"schema", 1},
                       {"L", net.depth()},
                       {"R", net.channels},
                       {"M", net.embed_dim},
                       {"C", net.num_classes},
                       {"nonlinearity", nonlin_name(net.nonlin)},
                       {"layers", layers},
                       {"w_out", net.w_out}};
}

void from_json(const nlohmann::json& j, RacNetwork<double>& net) {
    net = RacNetwork<double>{};
    net.channels = j.at("R").get<std::size_t>();
    net.embed_dim = j.at("M").get<std::size_t>();
    net.num_classes = j.at("C").get<std::size_t>();
    net.nonlin = nonlin_from_name(j.at("nonlinearity").get<std::string>());
    for (const auto& lj : j.at("layers")) {
        LayerWeights<double> lw;
        lj.at("w_in").get_to(lw.w_in);
        lj.at("w_hid").get_to(lw.w_hid);
        lj.at("h0").get_to(lw.h0);
        lj.at("bias").get_to(lw.bias);
        net.layers.push_back(std::move(lw));
    }
    j.at("w_out").get_to(net.w_out);
    if (j.at("L").get<std::size_t>() != net.depth())
        throw std::invalid_argument("network json: depth mismatch");
    net.validate();
}

}  // namespace seprank
