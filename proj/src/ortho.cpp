#include "seprank/ortho.hpp"

#include <cmath>

namespace seprank {

std::size_t SkewParam::upper_index(std::size_t n, std::size_t i, std::size_t j) {
    // Row-major strict upper triangle: (i, j) with i < j.
    return i * n - i * (i + 1) / 2 + (j - i - 1);
}

Mat<double> SkewParam::skew() const {
    Mat<double> a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = upper[upper_index(n, i, j)];
            a(i, j) = v;
            a(j, i) = -v;
        }
    }
    return a;
}

Mat<double> SkewParam::dmat() const {
    Mat<double> d(n, n);
    for (std::size_t i = 0; i < n; ++i) d(i, i) = dsign[i];
    return d;
}

std::size_t SkewParam::rho() const {
    std::size_t c = 0;
    for (int s : dsign)
        if (s < 0) ++c;
    return c;
}

void SkewParam::validate() const {
    if (upper.size() != upper_size(n) || dsign.size() != n)
        throw std::invalid_argument("SkewParam: size mismatch");
    for (int s : dsign)
        if (s != 1 && s != -1) throw std::invalid_argument("SkewParam: D entries must be +-1");
}

Mat<double> cayley(const SkewParam& p) {
    p.validate();
    Mat<double> a = p.skew();
    Mat<double> id = Mat<double>::identity(p.n);
    // (I+A) X = (I-A); always solvable since skew A has imaginary spectrum.
    Mat<double> x = lu_solve(id + a, id - a);
    for (std::size_t j = 0; j < p.n; ++j) {
        if (p.dsign[j] < 0)
            for (std::size_t i = 0; i < p.n; ++i) x(i, j) = -x(i, j);
    }
    return x;
}

Mat<double> inverse_cayley(const Mat<double>& w, const std::vector<int>& dsign) {
    if (w.rows != w.cols || dsign.size() != w.rows)
        throw std::invalid_argument("inverse_cayley: shape mismatch");
    const std::size_t n = w.rows;
    Mat<double> wd = w;  // W * D^{-1}, D^{-1} = D
    for (std::size_t j = 0; j < n; ++j) {
        if (dsign[j] < 0)
            for (std::size_t i = 0; i < n; ++i) wd(i, j) = -wd(i, j);
    }
    Mat<double> id = Mat<double>::identity(n);
    Mat<double> a;
    try {
        a = lu_solve(id + wd, id - wd);
    } catch (const NumericError&) {
        throw NumericError("inverse_cayley: W*D has eigenvalue -1");
    }
    // Symmetrize away the solve's round-off so the result is exactly skew.
    Mat<double> out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = 0.5 * (a(i, j) - a(j, i));
    return out;
}

Mat<double> scornn_grad(const Mat<double>& dl_dw, const Mat<double>& w, const SkewParam& p) {
    p.validate();
    if (dl_dw.rows != p.n || dl_dw.cols != p.n || w.rows != p.n || w.cols != p.n)
        throw std::invalid_argument("scornn_grad: shape mismatch");
    Mat<double> dw = dl_dw * (p.dmat() + w.transposed());
    // V = (I+A)^{-T} dw  <=>  (I+A)^T V = dw, and (I+A)^T = I - A.
    Mat<double> v = lu_solve(Mat<double>::identity(p.n) - p.skew(), dw);
    Mat<double> out(p.n, p.n);
    for (std::size_t i = 0; i < p.n; ++i)
        for (std::size_t j = 0; j < p.n; ++j) out(i, j) = v(j, i) - v(i, j);
    return out;
}

std::pair<SkewParam, Mat<double>> scornn_step(const SkewParam& p, const Mat<double>& dl_da,
                                              double eta) {
    p.validate();
    if (dl_da.rows != p.n || dl_da.cols != p.n)
        throw std::invalid_argument("scornn_step: gradient shape");
    double scale = 0.0;
    for (double v : dl_da.a) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < p.n; ++i)
        for (std::size_t j = 0; j < p.n; ++j) {
            const double asym = std::abs(dl_da(i, j) + dl_da(j, i));
            if (asym > 1e-12 * std::max(1.0, scale))
                throw std::invalid_argument("scornn_step: gradient is not skew-symmetric");
        }
    SkewParam next = p;
    for (std::size_t i = 0; i < p.n; ++i)
        for (std::size_t j = i + 1; j < p.n; ++j)
            next.upper[SkewParam::upper_index(p.n, i, j)] -= eta * dl_da(i, j);
    Mat<double> w = cayley(next);
    return {std::move(next), std::move(w)};
}

Mat<double> stiefel_step(const Mat<double>& w, const Mat<double>& g, double eta) {
    if (w.rows != w.cols || g.rows != w.rows || g.cols != w.cols)
        throw std::invalid_argument("stiefel_step: shape mismatch");
    const std::size_t n = w.rows;
    Mat<double> a = g.transposed() * w - w.transposed() * g;
    Mat<double> lhs = Mat<double>::identity(n);
    Mat<double> rhs = Mat<double>::identity(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            lhs(i, j) += 0.5 * eta * a(i, j);
            rhs(i, j) -= 0.5 * eta * a(i, j);
        }
    try {
        return lu_solve(lhs, rhs * w);
    } catch (const NumericError&) {
        throw NumericError("stiefel_step: I + eta/2 A singular; reduce the step size");
    }
}

std::vector<double> modrelu(const std::vector<double>& z, const std::vector<double>& bias) {
    if (z.size() != bias.size()) throw std::invalid_argument("modrelu: length mismatch");
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = modrelu_scalar(z[i], bias[i]);
    return out;
}

double orthogonality_deviation(const Mat<double>& w) {
    if (w.rows != w.cols) throw std::invalid_argument("orthogonality_deviation: square matrix");
    Mat<double> g = w * w.transposed();
    for (std::size_t i = 0; i < w.rows; ++i) g(i, i) -= 1.0;
    return frob_norm(g);
}

SkewParam sample_skew_init(std::size_t r, std::size_t rho, Rng& rng) {
    if (rho > r) throw std::invalid_argument("sample_skew_init: rho out of range");
    SkewParam p;
    p.n = r;
    p.upper.resize(SkewParam::upper_size(r));
    const double lim = 1.0 / std::sqrt(static_cast<double>(r));
    std::uniform_real_distribution<double> u(-lim, lim);
    for (auto& v : p.upper) v = u(rng);
    p.dsign.assign(r, 1);
    for (std::size_t i = 0; i < rho; ++i) p.dsign[i] = -1;
    return p;
}

void to_json(nlohmann::json& j, const SkewParam& p) {
    j = nlohmann::json{{"n", p.n}, {"upper", p.upper}, {"dsign", p.dsign}};
}

void from_json(const nlohmann::json& j, SkewParam& p) {
    p.n = j.at("n").get<std::size_t>();
    j.at("upper").get_to(p.upper);
    j.at("dsign").get_to(p.dsign);
    p.validate();
}

}  // namespace seprank
