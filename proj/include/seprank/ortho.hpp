#pragma once

#include <json.hpp>

#include "seprank/common.hpp"
#include "seprank/linalg.hpp"

namespace seprank {

// Cayley parameterization of an orthogonal matrix: a skew-symmetric A stored
// as its strict upper triangle (row-major), plus a +-1 diagonal D.
struct SkewParam {
    std::size_t n = 0;
    std::vector<double> upper;  // n*(n-1)/2 free entries, rows top to bottom
    std::vector<int> dsign;     // +1 / -1 per channel

    static std::size_t upper_size(std::size_t n) { return n * (n - 1) / 2; }
    static std::size_t upper_index(std::size_t n, std::size_t i, std::size_t j);

    Mat<double> skew() const;  // materialize A with A^T = -A exactly
    Mat<double> dmat() const;
    std::size_t rho() const;  // number of -1 entries in D
    void validate() const;
};

// W = (I+A)^{-1} (I-A) diag(D); orthogonal by construction.
Mat<double> cayley(const SkewParam& p);

// Recovers the skew parameter of W (with the given D); throws NumericError
// when W*D has eigenvalue -1. The result is symmetrized to exact skewness.
Mat<double> inverse_cayley(const Mat<double>& w, const std::vector<int>& dsign);

// scoRNN chain rule: V = (I+A)^{-T} dl/dW (D + W^T); returns dl/dA = V^T - V,
// skew-symmetric by construction.
Mat<double> scornn_grad(const Mat<double>& dl_dw, const Mat<double>& w, const SkewParam& p);

// Additive update on the free entries: A~ = A - eta dl/dA, W~ rebuilt by the
// Cayley map. dl/dA must be skew-symmetric (asymmetry beyond 1e-12 throws).
std::pair<SkewParam, Mat<double>> scornn_step(const SkewParam& p, const Mat<double>& dl_da,
                                              double eta);

// Full-capacity Stiefel update: A = G^T W - W^T G,
// W~ = (I + eta/2 A)^{-1} (I - eta/2 A) W.
Mat<double> stiefel_step(const Mat<double>& w, const Mat<double>& g, double eta);

// Magnitude-shift, sign-preserving activation with per-channel bias.
std::vector<double> modrelu(const std::vector<double>& z, const std::vector<double>& bias);
inline double modrelu_scalar(double z, double b) {
    if (z == 0.0) return 0.0;
    const double mag = std::abs(z) + b;
    return mag > 0.0 ? mag * (z > 0 ? 1.0 : -1.0) : 0.0;
}

// ||W W^T - I||_F.
double orthogonality_deviation(const Mat<double>& w);

struct OrthoDiag {
    double deviation = 0.0;
    std::size_t step = 0;
};

// Strict upper triangle ~ U(-1/sqrt(R), 1/sqrt(R)); D starts with rho
// entries of -1 followed by +1.
SkewParam sample_skew_init(std::size_t r, std::size_t rho, Rng& rng);

void to_json(nlohmann::json& j, const SkewParam& p);
void from_json(const nlohmann::json& j, SkewParam& p);

}  // namespace seprank
