#include "seprank/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seprank/common.hpp"

namespace seprank {

Mat<double> lu_solve(Mat<double> a, const Mat<double>& b) {
    if (a.rows != a.cols) throw std::invalid_argument("lu_solve: square matrix required");
    if (a.rows != b.rows) throw std::invalid_argument("lu_solve: rhs row mismatch");
    const std::size_t n = a.rows, m = b.cols;
    Mat<double> x = b;
    std::vector<std::size_t> piv(n);
    std::iota(piv.begin(), piv.end(), 0);

    double scale = 0.0;
    for (double v : a.a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) throw NumericError("lu_solve: zero matrix");

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
        if (std::abs(a(p, k)) <= 1e-14 * scale) throw NumericError("lu_solve: singular matrix");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            for (std::size_t j = 0; j < m; ++j) std::swap(x(k, j), x(p, j));
        }
        const double inv = 1.0 / a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = a(i, k) * inv;
            if (f == 0.0) continue;
            a(i, k) = f;
            kern::active().axpy(-f, &a(k, k + 1), &a(i, k + 1), n - k - 1);
            kern::active().axpy(-f, &x(k, 0), &x(i, 0), m);
        }
    }
    // Back substitution.
    for (std::size_t k = n; k-- > 0;) {
        const double inv = 1.0 / a(k, k);
        for (std::size_t j = 0; j < m; ++j) x(k, j) *= inv;
        for (std::size_t i = 0; i < k; ++i) {
            kern::active().axpy(-a(i, k), &x(k, 0), &x(i, 0), m);
        }
    }
    return x;
}

Mat<double> inverse(const Mat<double>& a) { return lu_solve(a, Mat<double>::identity(a.rows)); }

Svd jacobi_svd(const Mat<double>& a_in) {
    // Work on the orientation with fewer columns: columns get orthogonalized.
    const bool flip = a_in.rows < a_in.cols;
    Mat<double> w = flip ? a_in.transposed() : a_in;  // m x n, m >= n
    const std::size_t m = w.rows, n = w.cols;
    Mat<double> v = Mat<double>::identity(n);

    // Column-major copy so rotations touch contiguous memory.
    std::vector<double> col(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) col[j * m + i] = w(i, j);

    const double eps = 1e-15;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double* cp = &col[p * m];
                double* cq = &col[q * m];
                double app = kern::active().sumsq(cp, m);
                double aqq = kern::active().sumsq(cq, m);
                double apq = kern::active().dot(cp, cq, m);
                if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    double xp = cp[i], xq = cq[i];
                    cp[i] = c * xp - s * xq;
                    cq[i] = s * xp + c * xq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double xp = v(i, p), xq = v(i, q);
                    v(i, p) = c * xp - s * xq;
                    v(i, q) = s * xp + c * xq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(n);
    Mat<double> u(m, n);
    for (std::size_t j = 0; j < n; ++j) {
        double nrm = std::sqrt(kern::active().sumsq(&col[j * m], m));
        sigma[j] = nrm;
        if (nrm > 0) {
            for (std::size_t i = 0; i < m; ++i) u(i, j) = col[j * m + i] / nrm;
        }
    }
    // Sort singular values descending, permuting U and V accordingly.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });
    Svd out;
    out.sigma.resize(n);
    out.u = Mat<double>(m, n);
    out.v = Mat<double>(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.sigma[j] = sigma[order[j]];
        for (std::size_t i = 0; i < m; ++i) out.u(i, j) = u(i, order[j]);
        for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v(i, order[j]);
    }
    if (flip) std::swap(out.u, out.v);
    return out;
}

Mat<double> pinv(const Mat<double>& a, double rcond) {
    Svd s = jacobi_svd(a);
    const double cutoff = s.sigma.empty() ? 0.0 : rcond * s.sigma[0];
    // pinv = V diag(1/sigma) U^T
    Mat<double> vs = s.v;
    for (std::size_t j = 0; j < s.sigma.size(); ++j) {
        double f = s.sigma[j] > cutoff && s.sigma[j] > 0.0 ? 1.0 / s.sigma[j] : 0.0;
        for (std::size_t i = 0; i < vs.rows; ++i) vs(i, j) *= f;
    }
    return vs * s.u.transposed();
}

double frob_norm(const Mat<double>& a) {
    return std::sqrt(kern::active().sumsq(a.a.data(), a.a.size()));
}

}  // namespace seprank
