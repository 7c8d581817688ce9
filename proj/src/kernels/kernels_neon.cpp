// NEON lane for aarch64. float64x2_t throughout; contracts identical to the
// scalar reference.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstring>

#include "seprank/kernels.hpp"

namespace seprank::kern {
namespace {

double v_dot(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    for (; i + 2 <= n; i += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double v_sumsq(const double* x, std::size_t n) { return v_dot(x, x, n); }

void v_axpy(double a, const double* x, double* y, std::size_t n) {
    float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void v_scal(double a, double* x, std::size_t n) {
    float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(av, vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void v_vmul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void v_vadd(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void v_vsub(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

inline void fma_row(double av, const double* brow, double* crow, std::size_t n) {
    float64x2_t a = vdupq_n_f64(av);
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        vst1q_f64(crow + j, vfmaq_f64(vld1q_f64(crow + j), a, vld1q_f64(brow + j)));
    }
    for (; j < n; ++j) crow[j] += av * brow[j];
}

void v_gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            if (arow[p] != 0.0) fma_row(arow[p], b + p * n, crow, n);
        }
    }
}

void v_gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            if (arow[i] != 0.0) fma_row(arow[i], brow, c + i * n, n);
        }
    }
}

void v_gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            double acc = accumulate ? crow[j] : 0.0;
            crow[j] = acc + v_dot(arow, b + j * k, k);
        }
    }
}

void v_rmsprop(double* param, double* acc, const double* grad, std::size_t n, double gamma,
               double lr, double eps) {
    for (std::size_t i = 0; i < n; ++i) {
        acc[i] = gamma * acc[i] + (1.0 - gamma) * grad[i] * grad[i];
        param[i] -= lr * grad[i] / (std::sqrt(acc[i]) + eps);
    }
}

}  // namespace

const Ops* neon_ops_impl() {
    static const Ops ops = {
        "neon",  v_dot,    v_sumsq, v_axpy,    v_scal,    v_vmul,
        v_vadd,  v_vsub,   v_gemm,  v_gemm_tn, v_gemm_nt, v_rmsprop,
    };
    return &ops;
}

}  // namespace seprank::kern

#endif  // __aarch64__
