// AVX2+FMA lane. Compiled with -mavx2 -mfma; only ever dispatched to after a
// runtime cpuid check, so the binary stays runnable on older x86-64.

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "seprank/kernels.hpp"

namespace seprank::kern {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double v_dot(const double* x, const double* y, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
        a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    }
    for (; i + 4 <= n; i += 4) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    }
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double v_sumsq(const double* x, std::size_t n) { return v_dot(x, x, n); }

void v_axpy(double a, const double* x, double* y, std::size_t n) {
    __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void v_scal(double a, double* x, std::size_t n) {
    __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void v_vmul(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void v_vadd(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void v_vsub(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

// Row-accumulation inner step shared by gemm and gemm_tn: crow += av * brow.
inline void fma_row(double av, const double* brow, double* crow, std::size_t n) {
    __m256d a = _mm256_set1_pd(av);
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        __m256d c0 = _mm256_loadu_pd(crow + j);
        __m256d c1 = _mm256_loadu_pd(crow + j + 4);
        c0 = _mm256_fmadd_pd(a, _mm256_loadu_pd(brow + j), c0);
        c1 = _mm256_fmadd_pd(a, _mm256_loadu_pd(brow + j + 4), c1);
        _mm256_storeu_pd(crow + j, c0);
        _mm256_storeu_pd(crow + j + 4, c1);
    }
    for (; j + 4 <= n; j += 4) {
        __m256d c0 = _mm256_loadu_pd(crow + j);
        c0 = _mm256_fmadd_pd(a, _mm256_loadu_pd(brow + j), c0);
        _mm256_storeu_pd(crow + j, c0);
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
    __m256d g1 = _mm256_set1_pd(gamma);
    __m256d g2 = _mm256_set1_pd(1.0 - gamma);
    __m256d lrv = _mm256_set1_pd(lr);
    __m256d epsv = _mm256_set1_pd(eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d g = _mm256_loadu_pd(grad + i);
        __m256d a = _mm256_loadu_pd(acc + i);
        a = _mm256_fmadd_pd(g2, _mm256_mul_pd(g, g), _mm256_mul_pd(g1, a));
        _mm256_storeu_pd(acc + i, a);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(a), epsv);
        __m256d p = _mm256_loadu_pd(param + i);
        p = _mm256_sub_pd(p, _mm256_div_pd(_mm256_mul_pd(lrv, g), denom));
        _mm256_storeu_pd(param + i, p);
    }
    for (; i < n; ++i) {
        acc[i] = gamma * acc[i] + (1.0 - gamma) * grad[i] * grad[i];
        param[i] -= lr * grad[i] / (std::sqrt(acc[i]) + eps);
    }
}

}  // namespace

const Ops* avx2_ops_impl() {
    static const Ops ops = {
        "avx2",  v_dot,    v_sumsq, v_axpy,    v_scal,    v_vmul,
        v_vadd,  v_vsub,   v_gemm,  v_gemm_tn, v_gemm_nt, v_rmsprop,
    };
    return &ops;
}

}  // namespace seprank::kern

#endif  // __AVX2__ && __FMA__
