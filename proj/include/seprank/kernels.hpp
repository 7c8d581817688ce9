#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace seprank::kern {

// Double-precision inner-loop kernels. One scalar reference implementation
// plus SIMD lanes with identical contracts; the active lane is chosen at
// runtime (CPU detection, overridable via SEPRANK_KERNELS=scalar|avx2|neon).
// All matrices are dense row-major.
struct Ops {
    const char* name;

    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*sumsq)(const double* x, std::size_t n);
    void (*axpy)(double a, const double* x, double* y, std::size_t n);  // y += a*x
    void (*scal)(double a, double* x, std::size_t n);                   // x *= a
    void (*vmul)(const double* a, const double* b, double* out, std::size_t n);
    void (*vadd)(const double* a, const double* b, double* out, std::size_t n);
    void (*vsub)(const double* a, const double* b, double* out, std::size_t n);

    // C[m x n] (+)= A[m x k] * B[k x n]
    void (*gemm)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n, bool accumulate);
    // C[m x n] (+)= A[k x m]^T * B[k x n]
    void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n, bool accumulate);
    // C[m x n] (+)= A[m x k] * B[n x k]^T
    void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n, bool accumulate);

    // acc = gamma*acc + (1-gamma)*g^2 ; p -= lr * g / (sqrt(acc) + eps)
    void (*rmsprop)(double* param, double* acc, const double* grad, std::size_t n, double gamma,
                    double lr, double eps);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when the lane is not built or the CPU lacks AVX2+FMA
const Ops* neon_ops();  // nullptr off aarch64

// The runtime-selected lane.
const Ops& active();
// Force a lane by name; throws std::invalid_argument when unavailable.
void set_active(const std::string& name);
std::vector<std::string> available();

}  // namespace seprank::kern
