#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "seprank/kernels.hpp"

namespace seprank::kern {

#if defined(SEPRANK_HAVE_AVX2_LANE)
const Ops* avx2_ops_impl();
#endif
#if defined(__aarch64__)
const Ops* neon_ops_impl();
#endif

const Ops* avx2_ops() {
#if defined(SEPRANK_HAVE_AVX2_LANE)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return avx2_ops_impl();
    }
#endif
    return nullptr;
}

const Ops* neon_ops() {
#if defined(__aarch64__)
    return neon_ops_impl();
#else
    return nullptr;
#endif
}

namespace {

const Ops* pick_default() {
    if (const char* env = std::getenv("SEPRANK_KERNELS")) {
        std::string want(env);
        if (want == "scalar") return &scalar_ops();
        if (want == "avx2" && avx2_ops()) return avx2_ops();
        if (want == "neon" && neon_ops()) return neon_ops();
        // Unknown or unavailable request falls through to autodetection.
    }
    if (const Ops* v = avx2_ops()) return v;
    if (const Ops* v = neon_ops()) return v;
    return &scalar_ops();
}

std::atomic<const Ops*> g_active{nullptr};

}  // namespace

const Ops& active() {
    const Ops* cur = g_active.load(std::memory_order_acquire);
    if (!cur) {
        cur = pick_default();
        g_active.store(cur, std::memory_order_release);
    }
    return *cur;
}

void set_active(const std::string& name) {
    if (name == "scalar") {
        g_active.store(&scalar_ops(), std::memory_order_release);
        return;
    }
    if (name == "avx2" && avx2_ops()) {
        g_active.store(avx2_ops(), std::memory_order_release);
        return;
    }
    if (name == "neon" && neon_ops()) {
        g_active.store(neon_ops(), std::memory_order_release);
        return;
    }
    throw std::invalid_argument("kernel lane unavailable: " + name);
}

std::vector<std::string> available() {
    std::vector<std::string> out{"scalar"};
    if (avx2_ops()) out.emplace_back("avx2");
    if (neon_ops()) out.emplace_back("neon");
    return out;
}

}  // namespace seprank::kern
