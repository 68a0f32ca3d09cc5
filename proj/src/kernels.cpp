#include "jring/kernels.hpp"

namespace jring::kernels {

namespace {

enum class mode { auto_detect, forced_scalar, forced_avx2 };
mode g_mode = mode::auto_detect;

}  // namespace

bool has_avx2() {
#if defined(JRING_HAVE_AVX2) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

isa active() {
    if (g_mode == mode::forced_scalar) return isa::scalar;
    return has_avx2() ? isa::avx2 : isa::scalar;
}

void force(isa which) {
    g_mode = which == isa::scalar ? mode::forced_scalar : mode::forced_avx2;
}

void reset() { g_mode = mode::auto_detect; }

void quadform_batch(const double* x, int n, int d, const double* mu,
                    const double* w_lower, double* out) {
    if (active() == isa::avx2)
        detail::quadform_batch_avx2(x, n, d, mu, w_lower, out);
    else
        detail::quadform_batch_scalar(x, n, d, mu, w_lower, out);
}

void nearest_centroid(const double* x, int n, int d, const double* c, int k,
                      int* idx, double* dist2) {
    if (active() == isa::avx2)
        detail::nearest_centroid_avx2(x, n, d, c, k, idx, dist2);
    else
        detail::nearest_centroid_scalar(x, n, d, c, k, idx, dist2);
}

}  // namespace jring::kernels
