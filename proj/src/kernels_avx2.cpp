#include <cstddef>
#include <limits>
#include <vector>

#include "jring/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace jring::kernels::detail {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    const __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

inline double dot_prefix(const double* a, const double* b, int len) {
    __m256d acc = _mm256_setzero_pd();
    int j = 0;
    for (; j + 4 <= len; j += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j), acc);
    double sum = hsum(acc);
    for (; j < len; ++j) sum += a[j] * b[j];
    return sum;
}

}  // namespace

void quadform_batch_avx2(const double* x, int n, int d, const double* mu,
                         const double* w_lower, double* out) {
    std::vector<double> y(static_cast<std::size_t>(d));
    for (int i = 0; i < n; ++i) {
        const double* xi = x + static_cast<std::size_t>(i) * d;
        int j = 0;
        for (; j + 4 <= d; j += 4)
            _mm256_storeu_pd(y.data() + j,
                             _mm256_sub_pd(_mm256_loadu_pd(xi + j), _mm256_loadu_pd(mu + j)));
        for (; j < d; ++j) y[j] = xi[j] - mu[j];

        double acc = 0.0;
        for (int r = 0; r < d; ++r) {
            const double z = dot_prefix(w_lower + static_cast<std::size_t>(r) * d, y.data(),
                                        r + 1);
            acc += z * z;
        }
        out[i] = acc;
    }
}

void nearest_centroid_avx2(const double* x, int n, int d, const double* c, int k,
                           int* idx, double* dist2) {
    for (int i = 0; i < n; ++i) {
        const double* xi = x + static_cast<std::size_t>(i) * d;
        double best = std::numeric_limits<double>::infinity();
        int best_idx = 0;
        for (int m = 0; m < k; ++m) {
            const double* cm = c + static_cast<std::size_t>(m) * d;
            __m256d acc = _mm256_setzero_pd();
            int j = 0;
            for (; j + 4 <= d; j += 4) {
                const __m256d diff =
                    _mm256_sub_pd(_mm256_loadu_pd(xi + j), _mm256_loadu_pd(cm + j));
                acc = _mm256_fmadd_pd(diff, diff, acc);
            }
            double dist = hsum(acc);
            for (; j < d; ++j) {
                const double diff = xi[j] - cm[j];
                dist += diff * diff;
            }
            if (dist < best) {
                best = dist;
                best_idx = m;
            }
        }
        idx[i] = best_idx;
        dist2[i] = best;
    }
}

}  // namespace jring::kernels::detail

#else

namespace jring::kernels::detail {

void quadform_batch_avx2(const double* x, int n, int d, const double* mu,
                         const double* w_lower, double* out) {
    quadform_batch_scalar(x, n, d, mu, w_lower, out);
}

void nearest_centroid_avx2(const double* x, int n, int d, const double* c, int k,
                           int* idx, double* dist2) {
    nearest_centroid_scalar(x, n, d, c, k, idx, dist2);
}

}  // namespace jring::kernels::detail

#endif
