#include <cstddef>
#include <limits>
#include <vector>

#include "jring/kernels.hpp"

namespace jring::kernels::detail {

void quadform_batch_scalar(const double* x, int n, int d, const double* mu,
                           const double* w_lower, double* out) {
    std::vector<double> y(static_cast<std::size_t>(d));
    for (int i = 0; i < n; ++i) {
        const double* xi = x + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) y[j] = xi[j] - mu[j];
        double acc = 0.0;
        for (int r = 0; r < d; ++r) {
            const double* wr = w_lower + static_cast<std::size_t>(r) * d;
            double z = 0.0;
            for (int j = 0; j <= r; ++j) z += wr[j] * y[j];
            acc += z * z;
        }
        out[i] = acc;
    }
}

void nearest_centroid_scalar(const double* x, int n, int d, const double* c, int k,
                             int* idx, double* dist2) {
    for (int i = 0; i < n; ++i) {
        const double* xi = x + static_cast<std::size_t>(i) * d;
        double best = std::numeric_limits<double>::infinity();
        int best_idx = 0;
        for (int m = 0; m < k; ++m) {
            const double* cm = c + static_cast<std::size_t>(m) * d;
            double dist = 0.0;
            for (int j = 0; j < d; ++j) {
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
