#pragma once

namespace jring::kernels {

enum class isa { scalar, avx2 };

bool has_avx2();

// Active implementation: AVX2 when compiled in and supported, else scalar.
isa active();

// Test hook; forcing an unsupported ISA falls back to scalar.
void force(isa which);
void reset();

// out[i] = || w_lower * (x_i - mu) ||^2 with x row-major (n x d) and w_lower a
// row-major lower-triangular d x d factor (typically inverse Cholesky).
void quadform_batch(const double* x, int n, int d, const double* mu,
                    const double* w_lower, double* out);

// Nearest centroid per row of x among k row-major centroids; ties go to the
// lower index.
void nearest_centroid(const double* x, int n, int d, const double* c, int k,
                      int* idx, double* dist2);

namespace detail {
void quadform_batch_scalar(const double* x, int n, int d, const double* mu,
                           const double* w_lower, double* out);
void quadform_batch_avx2(const double* x, int n, int d, const double* mu,
                         const double* w_lower, double* out);
void nearest_centroid_scalar(const double* x, int n, int d, const double* c, int k,
                             int* idx, double* dist2);
void nearest_centroid_avx2(const double* x, int n, int d, const double* c, int k,
                           int* idx, double* dist2);
}  // namespace detail

}  // namespace jring::kernels
