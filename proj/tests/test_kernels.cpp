#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "jring/kernels.hpp"
#include "jring/rng.hpp"

using namespace jring;
using namespace jring::kernels;

namespace {

struct dims {
    int n;
    int d;
};

std::vector<double> random_vector(rng64& rng, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = rng.normal();
    return v;
}

// row-major lower-triangular factor with positive diagonal
std::vector<double> random_lower(rng64& rng, int d) {
    std::vector<double> w(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < i; ++j) w[i * d + j] = 0.3 * rng.normal();
        w[i * d + i] = 0.5 + rng.uniform();
    }
    return w;
}

void naive_quadform(const std::vector<double>& x, int n, int d, const std::vector<double>& mu,
                    const std::vector<double>& w, std::vector<double>& out) {
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int r = 0; r < d; ++r) {
            double dot = 0.0;
            for (int c = 0; c <= r; ++c) dot += w[r * d + c] * (x[i * d + c] - mu[c]);
            acc += dot * dot;
        }
        out[i] = acc;
    }
}

void naive_nearest(const std::vector<double>& x, int n, int d, const std::vector<double>& cent,
                   int k, std::vector<int>& idx, std::vector<double>& dist2) {
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double best_d = 1e300;
        for (int c = 0; c < k; ++c) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j) {
                const double diff = x[i * d + j] - cent[c * d + j];
                acc += diff * diff;
            }
            if (acc < best_d) {
                best_d = acc;
                best = c;
            }
        }
        idx[i] = best;
        dist2[i] = best_d;
    }
}

}  // namespace

TEST_CASE("quadratic forms match a naive evaluation") {
    rng64 rng(5);
    for (const auto [n, d] : {dims{1, 1}, dims{3, 5}, dims{8, 18}, dims{1000, 32}}) {
        CAPTURE(n);
        CAPTURE(d);
        const auto x = random_vector(rng, n * d);
        const auto mu = random_vector(rng, d);
        const auto w = random_lower(rng, d);
        std::vector<double> expected(n), got(n);
        naive_quadform(x, n, d, mu, w, expected);

        quadform_batch(x.data(), n, d, mu.data(), w.data(), got.data());
        for (int i = 0; i < n; ++i)
            CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-10));
    }
}

TEST_CASE("centroid search matches a naive evaluation") {
    rng64 rng(6);
    for (const auto [n, d] : {dims{1, 1}, dims{3, 5}, dims{8, 18}, dims{1000, 32}}) {
        CAPTURE(n);
        CAPTURE(d);
        for (int k : {1, 3, 7}) {
            const auto x = random_vector(rng, n * d);
            const auto cent = random_vector(rng, k * d);
            std::vector<int> idx_naive(n), idx(n);
            std::vector<double> d2_naive(n), d2(n);
            naive_nearest(x, n, d, cent, k, idx_naive, d2_naive);

            nearest_centroid(x.data(), n, d, cent.data(), k, idx.data(), d2.data());
            for (int i = 0; i < n; ++i) {
                CHECK(idx[i] == idx_naive[i]);
                CHECK(d2[i] == doctest::Approx(d2_naive[i]).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("scalar and vector paths agree bitwise-tightly") {
    if (!has_avx2()) return;   // nothing to compare on this host

    rng64 rng(7);
    for (const auto [n, d] : {dims{1, 1}, dims{3, 5}, dims{8, 18}, dims{1000, 31}}) {
        CAPTURE(n);
        CAPTURE(d);
        const auto x = random_vector(rng, n * d);
        const auto mu = random_vector(rng, d);
        const auto w = random_lower(rng, d);
        std::vector<double> scalar_out(n), avx_out(n);
        detail::quadform_batch_scalar(x.data(), n, d, mu.data(), w.data(), scalar_out.data());
        detail::quadform_batch_avx2(x.data(), n, d, mu.data(), w.data(), avx_out.data());
        for (int i = 0; i < n; ++i) {
            const double scale = std::max(1.0, std::abs(scalar_out[i]));
            CHECK(std::abs(scalar_out[i] - avx_out[i]) / scale < 1e-12);
        }

        const int k = 5;
        const auto cent = random_vector(rng, k * d);
        std::vector<int> idx_s(n), idx_v(n);
        std::vector<double> d2_s(n), d2_v(n);
        detail::nearest_centroid_scalar(x.data(), n, d, cent.data(), k, idx_s.data(), d2_s.data());
        detail::nearest_centroid_avx2(x.data(), n, d, cent.data(), k, idx_v.data(), d2_v.data());
        for (int i = 0; i < n; ++i) {
            CHECK(idx_s[i] == idx_v[i]);
            const double scale = std::max(1.0, d2_s[i]);
            CHECK(std::abs(d2_s[i] - d2_v[i]) / scale < 1e-12);
        }
    }
}

TEST_CASE("nearest-centroid ties break to the lower index") {
    // centroids 0 and 2 are identical; 1 is elsewhere
    const std::vector<double> cent{1.0, 2.0, -4.0, 0.5, 1.0, 2.0};
    const std::vector<double> x{1.0, 2.5};
    int idx = -1;
    double d2 = -1.0;
    nearest_centroid(x.data(), 1, 2, cent.data(), 3, &idx, &d2);
    CHECK(idx == 0);
    CHECK(d2 == doctest::Approx(0.25));
}

TEST_CASE("the dispatch hooks force and restore implementations") {
    const isa initial = active();

    force(isa::scalar);
    CHECK(active() == isa::scalar);

    force(isa::avx2);
    if (has_avx2())
        CHECK(active() == isa::avx2);
    else
        CHECK(active() == isa::scalar);   // unsupported requests fall back

    reset();
    CHECK(active() == initial);

    // forced-scalar results match the default dispatch
    rng64 rng(8);
    const int n = 64, d = 18;
    const auto x = random_vector(rng, n * d);
    const auto mu = random_vector(rng, d);
    const auto w = random_lower(rng, d);
    std::vector<double> with_default(n), with_scalar(n);
    quadform_batch(x.data(), n, d, mu.data(), w.data(), with_default.data());
    force(isa::scalar);
    quadform_batch(x.data(), n, d, mu.data(), w.data(), with_scalar.data());
    reset();
    for (int i = 0; i < n; ++i)
        CHECK(with_scalar[i] == doctest::Approx(with_default[i]).epsilon(1e-12));
}
