#include "jring/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jring/device.hpp"

namespace jring {

namespace {

struct vertex {
    std::vector<double> x;
    double f = 0.0;
};

}  // namespace

simplex_result nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                           const std::vector<double>& x0, const simplex_options& opt) {
    const int n = static_cast<int>(x0.size());
    if (n == 0) throw config_error("nelder_mead: empty parameter vector");
    std::vector<double> step = opt.step;
    if (step.empty()) {
        step.resize(n);
        for (int i = 0; i < n; ++i) step[i] = std::max(0.02 * std::abs(x0[i]), 1e-3);
    }
    if (static_cast<int>(step.size()) != n)
        throw config_error("nelder_mead: step size list must match x0");

    std::vector<vertex> simplex(n + 1);
    simplex[0] = {x0, f(x0)};
    for (int i = 0; i < n; ++i) {
        std::vector<double> x = x0;
        x[i] += step[i];
        simplex[i + 1] = {x, f(x)};
    }
    auto by_cost = [](const vertex& a, const vertex& b) { return a.f < b.f; };
    std::sort(simplex.begin(), simplex.end(), by_cost);

    double best = simplex[0].f;
    int stall = 0;
    int iter = 0;
    for (; iter < opt.max_iter && stall < opt.stall_iters; ++iter) {
        std::vector<double> centroid(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) centroid[j] += simplex[i].x[j] / n;

        auto along = [&](double coef) {
            std::vector<double> x(n);
            for (int j = 0; j < n; ++j)
                x[j] = centroid[j] + coef * (simplex[n].x[j] - centroid[j]);
            return x;
        };

        const std::vector<double> xr = along(-1.0);
        const double fr = f(xr);
        if (fr < simplex[0].f) {
            const std::vector<double> xe = along(-2.0);
            const double fe = f(xe);
            simplex[n] = fe < fr ? vertex{xe, fe} : vertex{xr, fr};
        } else if (fr < simplex[n - 1].f) {
            simplex[n] = {xr, fr};
        } else {
            const bool outside = fr < simplex[n].f;
            const std::vector<double> xc = along(outside ? -0.5 : 0.5);
            const double fc = f(xc);
            if (fc < std::min(fr, simplex[n].f)) {
                simplex[n] = {xc, fc};
            } else {
                for (int i = 1; i <= n; ++i) {
                    for (int j = 0; j < n; ++j)
                        simplex[i].x[j] = 0.5 * (simplex[i].x[j] + simplex[0].x[j]);
                    simplex[i].f = f(simplex[i].x);
                }
            }
        }
        std::sort(simplex.begin(), simplex.end(), by_cost);

        if (best - simplex[0].f >= opt.tol) {
            stall = 0;
        } else {
            ++stall;
        }
        best = std::min(best, simplex[0].f);
    }

    return {simplex[0].x, simplex[0].f, iter, stall >= opt.stall_iters};
}

}  // namespace jring
