#pragma once

#include <functional>
#include <vector>

namespace jring {

struct simplex_options {
    double tol = 1e-6;       // best-cost improvement counted as progress
    int stall_iters = 50;    // stop after this many iterations without progress
    int max_iter = 5000;
    std::vector<double> step;   // initial vertex displacement per coordinate
};

struct simplex_result {
    std::vector<double> x;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Derivative-free Nelder-Mead minimization. The best-so-far cost is
// non-increasing by construction.
simplex_result nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                           const std::vector<double>& x0, const simplex_options& opt);

}  // namespace jring
