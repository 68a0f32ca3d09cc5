#pragma once

#include <Eigen/Core>
#include <array>
#include <utility>

#include "jring/device.hpp"

namespace jring {

// Truncated primed charge basis |n1', n2'> with ni' in [-n_max, n_max],
// enumerated row-major (n1' outer, n2' inner).
struct charge_basis {
    int n_max = 6;

    int dim() const { return (2 * n_max + 1) * (2 * n_max + 1); }
    int index(int n1p, int n2p) const {
        return (n1p + n_max) * (2 * n_max + 1) + (n2p + n_max);
    }
    std::pair<int, int> labels(int idx) const {
        const int w = 2 * n_max + 1;
        return {idx / w - n_max, idx % w - n_max};
    }
};

bool is_hermitian(const Eigen::MatrixXcd& m, double rel_tol = 1e-12);

// Transformed ring Hamiltonian in the primed charge basis, in GHz.
Eigen::MatrixXcd build_hamiltonian(const device_params& params, const bias_point& bias,
                                   const charge_basis& basis);

// Diagonal entries of the island charge operators (n1, n2, n3).
std::array<Eigen::VectorXd, 3> charge_operators(const charge_basis& basis, int n_0);

}  // namespace jring
