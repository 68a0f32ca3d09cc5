#include "jring/hamiltonian.hpp"

#include <cmath>
#include <complex>

namespace jring {

using std::complex;

bool is_hermitian(const Eigen::MatrixXcd& m, double rel_tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Eigen::MatrixXcd build_hamiltonian(const device_params& params, const bias_point& bias,
                                   const charge_basis& basis) {
    validate(params);
    validate(bias);
    if (basis.n_max < 1) throw config_error("basis.n_max must be >= 1");

    const int n_max = basis.n_max;
    const int dim = basis.dim();
    const double a1 = 0.5 * (params.n_0 + bias.n_g[0] - bias.n_g[2]);
    const double a2 = 0.5 * (params.n_0 + bias.n_g[1] - bias.n_g[2]);

    const complex<double> i_unit(0.0, 1.0);
    const complex<double> t1 = -0.5 * params.e_j[0] * std::exp(-i_unit * (bias.phi / 3.0));
    const complex<double> t2 = -0.5 * params.e_j[1] * std::exp(-i_unit * (bias.phi / 3.0));
    const complex<double> t3 = -0.5 * params.e_j[2] * std::exp(i_unit * (bias.phi / 3.0));

    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n1 = -n_max; n1 <= n_max; ++n1) {
        for (int n2 = -n_max; n2 <= n_max; ++n2) {
            const int row = basis.index(n1, n2);
            const double d1 = n1 - a1;
            const double d2 = n2 + a2;
            h(row, row) = params.e_c * (d1 * d1 + d2 * d2 - double(n1) * double(n2));
            if (n1 + 1 <= n_max) {
                const int up1 = basis.index(n1 + 1, n2);
                h(up1, row) += t1;
                h(row, up1) += std::conj(t1);
            }
            if (n2 + 1 <= n_max) {
                const int up2 = basis.index(n1, n2 + 1);
                h(up2, row) += t2;
                h(row, up2) += std::conj(t2);
            }
            if (n1 + 1 <= n_max && n2 + 1 <= n_max) {
                const int up12 = basis.index(n1 + 1, n2 + 1);
                h(up12, row) += t3;
                h(row, up12) += std::conj(t3);
            }
        }
    }
    return h;
}

std::array<Eigen::VectorXd, 3> charge_operators(const charge_basis& basis, int n_0) {
    const int dim = basis.dim();
    std::array<Eigen::VectorXd, 3> ops{Eigen::VectorXd(dim), Eigen::VectorXd(dim),
                                       Eigen::VectorXd(dim)};
    for (int idx = 0; idx < dim; ++idx) {
        const auto [n1p, n2p] = basis.labels(idx);
        ops[0](idx) = n1p;
        ops[1](idx) = -n2p;
        ops[2](idx) = n_0 - n1p + n2p;
    }
    return ops;
}

}  // namespace jring
