#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "jring/device.hpp"
#include "jring/hamiltonian.hpp"

namespace jring {

struct eigen_system {
    Eigen::VectorXd energies;   // ascending, length k
    Eigen::MatrixXcd states;    // dim x k, orthonormal columns
};

// k lowest eigenpairs of a Hermitian matrix. Rejects non-Hermitian input.
eigen_system eigensolve(const Eigen::MatrixXcd& h, int k);

// (E_k - E_0) for k = 1..count, ascending, GHz.
std::vector<double> transition_frequencies(const device_params& params, const bias_point& bias,
                                           const sector_config& sector, const charge_basis& basis,
                                           int count);

// One labeled evaluation unit of a sweep: a sector plus its fluctuator
// configuration index (0 = base, 1 = delta-shifted).
struct sweep_config {
    sector_config sector;
    int fluctuator = 0;
};

// Four parity sectors with zero offset; optionally doubled with copies
// shifted by the fluctuator delta.
std::vector<sweep_config> config_set(const std::array<double, 3>& delta, bool include_fluctuator);

struct sweep_axis {
    std::string name;   // "phi", "ng1", "ng2" or "ng3"
    std::vector<double> values;
};

// Gate axes add to the base bias; a flux axis replaces phi.
bias_point apply_axis(const bias_point& base, const std::string& axis_name, double value);

struct sweep_row {
    double axis_value = 0.0;
    parity par = parity::EE;
    int fluctuator = 0;
    std::vector<double> freqs;
};

struct sweep_table {
    std::string axis_name;
    int count = 0;
    std::vector<sweep_row> rows;   // ordered by axis value, then config
};

sweep_table sweep(const device_params& params, const bias_point& base, const sweep_axis& axis,
                  const std::vector<sweep_config>& configs, const charge_basis& basis, int count,
                  int threads = 1);

// Max deviation of the lowest `count` eigenvalues between n_max and n_max + 2,
// used as the truncation-convergence safeguard before reporting results.
double truncation_gap(const device_params& params, const bias_point& bias,
                      const charge_basis& basis, int count = 8);

}  // namespace jring
