#include "jring/spectrum.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "jring/threading.hpp"

namespace jring {

eigen_system eigensolve(const Eigen::MatrixXcd& h, int k) {
    if (h.rows() != h.cols()) throw config_error("eigensolve: matrix must be square");
    if (k < 1 || k > h.rows()) throw config_error("eigensolve: k out of range");
    if (!is_hermitian(h)) throw config_error("eigensolve: matrix is not Hermitian");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success)
        throw numerical_error("eigensolve: decomposition failed");

    eigen_system out;
    out.energies = solver.eigenvalues().head(k);
    out.states = solver.eigenvectors().leftCols(k);
    return out;
}

std::vector<double> transition_frequencies(const device_params& params, const bias_point& bias,
                                           const sector_config& sector, const charge_basis& basis,
                                           int count) {
    if (count < 1) throw config_error("transition_frequencies: count must be >= 1");
    const bias_point eff = effective_bias(bias, sector);
    const Eigen::MatrixXcd h = build_hamiltonian(params, eff, basis);
    const eigen_system sys = eigensolve(h, count + 1);
    std::vector<double> freqs(count);
    for (int k = 1; k <= count; ++k) freqs[k - 1] = sys.energies(k) - sys.energies(0);
    return freqs;
}

std::vector<sweep_config> config_set(const std::array<double, 3>& delta,
                                     bool include_fluctuator) {
    const parity all[] = {parity::EE, parity::EO, parity::OE, parity::OO};
    std::vector<sweep_config> configs;
    for (parity p : all) configs.push_back({sector_config{p, {0.0, 0.0, 0.0}}, 0});
    if (include_fluctuator)
        for (parity p : all) configs.push_back({sector_config{p, delta}, 1});
    return configs;
}

bias_point apply_axis(const bias_point& base, const std::string& axis_name, double value) {
    bias_point out = base;
    if (axis_name == "phi")
        out.phi = value;
    else if (axis_name == "ng1")
        out.n_g[0] += value;
    else if (axis_name == "ng2")
        out.n_g[1] += value;
    else if (axis_name == "ng3")
        out.n_g[2] += value;
    else
        throw config_error("unknown sweep axis: " + axis_name);
    return out;
}

sweep_table sweep(const device_params& params, const bias_point& base, const sweep_axis& axis,
                  const std::vector<sweep_config>& configs, const charge_basis& basis, int count,
                  int threads) {
    if (axis.values.empty()) throw config_error("sweep: axis values must be non-empty");
    for (double v : axis.values)
        if (!std::isfinite(v)) throw config_error("sweep: axis values must be finite");
    if (configs.empty()) throw config_error("sweep: config list must be non-empty");

    sweep_table table;
    table.axis_name = axis.name;
    table.count = count;
    const int n_axis = static_cast<int>(axis.values.size());
    const int n_cfg = static_cast<int>(configs.size());
    table.rows.resize(static_cast<std::size_t>(n_axis) * n_cfg);

    parallel_for(
        n_axis * n_cfg,
        [&](int flat) {
            const int ia = flat / n_cfg;
            const int ic = flat % n_cfg;
            const bias_point bias = apply_axis(base, axis.name, axis.values[ia]);
            sweep_row row;
            row.axis_value = axis.values[ia];
            row.par = configs[ic].sector.par;
            row.fluctuator = configs[ic].fluctuator;
            row.freqs = transition_frequencies(params, bias, configs[ic].sector, basis, count);
            table.rows[flat] = std::move(row);
        },
        threads);
    return table;
}

double truncation_gap(const device_params& params, const bias_point& bias,
                      const charge_basis& basis, int count) {
    const charge_basis wider{basis.n_max + 2};
    const eigen_system a = eigensolve(build_hamiltonian(params, bias, basis), count);
    const eigen_system b = eigensolve(build_hamiltonian(params, bias, wider), count);
    return (a.energies - b.energies).cwiseAbs().maxCoeff();
}

}  // namespace jring
