#include "jring/scattering.hpp"

#include <cmath>
#include <complex>

namespace jring {

resonance_set resonances(const device_params& params, const bias_point& bias,
                         const sector_config& sector, const charge_basis& basis, int k_states) {
    if (k_states < 1) throw config_error("resonances: k_states must be >= 1");
    const bias_point eff = effective_bias(bias, sector);
    const Eigen::MatrixXcd h = build_hamiltonian(params, eff, basis);
    const eigen_system sys = eigensolve(h, k_states + 1);
    const auto ops = charge_operators(basis, params.n_0);

    resonance_set res;
    res.freq.resize(k_states);
    res.weight.resize(k_states);
    res.u.resize(k_states);
    const Eigen::VectorXcd ground = sys.states.col(0);
    for (int k = 1; k <= k_states; ++k) {
        const Eigen::VectorXcd excited = sys.states.col(k);
        Eigen::Vector3cd u;
        for (int i = 0; i < 3; ++i)
            u(i) = ground.dot(ops[i].asDiagonal() * excited);   // <0| n_i |k>
        res.freq[k - 1] = sys.energies(k) - sys.energies(0);
        res.weight[k - 1] = u.squaredNorm();
        res.u[k - 1] = u;
    }
    return res;
}

Eigen::Matrix3cd smatrix_at(const resonance_set& res, double gamma, double drive_ghz) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw config_error("smatrix: gamma must be finite and > 0");
    if (!std::isfinite(drive_ghz)) throw config_error("smatrix: drive frequency must be finite");

    Eigen::Matrix3cd s = Eigen::Matrix3cd::Identity();
    for (std::size_t k = 0; k < res.freq.size(); ++k) {
        const std::complex<double> denom(0.5 * gamma * res.weight[k],
                                         res.freq[k] - drive_ghz);
        s -= (gamma / denom) * (res.u[k] * res.u[k].adjoint());
    }
    return s;
}

Eigen::Matrix3cd smatrix(const device_params& params, const bias_point& bias,
                         const sector_config& sector, const charge_basis& basis,
                         double drive_ghz, int k_states) {
    return smatrix_at(resonances(params, bias, sector, basis, k_states), params.gamma,
                      drive_ghz);
}

Eigen::Matrix3cd averaged_smatrix(const device_params& params, const bias_point& bias,
                                  const std::vector<sector_config>& sectors,
                                  const charge_basis& basis, double drive_ghz, int k_states) {
    if (sectors.empty()) throw config_error("averaged_smatrix: sector list must be non-empty");
    Eigen::Matrix3cd sum = Eigen::Matrix3cd::Zero();
    for (const auto& sector : sectors)
        sum += smatrix(params, bias, sector, basis, drive_ghz, k_states);
    return sum / static_cast<double>(sectors.size());
}

Eigen::Matrix3cd ideal_circulator(circulation dir) {
    Eigen::Matrix3cd s = Eigen::Matrix3cd::Zero();
    // cw: 1 -> 2 -> 3 -> 1
    s(1, 0) = 1.0;
    s(2, 1) = 1.0;
    s(0, 2) = 1.0;
    if (dir == circulation::ccw) return s.transpose().eval();
    return s;
}

Eigen::Matrix3cd gyrator() {
    Eigen::Matrix3cd s = Eigen::Matrix3cd::Zero();
    s(0, 1) = 1.0;
    s(1, 0) = -1.0;
    s(2, 2) = 1.0;
    return s;
}

double nonreciprocity(const Eigen::Matrix3cd& s) {
    return (s - s.transpose().eval()).norm() / std::sqrt(8.0);
}

double fidelity(const Eigen::Matrix3cd& s, circulation dir) {
    const Eigen::Matrix3cd ideal = ideal_circulator(dir);
    double sum = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            sum += std::abs(std::abs(s(i, j)) - std::abs(ideal(i, j)));
    return 1.0 - sum / 8.0;
}

circulation_score score(const Eigen::Matrix3cd& s) {
    return {nonreciprocity(s), fidelity(s, circulation::cw), fidelity(s, circulation::ccw)};
}

}  // namespace jring
