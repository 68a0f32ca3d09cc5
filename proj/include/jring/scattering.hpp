#pragma once

#include <Eigen/Dense>
#include <vector>

#include "jring/spectrum.hpp"

namespace jring {

struct scattering_matrix {
    Eigen::Matrix3cd s = Eigen::Matrix3cd::Identity();
    double freq_ghz = 0.0;
};

// Per-transition data entering the rank-one resonance sum: frequency,
// coupling weight sum_i |<0|n_i|k>|^2 and the port vector u_i = <0|n_i|k>.
struct resonance_set {
    std::vector<double> freq;
    std::vector<double> weight;
    std::vector<Eigen::Vector3cd> u;
};

resonance_set resonances(const device_params& params, const bias_point& bias,
                         const sector_config& sector, const charge_basis& basis, int k_states);

Eigen::Matrix3cd smatrix_at(const resonance_set& res, double gamma, double drive_ghz);

Eigen::Matrix3cd smatrix(const device_params& params, const bias_point& bias,
                         const sector_config& sector, const charge_basis& basis,
                         double drive_ghz, int k_states);

// Entrywise equal-weight complex mean over sectors.
Eigen::Matrix3cd averaged_smatrix(const device_params& params, const bias_point& bias,
                                  const std::vector<sector_config>& sectors,
                                  const charge_basis& basis, double drive_ghz, int k_states);

enum class circulation { cw, ccw };

Eigen::Matrix3cd ideal_circulator(circulation dir);
Eigen::Matrix3cd gyrator();

// ||S - S^T||_F / sqrt(8)
double nonreciprocity(const Eigen::Matrix3cd& s);

// 1 - sum_ij ||S_ij| - |S_ij^ideal|| / 8
double fidelity(const Eigen::Matrix3cd& s, circulation dir);

struct circulation_score {
    double nonreciprocity = 0.0;
    double fidelity_cw = 0.0;
    double fidelity_ccw = 0.0;
};

circulation_score score(const Eigen::Matrix3cd& s);

}  // namespace jring
