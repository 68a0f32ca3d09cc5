#pragma once

#include <Eigen/Dense>

namespace jring {

// Diagonal input/output line gains. Only the products b_i * a_j are
// identifiable from M = B S A; the gauge is fixed so a is real-positive
// with a_1 = 1 and diag(S) is real-positive.
struct chain_model {
    Eigen::Vector3cd a = Eigen::Vector3cd::Ones();
    Eigen::Vector3cd b = Eigen::Vector3cd::Ones();

    Eigen::Matrix3cd product() const;   // p_ij = b_i * a_j
};

struct calibration_options {
    double reg_weight = 1e-2;      // identity pull, fraction of the data term
    double reg_decay = 0.9;        // per-iteration annealing of the pull
    int als_iters = 150;
    int polish_iters = 60;
    double fail_threshold = 1e-6;  // relative residual marking model mismatch
};

struct calibration_result {
    chain_model chain;
    Eigen::Matrix3cd s_off = Eigen::Matrix3cd::Identity();
    double residual = 0.0;   // ||M - B S A||_F / ||M||_F
    bool ok = false;
};

// Nearest unitary factor of m (SVD polar projection).
Eigen::Matrix3cd polar_unitary(const Eigen::Matrix3cd& m);

// Finds diagonal gains and a unitary S_off minimizing ||M - B S A|| with an
// annealed pull of S toward the identity, then polishes the gains against the
// unitarity residuals of M ./ P.
calibration_result solve_off_resonant(const Eigen::Matrix3cd& m_off,
                                      const calibration_options& opt = {});

// s_ij = m_on_ij / (b_i * a_j)
Eigen::Matrix3cd apply(const Eigen::Matrix3cd& m_on, const chain_model& chain);

}  // namespace jring
