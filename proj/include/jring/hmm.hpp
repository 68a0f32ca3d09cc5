#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace jring {

// Row-major so sample rows are contiguous for the batch kernels.
using sample_matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct time_series {
    double dt = 30e-6;      // seconds
    sample_matrix x;        // samples x dim; dim = 18 for flattened S matrices
};

struct hmm_model {
    Eigen::VectorXd initial;
    Eigen::MatrixXd trans;               // row-stochastic
    std::vector<Eigen::VectorXd> mean;
    std::vector<Eigen::MatrixXd> cov;    // symmetric positive-definite

    int n_states() const { return static_cast<int>(mean.size()); }
};

void validate(const hmm_model& m);

// 1e-9 of the mean per-dimension data variance (small absolute floor for
// degenerate data).
double covariance_floor(const time_series& series);

// k-means++ clustering into emission statistics; transitions start with a
// heavy (0.99) diagonal. Deterministic given the seed; empty clusters trigger
// bounded re-seeding.
hmm_model kmeans_init(const time_series& series, int k, std::uint64_t seed);

struct train_report {
    std::vector<double> loglik;   // log-likelihood per visited parameter set
    int iterations = 0;           // EM updates applied
    bool converged = false;
};

// Scaled forward-backward EM. Throws numerical_error if an iteration lowers
// the log-likelihood by more than 1e-8.
hmm_model baum_welch(const time_series& series, const hmm_model& init, double tol,
                     int max_iter, train_report* report = nullptr);

double log_likelihood(const hmm_model& model, const time_series& series);

// Maximum a posteriori state path; ties break toward the lower state index.
std::vector<int> viterbi(const hmm_model& model, const time_series& series);

struct dwell_stats_result {
    std::vector<std::vector<double>> dwell_seconds;   // per state, censored runs dropped
    std::vector<double> tau_fit;      // exponential-fit decay time; NaN when unreliable
    std::vector<double> tau_model;    // dt / (1 - P_ii); NaN when P_ii >= 1
    std::vector<bool> reliable;       // tau_fit backed by >= 10 complete dwells
};

// Run-length dwell statistics of a decoded path. P_ii comes from trans_diag
// when given, otherwise from the path's empirical self-transition fraction.
dwell_stats_result dwell_stats(const std::vector<int>& path, double dt, int n_states,
                               const Eigen::VectorXd* trans_diag = nullptr);

// Samples a hidden path and Gaussian emissions; deterministic given the seed.
std::pair<time_series, std::vector<int>> simulate(const hmm_model& model, int n_samples,
                                                  std::uint64_t seed, double dt = 30e-6);

// new state i = old state perm[i]
hmm_model permute_states(const hmm_model& model, const std::vector<int>& perm);

}  // namespace jring
