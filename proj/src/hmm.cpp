#include "jring/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "jring/device.hpp"
#include "jring/kernels.hpp"
#include "jring/rng.hpp"

namespace jring {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kNegInf = -1e300;

using rmatrix = sample_matrix;

void check_series(const time_series& series) {
    if (series.x.rows() < 1) throw config_error("time series must be non-empty");
    if (!(series.dt > 0.0)) throw config_error("time series dt must be > 0");
}

Eigen::MatrixXd log_emissions(const hmm_model& model, const time_series& series) {
    const int n = static_cast<int>(series.x.rows());
    const int d = static_cast<int>(series.x.cols());
    const int k = model.n_states();
    if (d != static_cast<int>(model.mean[0].size()))
        throw config_error("hmm: model dimension does not match series");
    Eigen::MatrixXd logb(n, k);
    std::vector<double> quad(static_cast<std::size_t>(n));
    for (int s = 0; s < k; ++s) {
        Eigen::LLT<Eigen::MatrixXd> llt(model.cov[s]);
        if (llt.info() != Eigen::Success)
            throw numerical_error("emission covariance is not positive-definite");
        const Eigen::MatrixXd l = llt.matrixL();
        const rmatrix w_inv =
            l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
        const double log_det_l = l.diagonal().array().log().sum();
        kernels::quadform_batch(series.x.data(), n, d, model.mean[s].data(), w_inv.data(),
                                quad.data());
        const double offset = -0.5 * d * kLog2Pi - log_det_l;
        for (int t = 0; t < n; ++t) logb(t, s) = -0.5 * quad[t] + offset;
    }
    return logb;
}

struct forward_backward_result {
    Eigen::MatrixXd gamma;    // n x k posteriors
    Eigen::MatrixXd xi_sum;   // k x k expected transition counts
    double loglik = 0.0;
};

double forward_only(const hmm_model& model, const Eigen::MatrixXd& logb) {
    const int n = static_cast<int>(logb.rows());
    const int k = model.n_states();
    Eigen::VectorXd max_log = logb.rowwise().maxCoeff();
    Eigen::VectorXd alpha(k), next(k);
    double loglik = max_log.sum();
    for (int s = 0; s < k; ++s)
        alpha(s) = model.initial(s) * std::exp(logb(0, s) - max_log(0));
    double c = alpha.sum();
    if (!(c > 0.0)) throw numerical_error("forward pass underflow");
    alpha /= c;
    loglik += std::log(c);
    for (int t = 1; t < n; ++t) {
        next.noalias() = model.trans.transpose() * alpha;
        for (int s = 0; s < k; ++s) next(s) *= std::exp(logb(t, s) - max_log(t));
        c = next.sum();
        if (!(c > 0.0)) throw numerical_error("forward pass underflow");
        alpha = next / c;
        loglik += std::log(c);
    }
    return loglik;
}

forward_backward_result forward_backward(const hmm_model& model, const Eigen::MatrixXd& logb) {
    const int n = static_cast<int>(logb.rows());
    const int k = model.n_states();
    const Eigen::VectorXd max_log = logb.rowwise().maxCoeff();
    Eigen::MatrixXd b(n, k);
    for (int t = 0; t < n; ++t)
        for (int s = 0; s < k; ++s) b(t, s) = std::exp(logb(t, s) - max_log(t));

    Eigen::MatrixXd alpha(n, k);
    Eigen::VectorXd scale(n);
    alpha.row(0) = model.initial.transpose().cwiseProduct(b.row(0));
    scale(0) = alpha.row(0).sum();
    if (!(scale(0) > 0.0)) throw numerical_error("forward pass underflow");
    alpha.row(0) /= scale(0);
    for (int t = 1; t < n; ++t) {
        alpha.row(t).noalias() = alpha.row(t - 1) * model.trans;
        alpha.row(t) = alpha.row(t).cwiseProduct(b.row(t));
        scale(t) = alpha.row(t).sum();
        if (!(scale(t) > 0.0)) throw numerical_error("forward pass underflow");
        alpha.row(t) /= scale(t);
    }

    Eigen::MatrixXd beta(n, k);
    beta.row(n - 1).setOnes();
    for (int t = n - 2; t >= 0; --t) {
        const Eigen::RowVectorXd weighted = b.row(t + 1).cwiseProduct(beta.row(t + 1));
        beta.row(t).noalias() = weighted * model.trans.transpose();
        beta.row(t) /= scale(t + 1);
    }

    forward_backward_result out;
    out.gamma = alpha.cwiseProduct(beta);
    for (int t = 0; t < n; ++t) {
        const double norm = out.gamma.row(t).sum();
        if (norm > 0.0) out.gamma.row(t) /= norm;
    }
    out.xi_sum = Eigen::MatrixXd::Zero(k, k);
    for (int t = 0; t + 1 < n; ++t) {
        const Eigen::RowVectorXd weighted = b.row(t + 1).cwiseProduct(beta.row(t + 1));
        out.xi_sum.noalias() +=
            (alpha.row(t).transpose() * weighted).cwiseProduct(model.trans) / scale(t + 1);
    }
    out.loglik = max_log.sum() + scale.array().log().sum();
    return out;
}

Eigen::MatrixXd floored_covariance(Eigen::MatrixXd cov, double floor) {
    cov = 0.5 * (cov + cov.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw numerical_error("covariance eigensolve failed");
    const Eigen::VectorXd vals = es.eigenvalues().cwiseMax(floor);
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

void validate(const hmm_model& m) {
    const int k = m.n_states();
    if (k < 1) throw config_error("hmm: at least one state required");
    if (m.initial.size() != k || m.trans.rows() != k || m.trans.cols() != k ||
        static_cast<int>(m.cov.size()) != k)
        throw config_error("hmm: inconsistent model dimensions");
    if (std::abs(m.initial.sum() - 1.0) > 1e-12)
        throw config_error("hmm: initial probabilities must sum to 1");
    if (m.initial.minCoeff() < 0.0) throw config_error("hmm: negative initial probability");
    for (int i = 0; i < k; ++i) {
        if (std::abs(m.trans.row(i).sum() - 1.0) > 1e-12)
            throw config_error("hmm: transition rows must sum to 1");
        if (m.trans.row(i).minCoeff() < 0.0)
            throw config_error("hmm: negative transition probability");
    }
    const auto d = m.mean[0].size();
    for (int s = 0; s < k; ++s) {
        if (m.mean[s].size() != d || m.cov[s].rows() != d || m.cov[s].cols() != d)
            throw config_error("hmm: inconsistent emission dimensions");
        Eigen::LLT<Eigen::MatrixXd> llt(m.cov[s]);
        if (llt.info() != Eigen::Success)
            throw config_error("hmm: emission covariance must be positive-definite");
    }
}

double covariance_floor(const time_series& series) {
    check_series(series);
    const Eigen::RowVectorXd mean = series.x.colwise().mean();
    const double mean_var =
        (series.x.rowwise() - mean).array().square().colwise().mean().mean();
    return std::max(1e-9 * mean_var, 1e-12);
}

hmm_model kmeans_init(const time_series& series, int k, std::uint64_t seed) {
    check_series(series);
    const int n = static_cast<int>(series.x.rows());
    const int d = static_cast<int>(series.x.cols());
    if (k < 1) throw config_error("kmeans: k must be >= 1");
    if (n < k) throw config_error("kmeans: series shorter than k");
    const double floor = covariance_floor(series);

    // several independent k-means++ runs, keeping the lowest inertia; a single
    // draw occasionally splits one cluster and merges two others
    constexpr int kMaxAttempts = 8;
    constexpr int kRestarts = 4;
    hmm_model best;
    double best_inertia = std::numeric_limits<double>::infinity();
    int completed = 0;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        rng64 rng(seed + 1000000007ULL * static_cast<std::uint64_t>(attempt));

        rmatrix centroids(k, d);
        centroids.row(0) = series.x.row(static_cast<int>(rng.integer(n)));
        std::vector<double> best_d2(static_cast<std::size_t>(n),
                                    std::numeric_limits<double>::infinity());
        std::vector<int> scratch_idx(static_cast<std::size_t>(n));
        std::vector<double> scratch_d2(static_cast<std::size_t>(n));
        for (int c = 1; c < k; ++c) {
            kernels::nearest_centroid(series.x.data(), n, d, centroids.row(c - 1).data(), 1,
                                      scratch_idx.data(), scratch_d2.data());
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                best_d2[i] = std::min(best_d2[i], scratch_d2[i]);
                total += best_d2[i];
            }
            int pick = n - 1;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double run = 0.0;
                for (int i = 0; i < n; ++i) {
                    run += best_d2[i];
                    if (run >= target) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<int>(rng.integer(n));
            }
            centroids.row(c) = series.x.row(pick);
        }

        std::vector<int> assign(static_cast<std::size_t>(n), -1);
        std::vector<int> counts(static_cast<std::size_t>(k));
        bool degenerate = false;
        for (int round = 0; round < 100; ++round) {
            kernels::nearest_centroid(series.x.data(), n, d, centroids.data(), k,
                                      scratch_idx.data(), scratch_d2.data());
            if (std::equal(assign.begin(), assign.end(), scratch_idx.begin())) break;
            assign.assign(scratch_idx.begin(), scratch_idx.end());
            std::fill(counts.begin(), counts.end(), 0);
            rmatrix sums = rmatrix::Zero(k, d);
            for (int i = 0; i < n; ++i) {
                sums.row(assign[i]) += series.x.row(i);
                ++counts[assign[i]];
            }
            degenerate = false;
            for (int c = 0; c < k; ++c) {
                if (counts[c] == 0) {
                    degenerate = true;
                    break;
                }
                centroids.row(c) = sums.row(c) / counts[c];
            }
            if (degenerate) break;
        }
        if (degenerate) continue;

        kernels::nearest_centroid(series.x.data(), n, d, centroids.data(), k,
                                  scratch_idx.data(), scratch_d2.data());
        std::fill(counts.begin(), counts.end(), 0);
        double inertia = 0.0;
        for (int i = 0; i < n; ++i) {
            ++counts[scratch_idx[i]];
            inertia += scratch_d2[i];
        }
        if (std::any_of(counts.begin(), counts.end(), [](int c) { return c == 0; })) continue;
        ++completed;
        if (inertia >= best_inertia) {
            if (completed >= kRestarts) break;
            continue;
        }

        hmm_model model;
        model.initial = Eigen::VectorXd::Constant(k, 1.0 / k);
        model.trans = k == 1 ? Eigen::MatrixXd::Ones(1, 1)
                             : Eigen::MatrixXd::Constant(k, k, 0.01 / (k - 1));
        if (k > 1) model.trans.diagonal().setConstant(0.99);
        model.mean.resize(k);
        model.cov.resize(k);
        for (int c = 0; c < k; ++c) {
            model.mean[c] = centroids.row(c).transpose();
            Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
            for (int i = 0; i < n; ++i) {
                if (scratch_idx[i] != c) continue;
                const Eigen::VectorXd diff =
                    series.x.row(i).transpose() - model.mean[c];
                cov.noalias() += diff * diff.transpose();
            }
            model.cov[c] = floored_covariance(cov / counts[c], floor);
        }
        best = std::move(model);
        best_inertia = inertia;
        if (completed >= kRestarts) break;
    }
    if (completed == 0) throw numerical_error("kmeans: empty clusters persisted across re-seeding");
    return best;
}

hmm_model baum_welch(const time_series& series, const hmm_model& init, double tol,
                     int max_iter, train_report* report) {
    check_series(series);
    validate(init);
    if (init.mean[0].size() != series.x.cols())
        throw config_error("baum_welch: model dimension does not match series");
    if (max_iter < 0) throw config_error("baum_welch: max_iter must be >= 0");

    const int d = static_cast<int>(series.x.cols());
    const int k = init.n_states();
    const double floor = covariance_floor(series);

    hmm_model model = init;
    train_report local;
    train_report& rep = report ? *report : local;
    rep = {};

    double prev_ll = -std::numeric_limits<double>::infinity();
    while (true) {
        const Eigen::MatrixXd logb = log_emissions(model, series);
        const forward_backward_result fb = forward_backward(model, logb);
        rep.loglik.push_back(fb.loglik);
        if (rep.loglik.size() > 1 && fb.loglik < prev_ll - 1e-8)
            throw numerical_error("baum_welch: log-likelihood decreased");
        if (rep.iterations > 0 &&
            (fb.loglik - prev_ll) / (1.0 + std::abs(fb.loglik)) < tol) {
            rep.converged = true;
            break;
        }
        if (rep.iterations >= max_iter) break;
        prev_ll = fb.loglik;

        const double init_norm = fb.gamma.row(0).sum();
        if (init_norm > 0.0) model.initial = fb.gamma.row(0).transpose() / init_norm;
        for (int i = 0; i < k; ++i) {
            const double row_sum = fb.xi_sum.row(i).sum();
            if (row_sum > 1e-300) model.trans.row(i) = fb.xi_sum.row(i) / row_sum;
        }
        for (int s = 0; s < k; ++s) {
            const double weight = fb.gamma.col(s).sum();
            if (weight < 1e-10) continue;
            model.mean[s] = series.x.transpose() * fb.gamma.col(s) / weight;
            const rmatrix centered = series.x.rowwise() - model.mean[s].transpose();
            Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
            cov.noalias() =
                centered.transpose() *
                (centered.array().colwise() * fb.gamma.col(s).array()).matrix();
            model.cov[s] = floored_covariance(cov / weight, floor);
        }
        ++rep.iterations;
    }
    return model;
}

double log_likelihood(const hmm_model& model, const time_series& series) {
    check_series(series);
    validate(model);
    return forward_only(model, log_emissions(model, series));
}

std::vector<int> viterbi(const hmm_model& model, const time_series& series) {
    check_series(series);
    validate(model);
    const int n = static_cast<int>(series.x.rows());
    const int k = model.n_states();
    const Eigen::MatrixXd logb = log_emissions(model, series);

    Eigen::MatrixXd log_trans(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            log_trans(i, j) = model.trans(i, j) > 0.0 ? std::log(model.trans(i, j)) : kNegInf;

    Eigen::VectorXd delta(k), next(k);
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> back(n, k);
    for (int s = 0; s < k; ++s)
        delta(s) = (model.initial(s) > 0.0 ? std::log(model.initial(s)) : kNegInf) + logb(0, s);
    for (int t = 1; t < n; ++t) {
        for (int s = 0; s < k; ++s) {
            double best = delta(0) + log_trans(0, s);
            int best_j = 0;
            for (int j = 1; j < k; ++j) {
                const double cand = delta(j) + log_trans(j, s);
                if (cand > best) {
                    best = cand;
                    best_j = j;
                }
            }
            next(s) = best + logb(t, s);
            back(t, s) = best_j;
        }
        delta = next;
    }

    std::vector<int> path(static_cast<std::size_t>(n));
    int state = 0;
    for (int s = 1; s < k; ++s)
        if (delta(s) > delta(state)) state = s;
    path[n - 1] = state;
    for (int t = n - 1; t > 0; --t) {
        state = back(t, state);
        path[t - 1] = state;
    }
    return path;
}

dwell_stats_result dwell_stats(const std::vector<int>& path, double dt, int n_states,
                               const Eigen::VectorXd* trans_diag) {
    if (path.empty()) throw config_error("dwell_stats: empty path");
    if (!(dt > 0.0)) throw config_error("dwell_stats: dt must be > 0");
    if (trans_diag && trans_diag->size() != n_states)
        throw config_error("dwell_stats: trans_diag size mismatch");

    struct run {
        int state;
        int length;
    };
    std::vector<run> runs;
    for (int v : path) {
        if (v < 0 || v >= n_states) throw config_error("dwell_stats: state out of range");
        if (!runs.empty() && runs.back().state == v)
            ++runs.back().length;
        else
            runs.push_back({v, 1});
    }

    dwell_stats_result out;
    out.dwell_seconds.resize(n_states);
    out.tau_fit.assign(n_states, kNan);
    out.tau_model.assign(n_states, kNan);
    out.reliable.assign(n_states, false);

    std::vector<std::vector<int>> lengths(static_cast<std::size_t>(n_states));
    for (std::size_t r = 1; r + 1 < runs.size(); ++r)
        lengths[runs[r].state].push_back(runs[r].length);
    for (int s = 0; s < n_states; ++s)
        for (int len : lengths[s]) out.dwell_seconds[s].push_back(len * dt);

    std::vector<long> self_count(static_cast<std::size_t>(n_states), 0);
    std::vector<long> from_count(static_cast<std::size_t>(n_states), 0);
    for (std::size_t t = 0; t + 1 < path.size(); ++t) {
        ++from_count[path[t]];
        if (path[t + 1] == path[t]) ++self_count[path[t]];
    }

    for (int s = 0; s < n_states; ++s) {
        double p_ii = kNan;
        if (trans_diag)
            p_ii = (*trans_diag)(s);
        else if (from_count[s] > 0)
            p_ii = static_cast<double>(self_count[s]) / static_cast<double>(from_count[s]);
        if (std::isfinite(p_ii) && p_ii < 1.0) out.tau_model[s] = dt / (1.0 - p_ii);

        const auto& lens = lengths[s];
        if (static_cast<int>(lens.size()) < 10) continue;
        const int max_len = *std::max_element(lens.begin(), lens.end());
        std::vector<int> counts(static_cast<std::size_t>(max_len) + 1, 0);
        for (int len : lens) ++counts[len];

        // count-weighted least squares on the log histogram, bins with >= 5 counts
        double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        int bins = 0;
        for (int m = 1; m <= max_len; ++m) {
            if (counts[m] < 5) continue;
            const double wgt = counts[m];
            const double t_sec = m * dt;
            const double log_count = std::log(wgt);
            sw += wgt;
            sx += wgt * t_sec;
            sy += wgt * log_count;
            sxx += wgt * t_sec * t_sec;
            sxy += wgt * t_sec * log_count;
            ++bins;
        }
        if (bins < 2) continue;
        const double denom = sw * sxx - sx * sx;
        if (denom <= 0.0) continue;
        const double slope = (sw * sxy - sx * sy) / denom;
        if (!(slope < 0.0)) continue;
        out.tau_fit[s] = -1.0 / slope;
        out.reliable[s] = true;
    }
    return out;
}

std::pair<time_series, std::vector<int>> simulate(const hmm_model& model, int n_samples,
                                                  std::uint64_t seed, double dt) {
    validate(model);
    if (n_samples < 1) throw config_error("simulate: n_samples must be >= 1");
    const int k = model.n_states();
    const int d = static_cast<int>(model.mean[0].size());

    std::vector<Eigen::MatrixXd> chol(static_cast<std::size_t>(k));
    for (int s = 0; s < k; ++s) {
        Eigen::LLT<Eigen::MatrixXd> llt(model.cov[s]);
        if (llt.info() != Eigen::Success)
            throw numerical_error("simulate: covariance not positive-definite");
        chol[s] = llt.matrixL();
    }

    rng64 rng(seed);
    auto draw = [&](const Eigen::VectorXd& probs) {
        const double r = rng.uniform();
        double run = 0.0;
        for (int s = 0; s < static_cast<int>(probs.size()); ++s) {
            run += probs(s);
            if (r < run) return s;
        }
        return static_cast<int>(probs.size()) - 1;
    };

    time_series series;
    series.dt = dt;
    series.x.resize(n_samples, d);
    std::vector<int> labels(static_cast<std::size_t>(n_samples));
    Eigen::VectorXd z(d);
    for (int t = 0; t < n_samples; ++t) {
        labels[t] = t == 0 ? draw(model.initial)
                           : draw(model.trans.row(labels[t - 1]).transpose());
        for (int j = 0; j < d; ++j) z(j) = rng.normal();
        series.x.row(t) =
            (model.mean[labels[t]] + chol[labels[t]] * z).transpose();
    }
    return {std::move(series), std::move(labels)};
}

hmm_model permute_states(const hmm_model& model, const std::vector<int>& perm) {
    const int k = model.n_states();
    if (static_cast<int>(perm.size()) != k)
        throw config_error("permute_states: permutation size mismatch");
    hmm_model out;
    out.initial.resize(k);
    out.trans.resize(k, k);
    out.mean.resize(k);
    out.cov.resize(k);
    for (int i = 0; i < k; ++i) {
        out.initial(i) = model.initial(perm[i]);
        out.mean[i] = model.mean[perm[i]];
        out.cov[i] = model.cov[perm[i]];
        for (int j = 0; j < k; ++j) out.trans(i, j) = model.trans(perm[i], perm[j]);
    }
    return out;
}

}  // namespace jring
