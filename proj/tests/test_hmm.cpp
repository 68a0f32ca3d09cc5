#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "jring/device.hpp"
#include "jring/hmm.hpp"
#include "jring/rng.hpp"

using namespace jring;

namespace {

time_series random_series(rng64& rng, int n, int d) {
    time_series s;
    s.x.resize(n, d);
    for (int t = 0; t < n; ++t)
        for (int j = 0; j < d; ++j) s.x(t, j) = rng.normal();
    return s;
}

// Four states in 18 dimensions with the closest pair of means `separation`
// standard deviations apart, heavy-diagonal switching.
hmm_model four_state_truth(double separation, double diag) {
    rng64 rng(2024);
    hmm_model m;
    const int k = 4, d = 18;
    m.initial = Eigen::VectorXd::Constant(k, 1.0 / k);
    m.trans = Eigen::MatrixXd::Constant(k, k, (1.0 - diag) / (k - 1));
    m.trans.diagonal().setConstant(diag);
    for (int s = 0; s < k; ++s) {
        Eigen::VectorXd mu(d);
        for (int j = 0; j < d; ++j) mu(j) = 2.0 * rng.uniform() - 1.0;
        m.mean.push_back(mu);
    }
    double min_dist = 1e300;
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b)
            min_dist = std::min(min_dist, (m.mean[a] - m.mean[b]).norm());
    const double sigma = min_dist / separation;
    for (int s = 0; s < k; ++s)
        m.cov.push_back(sigma * sigma * Eigen::MatrixXd::Identity(d, d));
    return m;
}

int nearest_state(const hmm_model& m, const Eigen::VectorXd& v) {
    int best = 0;
    double best_d = (m.mean[0] - v).norm();
    for (int s = 1; s < m.n_states(); ++s) {
        const double d = (m.mean[s] - v).norm();
        if (d < best_d) {
            best_d = d;
            best = s;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("one cluster reduces to global statistics") {
    rng64 rng(3);
    const auto series = random_series(rng, 300, 5);
    const auto model = kmeans_init(series, 1, 77);

    REQUIRE(model.n_states() == 1);
    CHECK(model.initial(0) == 1.0);
    CHECK(model.trans(0, 0) == 1.0);

    const Eigen::VectorXd mean = series.x.colwise().mean();
    CHECK((model.mean[0] - mean).norm() < 1e-12);

    Eigen::MatrixXd centered = series.x;
    centered.rowwise() -= mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / double(series.x.rows());
    CHECK((model.cov[0] - cov).norm() / cov.norm() < 1e-6);

    CHECK_NOTHROW(validate(model));
}

TEST_CASE("separated clusters are found with matching spreads") {
    const auto truth = four_state_truth(12.0, 0.9);
    const auto [series, path] = simulate(truth, 4000, 404);

    const auto model = kmeans_init(series, 4, 11);
    REQUIRE(model.n_states() == 4);
    CHECK_NOTHROW(validate(model));

    const double sigma = std::sqrt(truth.cov[0](0, 0));
    const double stat_err = sigma * std::sqrt(18.0 / 1000.0);   // ~n/4 samples per state
    std::vector<bool> used(4, false);
    for (int s = 0; s < 4; ++s) {
        const int match = nearest_state(truth, model.mean[s]);
        CHECK_FALSE(used[match]);
        used[match] = true;
        CHECK((model.mean[s] - truth.mean[match]).norm() < 6.0 * stat_err);
        const double var_ratio =
            model.cov[s].diagonal().mean() / truth.cov[match].diagonal().mean();
        CHECK(var_ratio == doctest::Approx(1.0).epsilon(0.2));
    }

    CHECK(model.trans.diagonal().minCoeff() == doctest::Approx(0.99));
    for (int i = 0; i < 4; ++i)
        CHECK(model.trans.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a constant series engages the covariance floor") {
    time_series series;
    series.x.resize(40, 3);
    for (int t = 0; t < 40; ++t) series.x.row(t) << 0.2, -0.7, 1.1;

    const double floor = covariance_floor(series);
    CHECK(floor > 0.0);

    const auto model = kmeans_init(series, 1, 1);
    CHECK((model.cov[0] - floor * Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-6 * floor);
    CHECK_NOTHROW(validate(model));
}

TEST_CASE("single-state training matches closed-form Gaussian fit") {
    rng64 rng(9);
    const auto series = random_series(rng, 500, 4);
    const auto init = kmeans_init(series, 1, 5);

    train_report report;
    const auto model = baum_welch(series, init, 1e-10, 50, &report);
    CHECK(report.converged);

    const Eigen::VectorXd mean = series.x.colwise().mean();
    CHECK((model.mean[0] - mean).norm() < 1e-10);

    Eigen::MatrixXd centered = series.x;
    centered.rowwise() -= mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / double(series.x.rows());
    CHECK((model.cov[0] - cov).norm() / cov.norm() < 1e-8);

    // direct Gaussian log-density sum
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    const Eigen::MatrixXd l = llt.matrixL();
    double logdet = 0.0;
    for (int j = 0; j < 4; ++j) logdet += 2.0 * std::log(l(j, j));
    double direct = 0.0;
    for (int t = 0; t < 500; ++t) {
        const Eigen::VectorXd r = llt.matrixL().solve(series.x.row(t).transpose() - mean);
        direct += -0.5 * (4.0 * std::log(2.0 * M_PI) + logdet + r.squaredNorm());
    }
    CHECK(log_likelihood(model, series) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("a four-state switching process is recovered") {
    const auto truth = four_state_truth(12.0, 0.9);
    const auto [series, path] = simulate(truth, 6000, 12);

    const auto init = kmeans_init(series, 4, 21);
    train_report report;
    const auto model = baum_welch(series, init, 1e-8, 300, &report);
    CHECK(report.converged);
    for (std::size_t i = 1; i < report.loglik.size(); ++i)
        CHECK(report.loglik[i] >= report.loglik[i - 1] - 1e-8);

    // align trained states to the generator's labels
    std::vector<int> to_truth(4);
    for (int s = 0; s < 4; ++s) to_truth[s] = nearest_state(truth, model.mean[s]);

    const double sigma = std::sqrt(truth.cov[0](0, 0));
    for (int s = 0; s < 4; ++s) {
        CHECK((model.mean[s] - truth.mean[to_truth[s]]).norm() <
              6.0 * sigma * std::sqrt(18.0 / 1500.0));
        CHECK(model.trans(s, s) == doctest::Approx(0.9).epsilon(0.025));
    }

    const auto decoded = viterbi(model, series);
    REQUIRE(decoded.size() == path.size());
    long hits = 0;
    for (std::size_t t = 0; t < path.size(); ++t)
        if (to_truth[decoded[t]] == path[t]) ++hits;
    CHECK(double(hits) / double(path.size()) >= 0.99);
}

TEST_CASE("state relabeling is a symmetry of the model") {
    const auto truth = four_state_truth(10.0, 0.85);
    const auto [series, path] = simulate(truth, 400, 33);

    const std::vector<int> perm{2, 0, 3, 1};
    const auto shuffled = permute_states(truth, perm);
    CHECK_NOTHROW(validate(shuffled));

    for (int i = 0; i < 4; ++i) {
        CHECK(shuffled.initial(i) == truth.initial(perm[i]));
        CHECK((shuffled.mean[i] - truth.mean[perm[i]]).norm() == 0.0);
        for (int j = 0; j < 4; ++j) CHECK(shuffled.trans(i, j) == truth.trans(perm[i], perm[j]));
    }

    CHECK(log_likelihood(shuffled, series) ==
          doctest::Approx(log_likelihood(truth, series)).epsilon(1e-12));

    const auto base_path = viterbi(truth, series);
    const auto new_path = viterbi(shuffled, series);
    for (std::size_t t = 0; t < base_path.size(); ++t)
        CHECK(perm[new_path[t]] == base_path[t]);
}

TEST_CASE("dwell statistics drop censored runs and follow the chain") {
    std::vector<int> path;
    auto append = [&path](int state, int n) { path.insert(path.end(), n, state); };
    append(0, 5);
    append(1, 3);
    append(0, 7);
    append(1, 9);
    append(0, 2);

    const double dt = 30e-6;
    const auto stats = dwell_stats(path, dt, 2);
    REQUIRE(stats.dwell_seconds.size() == 2);
    REQUIRE(stats.dwell_seconds[0].size() == 1);
    CHECK(stats.dwell_seconds[0][0] == doctest::Approx(7 * dt));
    REQUIRE(stats.dwell_seconds[1].size() == 2);
    CHECK(stats.dwell_seconds[1][0] == doctest::Approx(3 * dt));
    CHECK(stats.dwell_seconds[1][1] == doctest::Approx(9 * dt));

    CHECK_FALSE(stats.reliable[0]);
    CHECK(std::isnan(stats.tau_fit[0]));

    Eigen::VectorXd diag(2);
    diag << 0.9, 0.75;
    const auto pinned = dwell_stats(path, dt, 2, &diag);
    CHECK(pinned.tau_model[0] == doctest::Approx(dt / 0.1).epsilon(1e-12));
    CHECK(pinned.tau_model[1] == doctest::Approx(dt / 0.25).epsilon(1e-12));

    Eigen::VectorXd frozen(2);
    frozen << 1.0, 0.5;
    const auto capped = dwell_stats(path, dt, 2, &frozen);
    CHECK(std::isnan(capped.tau_model[0]));

    const std::vector<int> constant(200, 0);
    const auto flat = dwell_stats(constant, dt, 2);
    CHECK(flat.dwell_seconds[0].empty());
    CHECK_FALSE(flat.reliable[0]);
    CHECK(std::isnan(flat.tau_fit[0]));
    CHECK(std::isnan(flat.tau_model[0]));   // empirical P_00 = 1
}

TEST_CASE("fitted dwell times approach the generator's decay") {
    const double diag = 0.9, dt = 30e-6;
    const auto truth = four_state_truth(12.0, diag);
    const auto [series, path] = simulate(truth, 60000, 77);

    Eigen::VectorXd trans_diag = truth.trans.diagonal();
    const auto stats = dwell_stats(path, dt, 4, &trans_diag);
    const double tau_geo = -dt / std::log(diag);   // what a log-histogram slope measures
    for (int s = 0; s < 4; ++s) {
        CHECK(stats.reliable[s]);
        CHECK(stats.dwell_seconds[s].size() > 500);
        CHECK(stats.tau_model[s] == doctest::Approx(dt / (1.0 - diag)).epsilon(1e-12));
        CHECK(stats.tau_fit[s] == doctest::Approx(tau_geo).epsilon(0.08));
        CHECK(stats.tau_fit[s] == doctest::Approx(stats.tau_model[s]).epsilon(0.12));
    }
}

TEST_CASE("simulation is seeded and statistically faithful") {
    const auto truth = four_state_truth(12.0, 0.9);

    const auto [a_series, a_path] = simulate(truth, 800, 5);
    const auto [b_series, b_path] = simulate(truth, 800, 5);
    CHECK(a_path == b_path);
    CHECK((a_series.x - b_series.x).norm() == 0.0);

    const auto [c_series, c_path] = simulate(truth, 800, 6);
    CHECK(c_path != a_path);

    const auto [big_series, big_path] = simulate(truth, 30000, 8);
    std::vector<long> occupancy(4, 0);
    for (int s : big_path) ++occupancy[s];
    for (int s = 0; s < 4; ++s)
        CHECK(double(occupancy[s]) / 30000.0 == doctest::Approx(0.25).epsilon(0.1));

    for (int s = 0; s < 4; ++s) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(18);
        long count = 0;
        for (int t = 0; t < 30000; ++t)
            if (big_path[t] == s) {
                sum += big_series.x.row(t).transpose();
                ++count;
            }
        const double sigma = std::sqrt(truth.cov[s](0, 0));
        CHECK((sum / count - truth.mean[s]).norm() < 6.0 * sigma * std::sqrt(18.0 / count));
    }

    hmm_model frozen = truth;
    frozen.trans = Eigen::MatrixXd::Identity(4, 4);
    for (auto& c : frozen.cov) c = 1e-14 * Eigen::MatrixXd::Identity(18, 18);
    const auto [f_series, f_path] = simulate(frozen, 50, 3);
    for (int t = 1; t < 50; ++t) CHECK(f_path[t] == f_path[0]);
    for (int t = 0; t < 50; ++t)
        CHECK((f_series.x.row(t).transpose() - frozen.mean[f_path[0]]).norm() < 1e-5);
}

TEST_CASE("training tolerates overlapping clusters without regressions") {
    rng64 rng(404);
    hmm_model truth;
    const int k = 3, d = 4;
    truth.initial = Eigen::VectorXd::Constant(k, 1.0 / k);
    truth.trans = Eigen::MatrixXd::Constant(k, k, 0.1);
    truth.trans.diagonal().setConstant(0.8);
    for (int s = 0; s < k; ++s) {
        Eigen::VectorXd mu(d);
        for (int j = 0; j < d; ++j) mu(j) = 1.5 * rng.normal();
        truth.mean.push_back(mu);
        truth.cov.push_back(Eigen::MatrixXd::Identity(d, d));
    }
    const auto [series, path] = simulate(truth, 400, 1);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CAPTURE(seed);
        const auto init = kmeans_init(series, k, seed);
        train_report report;
        CHECK_NOTHROW(baum_welch(series, init, 1e-7, 80, &report));
        for (std::size_t i = 1; i < report.loglik.size(); ++i)
            CHECK(report.loglik[i] >= report.loglik[i - 1] - 1e-8);
    }
}

TEST_CASE("malformed models and inputs are rejected") {
    rng64 rng(8);
    const auto series = random_series(rng, 20, 3);

    CHECK_THROWS_AS(kmeans_init(series, 0, 1), config_error);
    CHECK_THROWS_AS(kmeans_init(series, 21, 1), config_error);

    time_series bad_dt = series;
    bad_dt.dt = 0.0;
    CHECK_THROWS_AS(kmeans_init(bad_dt, 2, 1), config_error);

    auto model = kmeans_init(series, 2, 1);

    hmm_model rowsum = model;
    rowsum.trans(0, 0) += 0.1;
    CHECK_THROWS_AS(validate(rowsum), config_error);

    hmm_model negative = model;
    negative.trans(0, 0) = -0.01;
    negative.trans(0, 1) = 1.01;
    CHECK_THROWS_AS(validate(negative), config_error);

    hmm_model prior = model;
    prior.initial(0) += 0.2;
    CHECK_THROWS_AS(validate(prior), config_error);

    hmm_model flat_cov = model;
    flat_cov.cov[0].setZero();
    CHECK_THROWS_AS(validate(flat_cov), config_error);

    hmm_model mismatched = model;
    mismatched.mean[1] = Eigen::VectorXd::Zero(5);
    CHECK_THROWS_AS(validate(mismatched), config_error);

    const auto wide = random_series(rng, 20, 7);
    CHECK_THROWS_AS(baum_welch(wide, model, 1e-6, 10), config_error);
    CHECK_THROWS_AS(viterbi(model, wide), config_error);

    CHECK_THROWS_AS(dwell_stats({}, 30e-6, 2), config_error);
    CHECK_THROWS_AS(dwell_stats({0, 1, 2}, 30e-6, 2), config_error);
    CHECK_THROWS_AS(dwell_stats({0, 1}, -1.0, 2), config_error);
}
