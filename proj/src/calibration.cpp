#include "jring/calibration.hpp"

#include <cmath>
#include <complex>

#include "jring/device.hpp"

namespace jring {

using std::complex;

Eigen::Matrix3cd chain_model::product() const {
    return b * a.transpose();
}

Eigen::Matrix3cd polar_unitary(const Eigen::Matrix3cd& m) {
    Eigen::JacobiSVD<Eigen::Matrix3cd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

namespace {

// squared-residual vector of S = M ./ P against unitarity, 9 real components
Eigen::VectorXd unitarity_residuals(const Eigen::Matrix3cd& m, const Eigen::Vector3cd& a,
                                    const Eigen::Vector3cd& b) {
    Eigen::Matrix3cd s;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s(i, j) = m(i, j) / (b(i) * a(j));
    const Eigen::Matrix3cd e = s.adjoint() * s - Eigen::Matrix3cd::Identity();
    Eigen::VectorXd r(9);
    r << e(0, 0).real(), e(1, 1).real(), e(2, 2).real(), e(0, 1).real(), e(0, 1).imag(),
        e(0, 2).real(), e(0, 2).imag(), e(1, 2).real(), e(1, 2).imag();
    return r;
}

double relative_residual(const Eigen::Matrix3cd& m, const Eigen::Vector3cd& a,
                         const Eigen::Vector3cd& b, const Eigen::Matrix3cd& s) {
    Eigen::Matrix3cd model;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) model(i, j) = b(i) * s(i, j) * a(j);
    return (m - model).norm() / m.norm();
}

}  // namespace

calibration_result solve_off_resonant(const Eigen::Matrix3cd& m_off,
                                      const calibration_options& opt) {
    if (!m_off.allFinite()) throw config_error("calibration: matrix entries must be finite");
    const double scale = m_off.cwiseAbs().maxCoeff();
    if (std::abs(m_off.determinant()) < 1e-12 * scale * scale * scale)
        throw config_error("calibration: off-resonant matrix is singular");

    // alternating least squares with an annealed identity pull on S
    Eigen::Vector3cd a, b;
    for (int j = 0; j < 3; ++j) {
        const double mag = std::max(std::abs(m_off(j, j)), 1e-3 * scale);
        a(j) = std::sqrt(mag);
        b(j) = m_off(j, j) / a(j);
        if (std::abs(b(j)) < 1e-12) b(j) = a(j);
    }

    Eigen::Matrix3cd s = Eigen::Matrix3cd::Identity();
    for (int iter = 0; iter < opt.als_iters; ++iter) {
        const Eigen::Matrix3cd p = b * a.transpose();
        const double lambda =
            opt.reg_weight * p.cwiseAbs2().mean() * std::pow(opt.reg_decay, iter);
        Eigen::Matrix3cd w;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double identity = i == j ? 1.0 : 0.0;
                w(i, j) = (std::conj(p(i, j)) * m_off(i, j) + lambda * identity) /
                          (std::norm(p(i, j)) + lambda);
            }
        s = polar_unitary(w);

        for (int j = 0; j < 3; ++j) {
            complex<double> num = 0.0;
            double den = 0.0;
            for (int i = 0; i < 3; ++i) {
                num += m_off(i, j) * std::conj(b(i) * s(i, j));
                den += std::norm(b(i) * s(i, j));
            }
            if (den > 0.0) a(j) = num / den;
        }
        for (int i = 0; i < 3; ++i) {
            complex<double> num = 0.0;
            double den = 0.0;
            for (int j = 0; j < 3; ++j) {
                num += m_off(i, j) * std::conj(s(i, j) * a(j));
                den += std::norm(s(i, j) * a(j));
            }
            if (den > 0.0) b(i) = num / den;
        }
    }

    // Gauss-Newton polish of the log gains against the unitarity residuals
    Eigen::VectorXd theta(12);
    for (int i = 0; i < 3; ++i) {
        const complex<double> la = std::log(a(i));
        const complex<double> lb = std::log(b(i));
        theta(i) = la.real();
        theta(3 + i) = la.imag();
        theta(6 + i) = lb.real();
        theta(9 + i) = lb.imag();
    }
    auto gains = [](const Eigen::VectorXd& t) {
        Eigen::Vector3cd ga, gb;
        for (int i = 0; i < 3; ++i) {
            ga(i) = std::exp(complex<double>(t(i), t(3 + i)));
            gb(i) = std::exp(complex<double>(t(6 + i), t(9 + i)));
        }
        return std::make_pair(ga, gb);
    };

    Eigen::VectorXd r = unitarity_residuals(m_off, a, b);
    for (int iter = 0; iter < opt.polish_iters && r.norm() > 1e-14; ++iter) {
        const double h = 1e-7;
        Eigen::MatrixXd jac(9, 12);
        for (int p_idx = 0; p_idx < 12; ++p_idx) {
            Eigen::VectorXd tp = theta;
            tp(p_idx) += h;
            const auto [ga, gb] = gains(tp);
            jac.col(p_idx) = (unitarity_residuals(m_off, ga, gb) - r) / h;
        }
        Eigen::BDCSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-10);
        Eigen::VectorXd delta = svd.solve(-r);

        bool improved = false;
        for (int half = 0; half < 12; ++half) {
            const Eigen::VectorXd cand = theta + delta;
            const auto [ga, gb] = gains(cand);
            const Eigen::VectorXd rc = unitarity_residuals(m_off, ga, gb);
            if (rc.norm() < r.norm()) {
                theta = cand;
                r = rc;
                improved = true;
                break;
            }
            delta *= 0.5;
        }
        if (!improved) break;
    }
    std::tie(a, b) = gains(theta);

    // final projection and gauge canonicalization
    Eigen::Matrix3cd ratio;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) ratio(i, j) = m_off(i, j) / (b(i) * a(j));
    s = polar_unitary(ratio);

    for (int j = 0; j < 3; ++j) {
        const complex<double> phase = std::polar(1.0, std::arg(a(j)));
        a(j) /= phase;
        s.col(j) *= phase;
    }
    for (int i = 0; i < 3; ++i) {
        if (std::abs(s(i, i)) < 1e-9) continue;
        const complex<double> phase = std::polar(1.0, std::arg(s(i, i)));
        b(i) *= phase;
        s.row(i) /= phase;
    }
    const complex<double> a1 = a(0);
    if (std::abs(a1) > 0.0) {
        a /= a1;
        b *= a1;
    }

    calibration_result out;
    out.chain.a = a;
    out.chain.b = b;
    out.s_off = s;
    out.residual = relative_residual(m_off, a, b, s);
    out.ok = out.residual <= opt.fail_threshold;
    return out;
}

Eigen::Matrix3cd apply(const Eigen::Matrix3cd& m_on, const chain_model& chain) {
    for (int i = 0; i < 3; ++i)
        if (std::abs(chain.a(i)) == 0.0 || std::abs(chain.b(i)) == 0.0)
            throw config_error("calibration: chain gains must be nonzero");
    Eigen::Matrix3cd s;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s(i, j) = m_on(i, j) / (chain.b(i) * chain.a(j));
    return s;
}

}  // namespace jring
