#include "gma/single_level.hpp"

#include <cmath>

#include "gma/errors.hpp"

namespace gma {

Eigen::VectorXd ThetaVector::stacked() const {
    Eigen::VectorXd v(dim());
    v.head(theta1.size()) = theta1;
    v.segment(theta1.size(), theta2.size()) = theta2;
    v[v.size() - 1] = b;
    return v;
}

ThetaVector ThetaVector::from_stacked(int p, const Eigen::VectorXd& v) {
    const int k = 3 * p + 1;
    if (v.size() != 2 * k + 1) throw_data("single-level: stacked coefficient vector has wrong length");
    ThetaVector t;
    t.p = p;
    t.theta1 = v.head(k);
    t.theta2 = v.segment(k, k);
    t.b = v[2 * k];
    return t;
}

DesignMatrices build_design(const SubjectSeries& series, int p) {
    const int T = series.length();
    if (series.m.size() != T || series.r.size() != T)
        throw_data("single-level: series channels must share one length");
    if (p < 0) throw_data("single-level: lag order must be non-negative");
    if (T <= p) throw_data("single-level: series too short for the requested lag order");
    const int n = T - p;
    const int k = 3 * p + 1;
    DesignMatrices d;
    d.x.resize(n, k);
    d.m_resp = series.m.tail(n);
    d.r_resp = series.r.tail(n);
    d.x.col(0) = series.z.tail(n);
    for (int j = 1; j <= p; ++j) {
        d.x.col(j) = series.z.segment(p - j, n);
        d.x.col(p + j) = series.m.segment(p - j, n);
        d.x.col(2 * p + j) = series.r.segment(p - j, n);
    }
    return d;
}

double SubjectCore::loglik_profile() const {
    return -0.5 * n * std::log(sigma1_sq * sigma2_base_sq) - n;
}

SubjectCore make_subject_core(const SubjectSeries& series, int p) {
    const int T = series.length();
    const int k = 3 * p + 1;
    if (T - p < 6 * p + 5)
        throw_data("single-level: subject '" + series.id + "' too short: need T - p >= 6p + 5");
    if (!series.z.allFinite() || !series.m.allFinite() || !series.r.allFinite())
        throw_data("single-level: subject '" + series.id + "' contains non-finite values");

    DesignMatrices d = build_design(series, p);
    SubjectCore core;
    core.id = series.id;
    core.p = p;
    core.n = d.x.rows();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.x);
    qr.setThreshold(1e-10);
    if (qr.rank() < k)
        throw_data("single-level: design block of subject '" + series.id +
                   "' is rank deficient (" + std::to_string(qr.rank()) + " of " +
                   std::to_string(k) + " columns)");
    core.theta1 = qr.solve(d.m_resp);
    Eigen::VectorXd res_m = d.m_resp - d.x * core.theta1;
    core.sigma1_sq = res_m.squaredNorm() / core.n;

    // Joint regression of R on (X, M); the M column must add new direction.
    Eigen::MatrixXd w(core.n, k + 1);
    w.leftCols(k) = d.x;
    w.col(k) = d.m_resp;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_w(w);
    qr_w.setThreshold(1e-10);
    if (qr_w.rank() < k + 1)
        throw_data("single-level: mediator block of subject '" + series.id +
                   "' is collinear with the design (projection on M undefined)");
    Eigen::VectorXd beta = qr_w.solve(d.r_resp);
    core.theta2_base = beta.head(k);
    core.b_base = beta[k];
    core.sigma2_base_sq = (d.r_resp - w * beta).squaredNorm() / core.n;

    core.xtx = d.x.transpose() * d.x;
    core.xtm = d.x.transpose() * d.m_resp;
    core.xtr = d.x.transpose() * d.r_resp;
    core.mtm = d.m_resp.squaredNorm();
    core.mtr = d.m_resp.dot(d.r_resp);
    core.rtr = d.r_resp.squaredNorm();
    core.zsq_mean = d.x.col(0).squaredNorm() / core.n;
    return core;
}

namespace {

void check_delta(double delta) {
    if (!(delta > -1.0 && delta < 1.0))
        throw_data("single-level: sensitivity parameter must lie in (-1, 1)");
}

Eigen::MatrixXd information_from_moments(const Eigen::MatrixXd& xtx, const Eigen::VectorXd& xtm,
                                         double mtm, double sigma1_sq, double sigma2_sq,
                                         double kappa, double delta) {
    const int k = xtx.rows();
    const int dim = 2 * k + 1;
    const double one_md2 = 1.0 - delta * delta;
    const double c2 = sigma2_sq * one_md2;
    Eigen::MatrixXd info(dim, dim);
    info.setZero();
    info.topLeftCorner(k, k) = xtx / (sigma1_sq * one_md2);
    info.block(0, k, k, k) = -kappa / c2 * xtx;
    info.block(k, 0, k, k) = -kappa / c2 * xtx;
    info.block(k, k, k, k) = xtx / c2;
    info.block(0, 2 * k, k, 1) = -kappa / c2 * xtm;
    info.block(2 * k, 0, 1, k) = -kappa / c2 * xtm.transpose();
    info.block(k, 2 * k, k, 1) = xtm / c2;
    info.block(2 * k, k, 1, k) = xtm.transpose() / c2;
    info(2 * k, 2 * k) = mtm / c2;
    return info;
}

}  // namespace

SingleLevelFit fit_from_core(const SubjectCore& core, double delta, bool with_vcov) {
    check_delta(delta);
    const double tau = delta / std::sqrt(1.0 - delta * delta);
    SingleLevelFit fit;
    fit.delta = delta;
    fit.sigma1_sq = core.sigma1_sq;
    fit.sigma2_sq = core.sigma2_base_sq / (1.0 - delta * delta);
    fit.kappa = tau * std::sqrt(core.sigma2_base_sq / core.sigma1_sq);
    fit.theta.p = core.p;
    fit.theta.theta1 = core.theta1;
    fit.theta.theta2 = core.theta2_base + fit.kappa * core.theta1;
    fit.theta.b = core.b_base - fit.kappa;
    fit.omegas_hat = recover_omegas(fit.theta);
    fit.loglik = core.loglik_profile();
    if (with_vcov) {
        Eigen::MatrixXd info = information_from_moments(core.xtx, core.xtm, core.mtm,
                                                        fit.sigma1_sq, fit.sigma2_sq,
                                                        fit.kappa, delta);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            throw_numeric("single-level: observed information is singular for subject '" +
                          core.id + "'");
        fit.vcov = ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
    }
    return fit;
}

SingleLevelFit fit_cmle(const SubjectSeries& series, int p, double delta) {
    SubjectCore core = make_subject_core(series, p);
    SingleLevelFit fit = fit_from_core(core, delta);
    // Report the likelihood by direct evaluation; it agrees with the profile
    // value up to rounding and feeds the sensitivity flatness diagnostics.
    fit.loglik = conditional_loglik(series, p, fit.theta, std::sqrt(fit.sigma1_sq),
                                    std::sqrt(fit.sigma2_sq), delta);
    return fit;
}

double conditional_loglik(const SubjectSeries& series, int p, const ThetaVector& theta,
                          double sigma1, double sigma2, double delta) {
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
        throw_data("single-level: likelihood needs positive innovation SDs");
    check_delta(delta);
    DesignMatrices d = build_design(series, p);
    const int n = d.x.rows();
    const double s1_sq = sigma1 * sigma1;
    const double s2_sq = sigma2 * sigma2;
    const double one_md2 = 1.0 - delta * delta;
    const double kappa = delta * sigma2 / sigma1;
    Eigen::VectorXd res1 = d.m_resp - d.x * theta.theta1;
    Eigen::VectorXd res2 =
        d.r_resp - theta.b * d.m_resp - d.x * theta.theta2 - kappa * res1;
    return -0.5 * n * std::log(s1_sq * s2_sq * one_md2) -
           res1.squaredNorm() / (2.0 * s1_sq) -
           res2.squaredNorm() / (2.0 * s2_sq * one_md2);
}

namespace {

Eigen::Matrix<double, 6, 4> reparam_matrix(const PathCoefficients& path) {
    Eigen::Matrix<double, 6, 4> d;
    d << -path.a, -path.c, 0, 0,
         0, 0, -path.a, -path.c,
         1, -path.b, 0, 0,
         0, 1, 0, 0,
         0, 0, 1, -path.b,
         0, 0, 0, 1;
    return d;
}

}  // namespace

Eigen::Matrix<double, 6, 1> reparam_forward(const PathCoefficients& path,
                                            const Eigen::Matrix2d& omega) {
    Eigen::Vector4d w(omega(0, 0), omega(1, 0), omega(0, 1), omega(1, 1));
    return reparam_matrix(path) * w;
}

Eigen::Matrix2d reparam_inverse(const PathCoefficients& path,
                                const Eigen::Matrix<double, 6, 1>& eta) {
    Eigen::Matrix<double, 6, 4> d = reparam_matrix(path);
    Eigen::Vector4d w = (d.transpose() * d).ldlt().solve(d.transpose() * eta);
    Eigen::Matrix2d omega;
    omega << w[0], w[2], w[1], w[3];
    return omega;
}

std::vector<Eigen::Matrix2d> recover_omegas(const ThetaVector& theta) {
    const int p = theta.p;
    std::vector<Eigen::Matrix2d> out;
    out.reserve(p);
    for (int j = 0; j < p; ++j) {
        const double psi11 = theta.theta1[1 + p + j];
        const double psi21 = theta.theta1[1 + 2 * p + j];
        const double psi12 = theta.theta2[1 + p + j];
        const double psi22 = theta.theta2[1 + 2 * p + j];
        Eigen::Matrix2d omega;
        omega(1, 0) = psi21;
        omega(1, 1) = psi22;
        omega(0, 0) = psi11 + theta.b * psi21;
        omega(0, 1) = psi12 + theta.b * psi22;
        out.push_back(omega);
    }
    return out;
}

Eigen::MatrixXd observed_information(const SubjectSeries& series, int p,
                                     const SingleLevelFit& fit) {
    SubjectCore core = make_subject_core(series, p);
    return information_from_moments(core.xtx, core.xtm, core.mtm, fit.sigma1_sq,
                                    fit.sigma2_sq, fit.kappa, fit.delta);
}

TheoreticalMoments theoretical_moments(const PathCoefficients& path, const MarSpec& mar,
                                       double q, int p) {
    if (p != mar.p) throw_data("single-level: lag order must match the error model");
    if (!(q > 0.0)) throw_data("single-level: treatment second moment must be positive");
    const int k = 3 * p + 1;
    const double a = path.a, b = path.b, c = path.c;
    const double total = c + a * b;  // Z -> R coefficient through both routes

    TheoreticalMoments mom;
    mom.exx = Eigen::MatrixXd::Zero(k, k);
    mom.exm = Eigen::VectorXd::Zero(k);
    mom.exx(0, 0) = q;
    if (p == 0) {
        mom.exm[0] = a * q;
        mom.emm = a * a * q + mar.noise.sigma1 * mar.noise.sigma1;
        return mom;
    }

    Eigen::MatrixXd pi = stationary_covariance(mar);
    // Selectors onto the mediator / outcome error channels of the stacked state.
    Eigen::MatrixXd j1 = Eigen::MatrixXd::Zero(2 * p, p);
    Eigen::MatrixXd j2 = Eigen::MatrixXd::Zero(2 * p, p);
    for (int j = 0; j < p; ++j) {
        j1(2 * j, j) = 1.0;
        j2(2 * j + 1, j) = 1.0;
    }
    Eigen::MatrixXd g11 = j1.transpose() * pi * j1;
    Eigen::MatrixXd g12 = j1.transpose() * pi * j2;
    Eigen::MatrixXd g22 = j2.transpose() * pi * j2;
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);

    Eigen::MatrixXd q_mm = a * a * q * eye + g11;
    Eigen::MatrixXd q_mr = a * total * q * eye + b * g11 + g12;
    Eigen::MatrixXd q_rr =
        total * total * q * eye + b * b * g11 + b * (g12 + g12.transpose()) + g22;

    auto zs = [&](int j) { return 1 + j; };
    auto ms = [&](int j) { return 1 + p + j; };
    auto rs = [&](int j) { return 1 + 2 * p + j; };
    mom.exx.block(zs(0), zs(0), p, p) = q * eye;
    mom.exx.block(zs(0), ms(0), p, p) = a * q * eye;
    mom.exx.block(ms(0), zs(0), p, p) = a * q * eye;
    mom.exx.block(zs(0), rs(0), p, p) = total * q * eye;
    mom.exx.block(rs(0), zs(0), p, p) = total * q * eye;
    mom.exx.block(ms(0), ms(0), p, p) = q_mm;
    mom.exx.block(ms(0), rs(0), p, p) = q_mr;
    mom.exx.block(rs(0), ms(0), p, p) = q_mr.transpose();
    mom.exx.block(rs(0), rs(0), p, p) = q_rr;

    // Mediator-equation coefficients implied by (a, b, c) and the transitions.
    Eigen::VectorXd phi1(p), psi11(p), psi21(p);
    for (int j = 0; j < p; ++j) {
        Eigen::Matrix<double, 6, 1> eta =
            reparam_forward(path, mar.omegas[static_cast<std::size_t>(j)]);
        phi1[j] = eta[0];
        psi11[j] = eta[2];
        psi21[j] = eta[3];
    }

    mom.exm[0] = a * q;
    mom.exm.segment(zs(0), p) = q * phi1 + a * q * psi11 + total * q * psi21;
    mom.exm.segment(ms(0), p) = a * q * phi1 + q_mm * psi11 + q_mr * psi21;
    mom.exm.segment(rs(0), p) =
        total * q * phi1 + q_mr.transpose() * psi11 + q_rr * psi21;

    Eigen::VectorXd lag_coef(3 * p);
    lag_coef << phi1, psi11, psi21;
    mom.emm = a * a * q + mar.noise.sigma1 * mar.noise.sigma1 +
              lag_coef.dot(mom.exx.bottomRightCorner(3 * p, 3 * p) * lag_coef);
    return mom;
}

Eigen::MatrixXd fisher_information_theoretical(const PathCoefficients& path,
                                               const MarSpec& mar, double q, int p) {
    if (p >= 1 && !is_stationary(mar).stationary)
        throw_numeric("single-level: Fisher information needs a stationary error model");
    TheoreticalMoments mom = theoretical_moments(path, mar, q, p);
    const double s1_sq = mar.noise.sigma1 * mar.noise.sigma1;
    const double s2_sq = mar.noise.sigma2 * mar.noise.sigma2;
    const double kappa = mar.noise.delta * mar.noise.sigma2 / mar.noise.sigma1;
    return information_from_moments(mom.exx, mom.exm, mom.emm, s1_sq, s2_sq, kappa,
                                    mar.noise.delta);
}

IndirectEffect indirect_effect(const SingleLevelFit& fit) {
    if (!fit.vcov)
        throw_data("single-level: indirect effect needs the fit covariance");
    const Eigen::MatrixXd& v = *fit.vcov;
    const int d = v.rows();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(d);
    grad[0] = fit.theta.b;
    grad[d - 1] = fit.theta.a();
    IndirectEffect eff;
    eff.ab = fit.theta.a() * fit.theta.b;
    eff.variance = grad.dot(v * grad);
    const double half_width = 1.959963984540054 * std::sqrt(std::max(eff.variance, 0.0));
    eff.ci_lo = eff.ab - half_width;
    eff.ci_hi = eff.ab + half_width;
    return eff;
}

std::vector<SensitivityPoint> sensitivity_curve(const SubjectSeries& series, int p,
                                                const std::vector<double>& grid) {
    for (double d : grid) check_delta(d);
    SubjectCore core = make_subject_core(series, p);
    std::vector<SensitivityPoint> out;
    out.reserve(grid.size());
    for (double d : grid) {
        SensitivityPoint pt;
        pt.delta = d;
        pt.fit = fit_from_core(core, d);
        pt.fit.loglik = conditional_loglik(series, p, pt.fit.theta,
                                           std::sqrt(pt.fit.sigma1_sq),
                                           std::sqrt(pt.fit.sigma2_sq), d);
        pt.ab = indirect_effect(pt.fit);
        out.push_back(std::move(pt));
    }
    return out;
}

BaronKennyFit fit_baron_kenny(const SubjectSeries& series) {
    if (series.length() < 4) throw_data("single-level: Baron-Kenny needs T >= 4");
    SingleLevelFit fit = fit_cmle(series, 0, 0.0);
    BaronKennyFit bk;
    bk.path = fit.path();
    const Eigen::MatrixXd& v = *fit.vcov;
    bk.var_a = v(0, 0);
    bk.var_c = v(1, 1);
    bk.var_b = v(2, 2);
    bk.sigma1_sq = fit.sigma1_sq;
    bk.sigma2_sq = fit.sigma2_sq;
    return bk;
}

}  // namespace gma
