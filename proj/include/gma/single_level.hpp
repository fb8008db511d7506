#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gma/ar_dynamics.hpp"

namespace gma {

/// One participant's aligned treatment / mediator / outcome series.
struct SubjectSeries {
    std::string id;
    Eigen::VectorXd z;
    Eigen::VectorXd m;
    Eigen::VectorXd r;

    int length() const { return static_cast<int>(z.size()); }
};

/// The three structural coefficients: a (treatment -> mediator),
/// b (mediator -> outcome), c (direct treatment -> outcome).
struct PathCoefficients {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

/// Regression coefficients of the reduced-form model, 6p + 3 in total.
/// theta1 = (A, phi1_1..p, psi11_1..p, psi21_1..p) parameterizes the mediator
/// equation, theta2 = (C, phi2_1..p, psi12_1..p, psi22_1..p) the outcome
/// equation, and b is the mediator->outcome coefficient B.
struct ThetaVector {
    int p = 0;
    Eigen::VectorXd theta1;
    Eigen::VectorXd theta2;
    double b = 0.0;

    int dim() const { return 6 * p + 3; }
    double a() const { return theta1[0]; }
    double c() const { return theta2[0]; }

    /// Stacked as (theta1, theta2, b); the indirect-effect machinery indexes
    /// the first and last coordinate of this layout.
    Eigen::VectorXd stacked() const;
    static ThetaVector from_stacked(int p, const Eigen::VectorXd& v);
};

/// Closed-form conditional-likelihood fit at a fixed sensitivity value delta.
struct SingleLevelFit {
    double delta = 0.0;
    ThetaVector theta;
    double sigma1_sq = 0.0;
    double sigma2_sq = 0.0;
    double kappa = 0.0;  // delta * sigma2_hat / sigma1_hat
    std::vector<Eigen::Matrix2d> omegas_hat;
    double loglik = 0.0;
    std::optional<Eigen::MatrixXd> vcov;

    PathCoefficients path() const { return {theta.a(), theta.b, theta.c()}; }
};

struct DesignMatrices {
    Eigen::MatrixXd x;       // (T-p) x (3p+1): row t is (Z_t, Z-lags, M-lags, R-lags)
    Eigen::VectorXd m_resp;  // M_{p+1..T}
    Eigen::VectorXd r_resp;  // R_{p+1..T}
};

/// Lagged design for the reduced-form regressions, conditioning on the first
/// p observations.
DesignMatrices build_design(const SubjectSeries& series, int p);

/// Delta-free per-subject summary. Everything a fit at any delta needs is
/// here, so sensitivity grids, profile searches and bootstrap replicates pay
/// the QR decompositions exactly once per subject.
struct SubjectCore {
    std::string id;
    int p = 0;
    int n = 0;  // T - p regression rows
    Eigen::VectorXd theta1;        // OLS of M on X
    Eigen::VectorXd theta2_base;   // X-coefficients of the joint OLS of R on (X, M)
    double b_base = 0.0;           // M-coefficient of that joint OLS
    double sigma1_sq = 0.0;        // |M - X theta1|^2 / n
    double sigma2_base_sq = 0.0;   // joint-OLS residual variance of R, = (1 - delta^2) sigma2_sq
    // Cross-products reused by the information matrix and the two-level updates.
    Eigen::MatrixXd xtx;
    Eigen::VectorXd xtm;
    Eigen::VectorXd xtr;
    double mtm = 0.0;
    double mtr = 0.0;
    double rtr = 0.0;
    double zsq_mean = 0.0;  // mean of Z_t^2 over regression rows

    /// Value of the maximized conditional log-likelihood; constant in delta.
    double loglik_profile() const;
};

SubjectCore make_subject_core(const SubjectSeries& series, int p);

/// Assembles the closed-form estimate at the given delta from a prepared core.
/// Cheap: O(p) arithmetic plus an optional (6p+3)^2 solve for the covariance.
SingleLevelFit fit_from_core(const SubjectCore& core, double delta, bool with_vcov = true);

/// Conditional maximum-likelihood estimate at fixed delta. sigma1 and sigma2
/// are estimated first (they depend only on the data and delta), then the
/// coupling kappa, then the regression coefficients.
SingleLevelFit fit_cmle(const SubjectSeries& series, int p, double delta);

/// Conditional log-likelihood of the reduced-form model, up to the 2*pi
/// constant:
///   -((T-p)/2) log(s1^2 s2^2 (1-d^2)) - |M - X t1|^2 / (2 s1^2)
///   - |(R - M b - X t2) - kappa (M - X t1)|^2 / (2 s2^2 (1-d^2)).
double conditional_loglik(const SubjectSeries& series, int p, const ThetaVector& theta,
                          double sigma1, double sigma2, double delta);

/// eta_j = D(a, b, c) * (w11, w21, w12, w22): the reduced-form coefficients
/// (phi1j, phi2j, psi11j, psi21j, psi12j, psi22j) induced by one transition
/// matrix.
Eigen::Matrix<double, 6, 1> reparam_forward(const PathCoefficients& path,
                                            const Eigen::Matrix2d& omega);

/// Least-squares inverse of reparam_forward: (D^T D)^{-1} D^T eta. Exact when
/// eta lies in the column space of D; D^T D is invertible for every (a, b, c).
Eigen::Matrix2d reparam_inverse(const PathCoefficients& path,
                                const Eigen::Matrix<double, 6, 1>& eta);

/// Transition-matrix recovery used by the fitted models: solves the psi-block
/// of the eta system, which is square and unit-triangular:
///   w21 = psi21, w22 = psi22, w11 = psi11 + b*w21, w12 = psi12 + b*w22.
/// Agrees with reparam_inverse whenever eta is consistent with (a, b, c).
std::vector<Eigen::Matrix2d> recover_omegas(const ThetaVector& theta);

/// Negative Hessian of the conditional log-likelihood at the fitted values,
/// assembled from the closed-form blocks. Symmetric; its inverse is the
/// asymptotic covariance of (theta1, theta2, B).
Eigen::MatrixXd observed_information(const SubjectSeries& series, int p,
                                     const SingleLevelFit& fit);

/// Expected per-observation moments of the design under a mean-zero treatment
/// with E[Z^2] = q and stationary errors. Exposed separately because the
/// blocks have closed forms worth testing on their own.
struct TheoreticalMoments {
    Eigen::MatrixXd exx;  // E[X_t X_t^T], (3p+1) x (3p+1)
    Eigen::VectorXd exm;  // E[X_t M_t]
    double emm = 0.0;     // E[M_t^2]
};

TheoreticalMoments theoretical_moments(const PathCoefficients& path, const MarSpec& mar,
                                       double q, int p);

/// Per-observation Fisher information of (theta1, theta2, B). Valid only for
/// mean-zero treatment coding; q = E[Z_t^2].
Eigen::MatrixXd fisher_information_theoretical(const PathCoefficients& path,
                                               const MarSpec& mar, double q, int p);

struct IndirectEffect {
    double ab = 0.0;
    double variance = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

/// Product-method indirect effect with its delta-method variance from the
/// fit's covariance: gradient (B, 0, ..., 0, A) applied to vcov.
IndirectEffect indirect_effect(const SingleLevelFit& fit);

struct SensitivityPoint {
    double delta = 0.0;
    SingleLevelFit fit;
    IndirectEffect ab;
};

/// One fit per grid value. The maximized likelihood is constant across the
/// grid and theta1 does not move; only the outcome-equation coefficients and
/// sigma2 respond to delta.
std::vector<SensitivityPoint> sensitivity_curve(const SubjectSeries& series, int p,
                                                const std::vector<double>& grid);

struct BaronKennyFit {
    PathCoefficients path;
    double var_a = 0.0;
    double var_b = 0.0;
    double var_c = 0.0;
    double sigma1_sq = 0.0;
    double sigma2_sq = 0.0;
};

/// Two independent regressions baseline: identical to the lag-0 fit at
/// delta = 0 projected to (a, b, c).
BaronKennyFit fit_baron_kenny(const SubjectSeries& series);

}  // namespace gma
