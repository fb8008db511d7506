#include "gma/ar_dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "gma/errors.hpp"
#include "gma/rng.hpp"

namespace gma {

NoiseCov::NoiseCov(double s1, double s2, double d) : sigma1(s1), sigma2(s2), delta(d) {
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
        throw_data("ar-dynamics: innovation SDs must be positive");
    if (!(delta > -1.0 && delta < 1.0))
        throw_data("ar-dynamics: innovation correlation must lie in (-1, 1)");
}

Eigen::Matrix2d NoiseCov::sigma() const {
    Eigen::Matrix2d s;
    double cross = delta * sigma1 * sigma2;
    s << sigma1 * sigma1, cross, cross, sigma2 * sigma2;
    return s;
}

MarSpec::MarSpec(std::vector<Eigen::Matrix2d> om, NoiseCov nc)
    : p(static_cast<int>(om.size())), omegas(std::move(om)), noise(nc) {}

Eigen::MatrixXd companion_matrix(const MarSpec& mar) {
    if (mar.p < 1) throw_data("ar-dynamics: companion matrix undefined, no dynamics (p = 0)");
    const int n = 2 * mar.p;
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < mar.p; ++j)
        f.block<2, 2>(0, 2 * j) = mar.omegas[static_cast<std::size_t>(j)].transpose();
    for (int j = 1; j < mar.p; ++j)
        f.block<2, 2>(2 * j, 2 * (j - 1)) = Eigen::Matrix2d::Identity();
    return f;
}

StationarityCheck is_stationary(const MarSpec& mar, double margin) {
    if (mar.p == 0) return {0.0, true};
    Eigen::MatrixXd f = companion_matrix(mar);
    Eigen::EigenSolver<Eigen::MatrixXd> es(f, /*computeEigenvectors=*/false);
    double radius = es.eigenvalues().cwiseAbs().maxCoeff();
    return {radius, radius < 1.0 - margin};
}

namespace {

Eigen::MatrixXd innovation_embedding(const MarSpec& mar) {
    const int n = 2 * mar.p;
    Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(n, n);
    xi.topLeftCorner<2, 2>() = mar.noise.sigma();
    return xi;
}

}  // namespace

Eigen::MatrixXd stationary_covariance(const MarSpec& mar) {
    if (mar.p < 1) throw_data("ar-dynamics: stationary covariance needs p >= 1");
    if (!is_stationary(mar).stationary)
        throw_numeric("ar-dynamics: stationary covariance undefined for a non-stationary model");
    const int n = 2 * mar.p;
    Eigen::MatrixXd f = companion_matrix(mar);
    Eigen::MatrixXd xi = innovation_embedding(mar);

    // vec(F Pi F^T) = (F (x) F) vec(Pi); one dense solve of size n^2 since p is small.
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n * n, n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            system.block(i * n, j * n, n, n) -= f(i, j) * f;
    Eigen::VectorXd vec_xi = Eigen::Map<const Eigen::VectorXd>(xi.data(), n * n);
    Eigen::VectorXd vec_pi = system.partialPivLu().solve(vec_xi);
    Eigen::MatrixXd pi = Eigen::Map<const Eigen::MatrixXd>(vec_pi.data(), n, n);
    pi = (0.5 * (pi + pi.transpose())).eval();
    return pi;
}

Eigen::MatrixXd lag_covariance(const MarSpec& mar, int lag) {
    if (lag < 0) throw_data("ar-dynamics: lag must be non-negative");
    Eigen::MatrixXd pi = stationary_covariance(mar);
    if (lag == 0) return pi;
    Eigen::MatrixXd f = companion_matrix(mar);
    for (int j = 0; j < lag; ++j) pi = (f * pi).eval();
    return pi;
}

namespace {

/// Cholesky-like factor with eigenvalues floored at 1e-12; inputs rounded to a
/// few decimals can be marginally indefinite.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd vals = es.eigenvalues().cwiseMax(1e-12);
    return es.eigenvectors() * vals.cwiseSqrt().asDiagonal();
}

}  // namespace

ErrorSeries simulate_errors(const MarSpec& mar, int T, int burn_in, std::uint64_t seed) {
    if (T < 1) throw_data("ar-dynamics: need T >= 1");
    if (burn_in < 0) throw_data("ar-dynamics: burn_in must be non-negative");
    if (!is_stationary(mar).stationary)
        throw_numeric("ar-dynamics: cannot simulate a non-stationary error process");

    Rng rng(seed);
    ErrorSeries out;
    out.e1.resize(T);
    out.e2.resize(T);

    Eigen::MatrixXd innov_factor = psd_factor(mar.noise.sigma());
    auto draw2 = [&](const Eigen::MatrixXd& factor) {
        Eigen::VectorXd std_normals(factor.cols());
        for (int i = 0; i < std_normals.size(); ++i) std_normals[i] = rng.normal();
        return (factor * std_normals).eval();
    };

    if (mar.p == 0) {
        for (int t = 0; t < burn_in + T; ++t) {
            Eigen::VectorXd eps = draw2(innov_factor);
            if (t >= burn_in) {
                out.e1[t - burn_in] = eps[0];
                out.e2[t - burn_in] = eps[1];
            }
        }
        return out;
    }

    // Stacked state (E_t, E_{t-1}, ..., E_{t-p+1}), started at its stationary law.
    Eigen::VectorXd state = draw2(psd_factor(stationary_covariance(mar)));
    const int n = 2 * mar.p;
    for (int t = 0; t < burn_in + T; ++t) {
        Eigen::Vector2d next = Eigen::Vector2d::Zero();
        for (int j = 0; j < mar.p; ++j)
            next += mar.omegas[static_cast<std::size_t>(j)].transpose() *
                    state.segment<2>(2 * j);
        next += draw2(innov_factor);
        if (mar.p > 1) {
            Eigen::VectorXd shifted(n);
            shifted.tail(n - 2) = state.head(n - 2);
            shifted.head<2>() = next;
            state = shifted;
        } else {
            state = next;
        }
        if (t >= burn_in) {
            out.e1[t - burn_in] = state[0];
            out.e2[t - burn_in] = state[1];
        }
    }
    return out;
}

Eigen::Matrix2d solve_transition(const NoiseCov& noise, double pinned_omega21,
                                 const Eigen::Matrix2d& initial_guess) {
    if (!initial_guess.allFinite())
        throw_data("ar-dynamics: transition guess must be finite");
    const Eigen::Matrix2d sig = noise.sigma();
    const Eigen::Matrix2d target = 2.0 * sig;

    auto build = [&](const Eigen::Vector3d& x) {
        Eigen::Matrix2d om;
        om << x[0], x[1], pinned_omega21, x[2];
        return om;
    };
    auto residual = [&](const Eigen::Vector3d& x) {
        Eigen::Matrix2d m = build(x).transpose() * target * build(x) + sig - target;
        return Eigen::Vector3d(m(0, 0), m(0, 1), m(1, 1));
    };

    Eigen::Vector3d x(initial_guess(0, 0), initial_guess(0, 1), initial_guess(1, 1));
    double err = residual(x).cwiseAbs().maxCoeff();
    const int max_iter = 200;
    for (int it = 0; it < max_iter && err >= 1e-12; ++it) {
        Eigen::Matrix2d om = build(x);
        Eigen::Matrix3d jac;
        for (int k = 0; k < 3; ++k) {
            Eigen::Vector3d unit = Eigen::Vector3d::Zero();
            unit[k] = 1.0;
            Eigen::Matrix2d basis = build(unit);
            basis(1, 0) = 0.0;  // the pinned entry does not vary
            Eigen::Matrix2d dm = basis.transpose() * target * om + om.transpose() * target * basis;
            jac.col(k) = Eigen::Vector3d(dm(0, 0), dm(0, 1), dm(1, 1));
        }
        Eigen::Vector3d step = jac.fullPivLu().solve(-residual(x));
        double scale = 1.0;
        bool improved = false;
        while (scale > 1e-10) {
            Eigen::Vector3d cand = x + scale * step;
            double cand_err = residual(cand).cwiseAbs().maxCoeff();
            if (cand_err < err) {
                x = cand;
                err = cand_err;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!improved) break;
    }
    if (err >= 1e-8)
        throw_numeric("ar-dynamics: no stationary solution found from guess (transition solve stalled)");

    Eigen::Matrix2d om = build(x);
    MarSpec check({om}, noise);
    if (!is_stationary(check).stationary)
        throw_numeric("ar-dynamics: transition solve converged to a non-stationary root");
    return om;
}

}  // namespace gma
