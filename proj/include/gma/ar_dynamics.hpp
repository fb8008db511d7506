#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace gma {

/// Innovation covariance of the bivariate noise driving the error process:
/// Sigma = [[s1^2, d*s1*s2], [d*s1*s2, s2^2]] with s1, s2 > 0 and |d| < 1.
/// delta doubles as the sensitivity parameter for unmeasured confounding.
struct NoiseCov {
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    double delta = 0.0;

    NoiseCov() = default;
    NoiseCov(double s1, double s2, double d);

    Eigen::Matrix2d sigma() const;
};

/// Bivariate autoregressive error model of order p. omegas[j] is the lag-(j+1)
/// transition matrix; its (r, c) entry is the weight of channel r at lag j+1
/// in the channel-c recursion, i.e. the process evolves as
///   E_t = sum_j omegas[j]^T E_{t-j-1} + eps_t,  eps_t ~ N(0, Sigma).
struct MarSpec {
    int p = 0;
    std::vector<Eigen::Matrix2d> omegas;
    NoiseCov noise;

    MarSpec() = default;
    MarSpec(std::vector<Eigen::Matrix2d> om, NoiseCov nc);
};

struct ErrorSeries {
    Eigen::VectorXd e1;
    Eigen::VectorXd e2;
};

struct StationarityCheck {
    double spectral_radius = 0.0;
    bool stationary = true;
};

/// Companion matrix (2p x 2p): first block row holds the transposed transition
/// matrices, identity blocks on the sub-diagonal. Requires p >= 1.
Eigen::MatrixXd companion_matrix(const MarSpec& mar);

/// Spectral radius of the companion matrix; stationary iff radius < 1 - margin.
StationarityCheck is_stationary(const MarSpec& mar, double margin = 1e-8);

/// Stationary covariance Pi of the stacked error state: the fixed point of
/// Pi = F Pi F^T + Xi, solved exactly through vec(Pi) = (I - F (x) F)^{-1} vec(Xi),
/// where Xi embeds Sigma in its top-left 2x2 block. The top-left 2x2 block of
/// Pi is the contemporaneous error covariance.
Eigen::MatrixXd stationary_covariance(const MarSpec& mar);

/// Lag-j covariance of the stacked state, F^j * Pi. j = 0 returns Pi itself.
Eigen::MatrixXd lag_covariance(const MarSpec& mar, int lag);

/// Simulates T steps of the error process after discarding burn_in steps.
/// The initial stacked state is drawn from the stationary distribution
/// N(0, Pi), so the output is stationary from the first sample. Deterministic
/// in the seed.
ErrorSeries simulate_errors(const MarSpec& mar, int T, int burn_in, std::uint64_t seed);

/// Solves 2*Sigma = Omega^T (2*Sigma) Omega + Sigma for a single 2x2 transition
/// matrix, pinning the (2,1) entry to resolve the one-parameter solution
/// family. Damped Newton on the three free entries of the symmetric residual,
/// started from initial_guess. The returned matrix is verified to give a
/// stationary order-1 process and a residual below 1e-8.
Eigen::Matrix2d solve_transition(const NoiseCov& noise, double pinned_omega21,
                                 const Eigen::Matrix2d& initial_guess);

}  // namespace gma
