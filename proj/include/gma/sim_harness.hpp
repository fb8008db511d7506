#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gma/multi_level.hpp"

namespace gma {

enum class ZCoding { bernoulli01, centered_pm_half };

/// Data-generating settings for one simulation scenario. For two-level
/// scenarios, path holds the population coefficients and lambda the diagonal
/// covariance of the per-subject deviations; subject lengths are either fixed
/// at T or Poisson(t_mean) truncated below at 20.
struct ScenarioSpec {
    bool two_level = false;
    PathCoefficients path{0.5, -1.0, 0.5};
    MarSpec mar;
    int T = 100;
    bool t_poisson = false;
    double t_mean = 100.0;
    int n_subjects = 50;
    Eigen::Vector3d lambda = Eigen::Vector3d::Zero();
    int burn_in = 1000;
    ZCoding z_coding = ZCoding::bernoulli01;
    std::uint64_t seed = 0;
};

/// Transition matrix for the benchmark scenarios: solves the
/// variance-doubling identity 2*Sigma = Omega^T (2*Sigma) Omega + Sigma by
/// continuation in |delta| from the exact delta = 0 solution, pinning
/// omega21 = 0.25 - 0.192*|delta| (the two anchor pins are 0.25 at delta = 0
/// and 0.154 at delta = 0.5). Negative delta uses the sign symmetry
/// Omega(-d) = P Omega(d) P with P = diag(1, -1).
Eigen::Matrix2d scenario_transition(const NoiseCov& noise);

SubjectSeries simulate_single(const ScenarioSpec& spec);

/// Records what the generator actually drew, for diagnostics and tests.
struct TwoLevelSimTruth {
    std::vector<Eigen::Vector3d> subject_b;  // (A_i, B_i, C_i)
    std::vector<int> lengths;
};

MultiSubjectDataset simulate_two_level(const ScenarioSpec& spec,
                                       TwoLevelSimTruth* truth = nullptr);

/// Mean / spread / rejection summaries of one estimator over the replicates
/// of one scenario. omega_mean holds 4 entries (w11, w12, w21, w22) per lag;
/// empty for estimators without a dynamic model.
struct EstimatorSummary {
    std::string method;
    double c_mean = 0.0, c_se = 0.0, c_power = 0.0;
    double ab_mean = 0.0, ab_se = 0.0, ab_power = 0.0;
    double sigma1_sq_mean = 0.0, sigma2_sq_mean = 0.0;
    std::vector<double> omega_mean;
};

struct ScenarioSummary {
    std::string name;
    double delta = 0.0;
    PathCoefficients truth;
    std::vector<double> omega_true;
    int reps = 0;
    std::vector<EstimatorSummary> rows;
};

/// Single-level benchmark: four scenario blocks, estimators fit with the true
/// delta, with delta = 0, and the two-regression baseline. Power columns use
/// Wald tests with the plug-in Fisher-information variance.
std::vector<ScenarioSummary> replicate_table1(int reps, std::uint64_t seed, int jobs = 1);

enum class TwoLevelStudy { delta_sweep, consistency };

struct TwoLevelMethodStats {
    double delta_mean = 0.0, delta_bias = 0.0, delta_mse = 0.0;
    double ab_mean = 0.0, ab_bias = 0.0, ab_mse = 0.0;
    std::vector<double> omega_mean;
};

struct TwoLevelCell {
    double delta_true = 0.0;
    int n_subjects = 0;
    double t_mean = 0.0;
    bool t_fixed = false;
    int reps = 0;
    std::vector<double> omega_true;
    TwoLevelMethodStats ts;
    TwoLevelMethodStats bcd;
};

/// Two-level studies: delta_sweep re-estimates delta over a grid of true
/// values at N = 50; consistency grows N = T through {50, 200, 500} at
/// delta = 0.5.
std::vector<TwoLevelCell> replicate_two_level(TwoLevelStudy kind, int reps, std::uint64_t seed,
                                              int jobs = 1);

/// Wald z-statistics for the direct and indirect effect of a single-level
/// fit, using the theoretical Fisher information evaluated at the estimates
/// (plug-in transition matrix, variances and treatment second moment). Falls
/// back to the observed-information covariance when the fitted dynamics are
/// non-stationary.
struct AsymptoticZ {
    double z_c = 0.0;
    double z_ab = 0.0;
};

AsymptoticZ plugin_asymptotic_z(const SubjectCore& core, const SingleLevelFit& fit);

}  // namespace gma
