#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gma/multi_level.hpp"

namespace gma {

/// Percentile bootstrap summary for one scalar target.
struct BootstrapResult {
    std::string target;
    double point = 0.0;
    std::vector<double> replicates;  // length B; failed replicates recorded as NaN
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::uint64_t seed = 0;
};

struct BootstrapOpts {
    int jobs = 1;
    SearchOpts search;
};

/// Resamples whole subjects with replacement and reruns the full two-level
/// pipeline, including the profile search for delta, on every replicate.
/// Replicate r draws from a stream derived from (seed, r), so results are
/// reproducible and independent of the worker count. Fails if more than 10%
/// of replicates error out.
///
/// Targets reported: delta, A, B, C, AB, direct, and the subject-averaged
/// transition entries omega<j>_<rc>.
std::vector<BootstrapResult> bootstrap_population(const MultiSubjectDataset& data, int p,
                                                  TwoLevelMethod method, int B,
                                                  std::uint64_t seed,
                                                  const BootstrapOpts& opts = {});

struct WaldTest {
    double z = 0.0;
    double p_value = 0.0;
    bool reject = false;
};

/// Two-sided normal test of H0: estimate == null.
WaldTest wald_test(double estimate, double variance, double null_value, double alpha);

/// Standard normal CDF.
double normal_cdf(double x);

/// Interpolated percentile (quantile type 7) of a sample; used for the
/// bootstrap interval endpoints.
double percentile(std::vector<double> values, double prob);

}  // namespace gma
