#include "gma/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gma/errors.hpp"
#include "gma/parallel.hpp"
#include "gma/rng.hpp"

namespace gma {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

WaldTest wald_test(double estimate, double variance, double null_value, double alpha) {
    if (!(variance > 0.0)) throw_data("inference: Wald test needs a positive variance");
    if (!(alpha > 0.0 && alpha < 1.0)) throw_data("inference: alpha must lie in (0, 1)");
    WaldTest out;
    out.z = (estimate - null_value) / std::sqrt(variance);
    out.p_value = std::erfc(std::abs(out.z) / std::sqrt(2.0));
    out.reject = out.p_value < alpha;
    return out;
}

double percentile(std::vector<double> values, double prob) {
    if (values.empty()) throw_data("inference: percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = prob * (values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - lo;
    return (1.0 - frac) * values[lo] + frac * values[hi];
}

namespace {

struct ReplicateRecord {
    bool ok = false;
    std::vector<double> values;
};

std::vector<std::string> target_names(int p) {
    std::vector<std::string> names = {"delta", "A", "B", "C", "AB", "direct"};
    for (int j = 1; j <= p; ++j)
        for (const char* rc : {"11", "12", "21", "22"})
            names.push_back("omega" + std::to_string(j) + "_" + rc);
    return names;
}

std::vector<double> extract_targets(const TwoLevelFit& fit, int p) {
    PopulationEffects eff = population_effects(fit);
    std::vector<double> v = {fit.delta_hat,        fit.population.b[0], fit.population.b[1],
                             fit.population.b[2],  eff.indirect,        eff.direct};
    for (int j = 0; j < p; ++j) {
        const Eigen::Matrix2d& om = eff.omega_mean[static_cast<std::size_t>(j)];
        v.push_back(om(0, 0));
        v.push_back(om(0, 1));
        v.push_back(om(1, 0));
        v.push_back(om(1, 1));
    }
    return v;
}

TwoLevelFit run_pipeline(const TwoLevelEngine& engine, TwoLevelMethod method,
                         const SearchOpts& search) {
    return method == TwoLevelMethod::two_stage ? engine.profile_ts(search)
                                               : engine.profile_bcd(search);
}

}  // namespace

std::vector<BootstrapResult> bootstrap_population(const MultiSubjectDataset& data, int p,
                                                  TwoLevelMethod method, int B,
                                                  std::uint64_t seed,
                                                  const BootstrapOpts& opts) {
    if (B < 20) throw_data("inference: need at least 20 bootstrap replicates");
    TwoLevelEngine engine(data, p);
    const int n_sub = engine.num_subjects();

    const std::vector<std::string> names = target_names(p);
    const std::vector<double> point = extract_targets(run_pipeline(engine, method, opts.search), p);

    std::vector<ReplicateRecord> records(static_cast<std::size_t>(B));
    parallel_for(B, opts.jobs, [&](int r) {
        Rng rng(derive_seed({seed, static_cast<std::uint64_t>(r)}));
        std::vector<const SubjectCore*> resampled(static_cast<std::size_t>(n_sub));
        for (int i = 0; i < n_sub; ++i)
            resampled[static_cast<std::size_t>(i)] = &engine.core(rng.below(n_sub));
        ReplicateRecord& rec = records[static_cast<std::size_t>(r)];
        try {
            TwoLevelEngine boot(std::move(resampled), p);
            rec.values = extract_targets(run_pipeline(boot, method, opts.search), p);
            rec.ok = true;
        } catch (const Error&) {
            rec.ok = false;
        }
    });

    int failures = 0;
    for (const auto& rec : records) failures += rec.ok ? 0 : 1;
    if (failures * 10 > B)
        throw_numeric("inference: " + std::to_string(failures) + " of " + std::to_string(B) +
                      " bootstrap replicates failed (more than 10%)");

    std::vector<BootstrapResult> out;
    out.reserve(names.size());
    for (std::size_t t = 0; t < names.size(); ++t) {
        BootstrapResult res;
        res.target = names[t];
        res.point = point[t];
        res.seed = seed;
        res.replicates.reserve(records.size());
        std::vector<double> valid;
        valid.reserve(records.size());
        for (const auto& rec : records) {
            if (rec.ok) {
                res.replicates.push_back(rec.values[t]);
                valid.push_back(rec.values[t]);
            } else {
                res.replicates.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
        res.ci_lo = percentile(valid, 0.025);
        res.ci_hi = percentile(valid, 0.975);
        out.push_back(std::move(res));
    }
    return out;
}

}  // namespace gma
