#include "gma/sim_harness.hpp"

#include <cmath>

#include "gma/errors.hpp"
#include "gma/inference.hpp"
#include "gma/parallel.hpp"
#include "gma/rng.hpp"

namespace gma {

Eigen::Matrix2d scenario_transition(const NoiseCov& noise) {
    const double d_target = std::abs(noise.delta);
    Eigen::Matrix2d omega;
    omega << -0.5, -1.0, 0.25, -0.5;  // exact solution at delta = 0
    double d = 0.0;
    while (d < d_target - 1e-12) {
        d = std::min(d + 0.1, d_target);
        NoiseCov step(noise.sigma1, noise.sigma2, d);
        omega = solve_transition(step, 0.25 - 0.192 * d, omega);
    }
    if (noise.delta < 0.0) {
        omega(0, 1) = -omega(0, 1);
        omega(1, 0) = -omega(1, 0);
    }
    return omega;
}

namespace {

SubjectSeries simulate_subject(const std::string& id, const PathCoefficients& path,
                               const MarSpec& mar, int T, int burn_in, ZCoding coding,
                               std::uint64_t seed) {
    ErrorSeries err = simulate_errors(mar, T, burn_in, derive_seed({seed, 0x5e71e5ULL}));
    Rng z_rng(derive_seed({seed, 0x2aULL}));
    SubjectSeries s;
    s.id = id;
    s.z.resize(T);
    for (int t = 0; t < T; ++t) {
        double z = z_rng.bernoulli(0.5) ? 1.0 : 0.0;
        s.z[t] = coding == ZCoding::bernoulli01 ? z : z - 0.5;
    }
    s.m = path.a * s.z + err.e1;
    s.r = path.c * s.z + path.b * s.m + err.e2;
    return s;
}

}  // namespace

SubjectSeries simulate_single(const ScenarioSpec& spec) {
    return simulate_subject("subj1", spec.path, spec.mar, spec.T, spec.burn_in, spec.z_coding,
                            spec.seed);
}

MultiSubjectDataset simulate_two_level(const ScenarioSpec& spec, TwoLevelSimTruth* truth) {
    if (spec.n_subjects < 2) throw_data("sim-harness: two-level scenario needs N >= 2");
    MultiSubjectDataset data;
    data.subjects.reserve(static_cast<std::size_t>(spec.n_subjects));
    if (truth) {
        truth->subject_b.clear();
        truth->lengths.clear();
    }
    for (int i = 0; i < spec.n_subjects; ++i) {
        Rng draw(derive_seed({spec.seed, static_cast<std::uint64_t>(i), 1}));
        Eigen::Vector3d b_i{spec.path.a, spec.path.b, spec.path.c};
        for (int j = 0; j < 3; ++j) b_i[j] += std::sqrt(spec.lambda[j]) * draw.normal();
        int T_i = spec.T;
        if (spec.t_poisson) {
            do {
                T_i = draw.poisson(spec.t_mean);
            } while (T_i < 20);
        }
        PathCoefficients path_i{b_i[0], b_i[1], b_i[2]};
        data.subjects.push_back(
            simulate_subject("subj" + std::to_string(i + 1), path_i, spec.mar, T_i, spec.burn_in,
                             spec.z_coding,
                             derive_seed({spec.seed, static_cast<std::uint64_t>(i), 2})));
        if (truth) {
            truth->subject_b.push_back(b_i);
            truth->lengths.push_back(T_i);
        }
    }
    return data;
}

AsymptoticZ plugin_asymptotic_z(const SubjectCore& core, const SingleLevelFit& fit) {
    const int k = 3 * core.p + 1;
    const int dim = 2 * k + 1;
    double var_c = 0.0, var_ab = 0.0;
    bool plugin_ok = false;
    MarSpec plugin(fit.omegas_hat,
                   NoiseCov(std::sqrt(fit.sigma1_sq), std::sqrt(fit.sigma2_sq), fit.delta));
    if (core.p == 0 || is_stationary(plugin).stationary) {
        Eigen::MatrixXd info =
            fisher_information_theoretical(fit.path(), plugin, core.zsq_mean, core.p);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(dim, dim)) / core.n;
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
            grad[0] = fit.theta.b;
            grad[dim - 1] = fit.theta.a();
            var_c = cov(k, k);
            var_ab = grad.dot(cov * grad);
            plugin_ok = var_c > 0.0 && var_ab > 0.0;
        }
    }
    if (!plugin_ok) {
        if (!fit.vcov) throw_numeric("sim-harness: no covariance available for the Wald tests");
        const Eigen::MatrixXd& v = *fit.vcov;
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
        grad[0] = fit.theta.b;
        grad[dim - 1] = fit.theta.a();
        var_c = v(k, k);
        var_ab = grad.dot(v * grad);
    }
    AsymptoticZ z;
    z.z_c = fit.theta.c() / std::sqrt(var_c);
    z.z_ab = fit.theta.a() * fit.theta.b / std::sqrt(var_ab);
    return z;
}

namespace {

constexpr double kZCrit = 1.959963984540054;

struct Table1Rep {
    // per estimator: c, ab, s1sq, s2sq, z_c, z_ab, omega entries (4)
    double gma_d[10] = {};
    double gma_0[10] = {};
    double bk[6] = {};  // no omega
    bool ok = false;
};

void record_gma(double out[10], const SubjectCore& core, const SingleLevelFit& fit) {
    AsymptoticZ z = plugin_asymptotic_z(core, fit);
    out[0] = fit.theta.c();
    out[1] = fit.theta.a() * fit.theta.b;
    out[2] = fit.sigma1_sq;
    out[3] = fit.sigma2_sq;
    out[4] = z.z_c;
    out[5] = z.z_ab;
    const Eigen::Matrix2d& om = fit.omegas_hat.front();
    out[6] = om(0, 0);
    out[7] = om(0, 1);
    out[8] = om(1, 0);
    out[9] = om(1, 1);
}

struct BlockSpec {
    std::string name;
    double delta;
    PathCoefficients path;
};

EstimatorSummary reduce_rows(const std::string& method, const std::vector<Table1Rep>& reps,
                             int which) {
    // which: 0 = gma_d, 1 = gma_0, 2 = bk
    EstimatorSummary s;
    s.method = method;
    int n = 0;
    double c_sum = 0, c_sq = 0, ab_sum = 0, ab_sq = 0, s1 = 0, s2 = 0;
    double rej_c = 0, rej_ab = 0;
    double om[4] = {0, 0, 0, 0};
    for (const auto& r : reps) {
        if (!r.ok) continue;
        const double* v = which == 0 ? r.gma_d : which == 1 ? r.gma_0 : r.bk;
        ++n;
        c_sum += v[0];
        c_sq += v[0] * v[0];
        ab_sum += v[1];
        ab_sq += v[1] * v[1];
        s1 += v[2];
        s2 += v[3];
        rej_c += std::abs(v[4]) > kZCrit ? 1.0 : 0.0;
        rej_ab += std::abs(v[5]) > kZCrit ? 1.0 : 0.0;
        if (which != 2)
            for (int j = 0; j < 4; ++j) om[j] += v[6 + j];
    }
    if (n == 0) throw_numeric("sim-harness: all replicates failed");
    s.c_mean = c_sum / n;
    s.c_se = std::sqrt(std::max(c_sq / n - s.c_mean * s.c_mean, 0.0));
    s.ab_mean = ab_sum / n;
    s.ab_se = std::sqrt(std::max(ab_sq / n - s.ab_mean * s.ab_mean, 0.0));
    s.c_power = rej_c / n;
    s.ab_power = rej_ab / n;
    s.sigma1_sq_mean = s1 / n;
    s.sigma2_sq_mean = s2 / n;
    if (which != 2) s.omega_mean.assign(om, om + 4);
    for (double& v : s.omega_mean) v /= n;
    return s;
}

}  // namespace

std::vector<ScenarioSummary> replicate_table1(int reps, std::uint64_t seed, int jobs) {
    if (reps < 100) throw_data("sim-harness: benchmark table needs at least 100 replicates");
    const std::vector<BlockSpec> blocks = {
        {"delta05", 0.5, {0.5, -1.0, 0.5}},
        {"delta05_B0", 0.5, {0.5, 0.0, 0.5}},
        {"delta05_C0", 0.5, {0.5, -1.0, 0.0}},
        {"delta0", 0.0, {0.5, -1.0, 0.5}},
    };
    std::vector<ScenarioSummary> out;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        const BlockSpec& blk = blocks[bi];
        NoiseCov noise(1.0, 2.0, blk.delta);
        MarSpec mar({scenario_transition(noise)}, noise);

        std::vector<Table1Rep> results(static_cast<std::size_t>(reps));
        parallel_for(reps, jobs, [&](int r) {
            ScenarioSpec spec;
            spec.path = blk.path;
            spec.mar = mar;
            spec.T = 100;
            spec.burn_in = 1000;
            spec.seed = derive_seed({seed, bi, static_cast<std::uint64_t>(r)});
            SubjectSeries series = simulate_single(spec);
            Table1Rep& rec = results[static_cast<std::size_t>(r)];
            try {
                SubjectCore core = make_subject_core(series, 1);
                record_gma(rec.gma_d, core, fit_from_core(core, blk.delta));
                record_gma(rec.gma_0, core, fit_from_core(core, 0.0));

                SubjectCore core0 = make_subject_core(series, 0);
                SingleLevelFit bk = fit_from_core(core0, 0.0);
                const Eigen::MatrixXd& v = *bk.vcov;
                rec.bk[0] = bk.theta.c();
                rec.bk[1] = bk.theta.a() * bk.theta.b;
                rec.bk[2] = bk.sigma1_sq;
                rec.bk[3] = bk.sigma2_sq;
                rec.bk[4] = bk.theta.c() / std::sqrt(v(1, 1));
                Eigen::Vector3d grad(bk.theta.b, 0.0, bk.theta.a());
                rec.bk[5] = bk.theta.a() * bk.theta.b / std::sqrt(grad.dot(v * grad));
                rec.ok = true;
            } catch (const Error&) {
                rec.ok = false;
            }
        });

        ScenarioSummary sum;
        sum.name = blk.name;
        sum.delta = blk.delta;
        sum.truth = blk.path;
        const Eigen::Matrix2d& om = mar.omegas.front();
        sum.omega_true = {om(0, 0), om(0, 1), om(1, 0), om(1, 1)};
        sum.reps = reps;
        sum.rows.push_back(reduce_rows("GMA-delta", results, 0));
        sum.rows.push_back(reduce_rows("GMA-0", results, 1));
        sum.rows.push_back(reduce_rows("BK", results, 2));
        out.push_back(std::move(sum));
    }
    return out;
}

namespace {

struct TwoLevelRep {
    bool ok = false;
    double delta_ts = 0.0, ab_ts = 0.0;
    double delta_bcd = 0.0, ab_bcd = 0.0;
    double om_ts[4] = {0, 0, 0, 0};
    double om_bcd[4] = {0, 0, 0, 0};
};

TwoLevelMethodStats reduce_method(const std::vector<TwoLevelRep>& reps, bool bcd,
                                  double delta_true, double ab_true) {
    TwoLevelMethodStats s;
    int n = 0;
    double d_sum = 0, d_sq = 0, ab_sum = 0, ab_sq = 0;
    double om[4] = {0, 0, 0, 0};
    for (const auto& r : reps) {
        if (!r.ok) continue;
        ++n;
        const double d = bcd ? r.delta_bcd : r.delta_ts;
        const double ab = bcd ? r.ab_bcd : r.ab_ts;
        const double* o = bcd ? r.om_bcd : r.om_ts;
        d_sum += d;
        d_sq += (d - delta_true) * (d - delta_true);
        ab_sum += ab;
        ab_sq += (ab - ab_true) * (ab - ab_true);
        for (int j = 0; j < 4; ++j) om[j] += o[j];
    }
    if (n == 0) throw_numeric("sim-harness: all two-level replicates failed");
    s.delta_mean = d_sum / n;
    s.delta_bias = s.delta_mean - delta_true;
    s.delta_mse = d_sq / n;
    s.ab_mean = ab_sum / n;
    s.ab_bias = s.ab_mean - ab_true;
    s.ab_mse = ab_sq / n;
    s.omega_mean.assign(om, om + 4);
    for (double& v : s.omega_mean) v /= n;
    return s;
}

TwoLevelCell run_two_level_cell(double delta_true, int n_subjects, double t_mean, bool t_fixed,
                                int reps, std::uint64_t seed, int jobs) {
    NoiseCov noise(1.0, 2.0, delta_true);
    MarSpec mar({scenario_transition(noise)}, noise);
    const PathCoefficients truth{0.5, -1.0, 0.5};
    const double ab_true = truth.a * truth.b;

    std::vector<TwoLevelRep> results(static_cast<std::size_t>(reps));
    parallel_for(reps, jobs, [&](int r) {
        ScenarioSpec spec;
        spec.two_level = true;
        spec.path = truth;
        spec.mar = mar;
        spec.n_subjects = n_subjects;
        spec.t_poisson = !t_fixed;
        spec.t_mean = t_mean;
        spec.T = static_cast<int>(t_mean);
        spec.lambda = Eigen::Vector3d::Constant(0.5);
        spec.burn_in = 2000;
        spec.seed = derive_seed({seed, static_cast<std::uint64_t>(n_subjects),
                                 static_cast<std::uint64_t>(r)});
        TwoLevelRep& rec = results[static_cast<std::size_t>(r)];
        try {
            MultiSubjectDataset data = simulate_two_level(spec);
            TwoLevelEngine engine(data, 1);
            TwoLevelFit ts = engine.profile_ts({});
            TwoLevelFit bc = engine.profile_bcd({});
            PopulationEffects ets = population_effects(ts);
            PopulationEffects ebc = population_effects(bc);
            rec.delta_ts = ts.delta_hat;
            rec.ab_ts = ets.indirect;
            rec.delta_bcd = bc.delta_hat;
            rec.ab_bcd = ebc.indirect;
            const Eigen::Matrix2d& mts = ets.omega_mean.front();
            const Eigen::Matrix2d& mbc = ebc.omega_mean.front();
            for (int j = 0; j < 4; ++j) {
                rec.om_ts[j] = mts(j / 2, j % 2);
                rec.om_bcd[j] = mbc(j / 2, j % 2);
            }
            rec.ok = true;
        } catch (const Error&) {
            rec.ok = false;
        }
    });

    TwoLevelCell cell;
    cell.delta_true = delta_true;
    cell.n_subjects = n_subjects;
    cell.t_mean = t_mean;
    cell.t_fixed = t_fixed;
    cell.reps = reps;
    const Eigen::Matrix2d& om = mar.omegas.front();
    cell.omega_true = {om(0, 0), om(0, 1), om(1, 0), om(1, 1)};
    cell.ts = reduce_method(results, false, delta_true, ab_true);
    cell.bcd = reduce_method(results, true, delta_true, ab_true);
    return cell;
}

}  // namespace

std::vector<TwoLevelCell> replicate_two_level(TwoLevelStudy kind, int reps, std::uint64_t seed,
                                              int jobs) {
    if (reps < 10) throw_data("sim-harness: two-level study needs at least 10 replicates");
    std::vector<TwoLevelCell> out;
    if (kind == TwoLevelStudy::delta_sweep) {
        for (double d : {-0.5, -0.25, 0.0, 0.25, 0.5})
            out.push_back(run_two_level_cell(d, 50, 100.0, /*t_fixed=*/false, reps,
                                             derive_seed({seed, 0xdeULL}), jobs));
    } else {
        for (int size : {50, 200, 500})
            out.push_back(run_two_level_cell(0.5, size, size, /*t_fixed=*/true, reps,
                                             derive_seed({seed, 0xc0ULL}), jobs));
    }
    return out;
}

}  // namespace gma
