// Command-line front end: dataset simulation and ingestion, single- and
// two-level fits, sensitivity curves, participant bootstrap, and the
// replication studies. Results are written as JSON (with the invocation
// echoed for reproducibility) plus CSV tables holding plot-ready data.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gma/dataset_io.hpp"
#include "gma/errors.hpp"
#include "gma/inference.hpp"
#include "gma/parallel.hpp"
#include "gma/rng.hpp"
#include "gma/run_config.hpp"
#include "gma/sim_harness.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace gma;

namespace {

struct CommonArgs {
    std::string out_dir;
    int jobs = default_jobs();
};

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw_data("cli: cannot create output directory '" + dir + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_data("cli: cannot write '" + path + "'");
    out << text;
}

void write_result(const std::string& dir, const ordered_json& result) {
    write_text(dir + "/result.json", result.dump(2) + "\n");
}

std::string csv_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ordered_json subject_fit_json(const std::string& id, const SingleLevelFit& fit,
                              const IndirectEffect* ab) {
    ordered_json j;
    j["id"] = id;
    j["delta"] = fit.delta;
    j["a"] = fit.theta.a();
    j["b"] = fit.theta.b;
    j["c"] = fit.theta.c();
    j["ab"] = fit.theta.a() * fit.theta.b;
    if (ab) j["ab_ci"] = {ab->ci_lo, ab->ci_hi};
    j["sigma1_sq"] = fit.sigma1_sq;
    j["sigma2_sq"] = fit.sigma2_sq;
    j["kappa"] = fit.kappa;
    j["loglik"] = fit.loglik;
    ordered_json omegas = ordered_json::array();
    for (const auto& om : fit.omegas_hat)
        omegas.push_back({om(0, 0), om(0, 1), om(1, 0), om(1, 1)});
    j["omega"] = omegas;
    return j;
}

MultiSubjectDataset load_input(const std::string& path, bool demean) {
    MultiSubjectDataset data = read_dataset(path);
    if (demean) demean_subjects(data);
    return data;
}

std::vector<double> parse_grid(const std::string& text) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3)
        throw_usage("cli: grid must have the form LO:HI:STEP");
    if (!(step > 0) || hi < lo) throw_usage("cli: grid needs step > 0 and HI >= LO");
    std::vector<double> grid;
    for (double v = lo; v <= hi + 1e-12; v += step) grid.push_back(v);
    return grid;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const std::string& scenario, double delta, int n, int t, int reps,
                 std::uint64_t seed, const CommonArgs& common, const RunConfig& cfg) {
    ensure_out_dir(common.out_dir);
    NoiseCov noise(1.0, 2.0, delta);
    MarSpec mar({scenario_transition(noise)}, noise);

    std::vector<std::string> names(static_cast<std::size_t>(reps));
    parallel_for(reps, common.jobs, [&](int r) {
        ScenarioSpec spec;
        spec.path = {0.5, -1.0, 0.5};
        spec.mar = mar;
        spec.seed = derive_seed({seed, static_cast<std::uint64_t>(r)});
        MultiSubjectDataset data;
        if (scenario == "table1") {
            spec.T = t;
            spec.burn_in = 1000;
            data.subjects.push_back(simulate_single(spec));
        } else {
            spec.two_level = true;
            spec.n_subjects = n;
            spec.t_poisson = true;
            spec.t_mean = t;
            spec.lambda = Eigen::Vector3d::Constant(0.5);
            spec.burn_in = 2000;
            data = simulate_two_level(spec);
        }
        std::string name = reps == 1 ? "dataset.csv"
                                     : "dataset_" + std::to_string(r + 1) + ".csv";
        write_dataset(data, common.out_dir + "/" + name);
        names[static_cast<std::size_t>(r)] = name;
    });
    ordered_json files = ordered_json::array();
    for (const std::string& name : names) files.push_back(name);

    ordered_json result;
    result["kind"] = "simulate";
    result["config"] = cfg.to_json();
    result["files"] = files;
    result["seed"] = seed;
    write_result(common.out_dir, result);
    return 0;
}

// ---------------------------------------------------------------------------
// fit

int cmd_fit(const std::string& input, int p, const std::string& level,
            const std::string& method, bool have_delta, double delta, bool demean,
            const CommonArgs& common, const RunConfig& cfg) {
    if (level == "single" && !have_delta)
        throw_usage("cli: fit --level single requires --delta (the sensitivity value is not "
                    "identifiable from one subject)");
    ensure_out_dir(common.out_dir);
    MultiSubjectDataset data = load_input(input, demean);

    ordered_json result;
    result["kind"] = "fit";
    result["config"] = cfg.to_json();
    result["level"] = level;

    if (level == "single") {
        const int n_sub = data.size();
        std::vector<ordered_json> per_subject(static_cast<std::size_t>(n_sub));
        parallel_for(n_sub, common.jobs, [&](int i) {
            const SubjectSeries& s = data.subjects[static_cast<std::size_t>(i)];
            SingleLevelFit fit = fit_cmle(s, p, delta);
            IndirectEffect ab = indirect_effect(fit);
            per_subject[static_cast<std::size_t>(i)] = subject_fit_json(s.id, fit, &ab);
        });
        result["subjects"] = per_subject;
        write_result(common.out_dir, result);
        return 0;
    }

    TwoLevelMethod m = method == "bcd" ? TwoLevelMethod::bcd : TwoLevelMethod::two_stage;
    TwoLevelEngine engine(data, p);
    TwoLevelFit fit;
    if (have_delta) {
        fit = engine.two_stage(delta);
        if (m == TwoLevelMethod::bcd) fit = engine.bcd(delta, &fit, 1e-11, 500);
    } else {
        SearchOpts search;
        fit = m == TwoLevelMethod::bcd ? engine.profile_bcd(search) : engine.profile_ts(search);
        // joint-likelihood profile over the scan grid, for plotting
        std::string profile_csv = "delta,h,h1,h2\n";
        for (int i = 0; i < search.grid_points; ++i) {
            double d =
                search.lo + (search.hi - search.lo) * i / (search.grid_points - 1);
            TwoLevelFit at;
            try {
                at = m == TwoLevelMethod::bcd
                         ? engine.bcd(d, nullptr, 0.0, search.bcd_sweeps)
                         : engine.two_stage(d, /*with_subject_fits=*/false);
            } catch (const Error&) {
                continue;
            }
            profile_csv += csv_num(d) + "," + csv_num(at.h) + "," + csv_num(at.h1) + "," +
                           csv_num(at.h2) + "\n";
        }
        write_text(common.out_dir + "/profile.csv", profile_csv);
    }
    PopulationEffects eff = population_effects(fit);

    result["delta_hat"] = fit.delta_hat;
    result["method"] = method;
    result["population"] = ordered_json{
        {"a", fit.population.b[0]},
        {"b", fit.population.b[1]},
        {"c", fit.population.b[2]},
        {"lambda", {fit.population.lambda(0, 0), fit.population.lambda(1, 1),
                    fit.population.lambda(2, 2)}}};
    result["effects"] = ordered_json{{"direct", eff.direct}, {"indirect", eff.indirect}};
    ordered_json omega_mean = ordered_json::array();
    for (const auto& om : eff.omega_mean)
        omega_mean.push_back({om(0, 0), om(0, 1), om(1, 0), om(1, 1)});
    result["omega_mean"] = omega_mean;
    result["h"] = fit.h;
    result["h1"] = fit.h1;
    result["h2"] = fit.h2;
    result["iterations"] = fit.iterations;
    result["converged"] = fit.converged;
    ordered_json subjects = ordered_json::array();
    for (std::size_t i = 0; i < fit.subject_fits.size(); ++i)
        subjects.push_back(subject_fit_json(data.subjects[i].id, fit.subject_fits[i], nullptr));
    result["subjects"] = subjects;
    write_result(common.out_dir, result);

    // per-subject coefficient table for plotting
    std::string csv = "subject_id,a,b,c,sigma1_sq,sigma2_sq";
    const int lags = static_cast<int>(fit.subject_fits.front().omegas_hat.size());
    for (int j = 1; j <= lags; ++j)
        for (const char* rc : {"11", "12", "21", "22"})
            csv += ",omega" + std::to_string(j) + "_" + rc;
    csv += "\n";
    for (std::size_t i = 0; i < fit.subject_fits.size(); ++i) {
        const SingleLevelFit& f = fit.subject_fits[i];
        csv += data.subjects[i].id + "," + csv_num(f.theta.a()) + "," + csv_num(f.theta.b) +
               "," + csv_num(f.theta.c()) + "," + csv_num(f.sigma1_sq) + "," +
               csv_num(f.sigma2_sq);
        for (const auto& om : f.omegas_hat)
            for (double v : {om(0, 0), om(0, 1), om(1, 0), om(1, 1)}) csv += "," + csv_num(v);
        csv += "\n";
    }
    write_text(common.out_dir + "/subjects.csv", csv);
    return 0;
}

// ---------------------------------------------------------------------------
// sensitivity

int cmd_sensitivity(const std::string& input, int p, const std::string& grid_text, bool demean,
                    const CommonArgs& common, const RunConfig& cfg) {
    ensure_out_dir(common.out_dir);
    std::vector<double> grid = parse_grid(grid_text);
    for (double d : grid)
        if (!(d > -1.0 && d < 1.0))
            throw_usage("cli: sensitivity grid must stay inside (-1, 1)");
    MultiSubjectDataset data = load_input(input, demean);

    ordered_json result;
    result["kind"] = "sensitivity";
    result["config"] = cfg.to_json();
    result["grid"] = grid;
    const int n_sub = data.size();
    std::vector<ordered_json> per_subject(static_cast<std::size_t>(n_sub));
    std::vector<std::string> per_subject_csv(static_cast<std::size_t>(n_sub));
    parallel_for(n_sub, common.jobs, [&](int i) {
        const SubjectSeries& s = data.subjects[static_cast<std::size_t>(i)];
        auto curve = sensitivity_curve(s, p, grid);
        ordered_json points = ordered_json::array();
        std::string rows;
        for (const auto& pt : curve) {
            points.push_back(subject_fit_json(s.id, pt.fit, &pt.ab));
            rows += s.id + "," + csv_num(pt.delta) + "," + csv_num(pt.fit.loglik) + "," +
                    csv_num(pt.fit.theta.a()) + "," + csv_num(pt.fit.theta.b) + "," +
                    csv_num(pt.fit.theta.c()) + "," + csv_num(pt.ab.ab) + "," +
                    csv_num(pt.ab.ci_lo) + "," + csv_num(pt.ab.ci_hi) + "," +
                    csv_num(pt.fit.sigma1_sq) + "," + csv_num(pt.fit.sigma2_sq) + "\n";
        }
        per_subject[static_cast<std::size_t>(i)] = ordered_json{{"id", s.id}, {"points", points}};
        per_subject_csv[static_cast<std::size_t>(i)] = std::move(rows);
    });
    std::string csv = "subject_id,delta,loglik,a,b,c,ab,ab_lo,ab_hi,sigma1_sq,sigma2_sq\n";
    for (const std::string& rows : per_subject_csv) csv += rows;
    result["subjects"] = per_subject;
    write_result(common.out_dir, result);
    write_text(common.out_dir + "/sensitivity.csv", csv);
    return 0;
}

// ---------------------------------------------------------------------------
// bootstrap

int cmd_bootstrap(const std::string& input, int p, const std::string& method, int b_reps,
                  std::uint64_t seed, bool demean, const CommonArgs& common,
                  const RunConfig& cfg) {
    ensure_out_dir(common.out_dir);
    MultiSubjectDataset data = load_input(input, demean);
    TwoLevelMethod m = method == "bcd" ? TwoLevelMethod::bcd : TwoLevelMethod::two_stage;
    BootstrapOpts opts;
    opts.jobs = common.jobs;
    auto results = bootstrap_population(data, p, m, b_reps, seed, opts);

    ordered_json result;
    result["kind"] = "bootstrap";
    result["config"] = cfg.to_json();
    result["method"] = method;
    result["replicates"] = b_reps;
    result["seed"] = seed;
    ordered_json targets = ordered_json::array();
    for (const auto& t : results) {
        int missing = 0;
        for (double v : t.replicates) missing += std::isnan(v) ? 1 : 0;
        targets.push_back(ordered_json{{"target", t.target},
                                       {"point", t.point},
                                       {"ci_lo", t.ci_lo},
                                       {"ci_hi", t.ci_hi},
                                       {"missing", missing}});
    }
    result["targets"] = targets;
    write_result(common.out_dir, result);

    std::string csv = "replicate";
    for (const auto& t : results) csv += "," + t.target;
    csv += "\n";
    for (int r = 0; r < b_reps; ++r) {
        csv += std::to_string(r + 1);
        for (const auto& t : results) {
            double v = t.replicates[static_cast<std::size_t>(r)];
            csv += ",";
            if (!std::isnan(v)) csv += csv_num(v);
        }
        csv += "\n";
    }
    write_text(common.out_dir + "/bootstrap_replicates.csv", csv);
    return 0;
}

// ---------------------------------------------------------------------------
// replicate

int cmd_replicate(const std::string& study, int reps, std::uint64_t seed,
                  const CommonArgs& common, const RunConfig& cfg) {
    ensure_out_dir(common.out_dir);
    ordered_json result;
    result["kind"] = "replicate";
    result["config"] = cfg.to_json();
    result["study"] = study;
    result["seed"] = seed;
    result["reps"] = reps;

    if (study == "table1") {
        auto table = replicate_table1(reps, seed, common.jobs);
        ordered_json blocks = ordered_json::array();
        std::string csv =
            "block,delta,method,c_mean,c_se,c_power,ab_mean,ab_se,ab_power,"
            "sigma1_sq_mean,sigma2_sq_mean,omega_11,omega_12,omega_21,omega_22\n";
        for (const auto& blk : table) {
            ordered_json rows = ordered_json::array();
            for (const auto& row : blk.rows) {
                ordered_json r{{"method", row.method},
                               {"c_mean", row.c_mean},
                               {"c_se", row.c_se},
                               {"c_power", row.c_power},
                               {"ab_mean", row.ab_mean},
                               {"ab_se", row.ab_se},
                               {"ab_power", row.ab_power},
                               {"sigma1_sq_mean", row.sigma1_sq_mean},
                               {"sigma2_sq_mean", row.sigma2_sq_mean}};
                r["omega_mean"] = row.omega_mean;
                rows.push_back(r);
                csv += blk.name + "," + csv_num(blk.delta) + "," + row.method + "," +
                       csv_num(row.c_mean) + "," + csv_num(row.c_se) + "," +
                       csv_num(row.c_power) + "," + csv_num(row.ab_mean) + "," +
                       csv_num(row.ab_se) + "," + csv_num(row.ab_power) + "," +
                       csv_num(row.sigma1_sq_mean) + "," + csv_num(row.sigma2_sq_mean);
                if (row.omega_mean.size() == 4)
                    for (double v : row.omega_mean) csv += "," + csv_num(v);
                else
                    csv += ",,,,";
                csv += "\n";
            }
            blocks.push_back(ordered_json{{"name", blk.name},
                                          {"delta", blk.delta},
                                          {"truth",
                                           ordered_json{{"a", blk.truth.a},
                                                        {"b", blk.truth.b},
                                                        {"c", blk.truth.c}}},
                                          {"omega_true", blk.omega_true},
                                          {"rows", rows}});
        }
        result["blocks"] = blocks;
        write_result(common.out_dir, result);
        write_text(common.out_dir + "/table1.csv", csv);
        return 0;
    }

    TwoLevelStudy kind =
        study == "consistency" ? TwoLevelStudy::consistency : TwoLevelStudy::delta_sweep;
    auto cells = replicate_two_level(kind, reps, seed, common.jobs);
    ordered_json jcells = ordered_json::array();
    std::string csv =
        "delta_true,n_subjects,t_mean,method,delta_mean,delta_bias,delta_mse,"
        "ab_mean,ab_bias,ab_mse,omega_11,omega_12,omega_21,omega_22\n";
    auto stats_json = [](const TwoLevelMethodStats& s) {
        ordered_json j{{"delta_mean", s.delta_mean}, {"delta_bias", s.delta_bias},
                       {"delta_mse", s.delta_mse},   {"ab_mean", s.ab_mean},
                       {"ab_bias", s.ab_bias},       {"ab_mse", s.ab_mse}};
        j["omega_mean"] = s.omega_mean;
        return j;
    };
    for (const auto& c : cells) {
        jcells.push_back(ordered_json{{"delta_true", c.delta_true},
                                      {"n_subjects", c.n_subjects},
                                      {"t_mean", c.t_mean},
                                      {"t_fixed", c.t_fixed},
                                      {"reps", c.reps},
                                      {"omega_true", c.omega_true},
                                      {"ts", stats_json(c.ts)},
                                      {"bcd", stats_json(c.bcd)}});
        for (const char* name : {"ts", "bcd"}) {
            const TwoLevelMethodStats& s = std::string(name) == "ts" ? c.ts : c.bcd;
            csv += csv_num(c.delta_true) + "," + std::to_string(c.n_subjects) + "," +
                   csv_num(c.t_mean) + "," + name + "," + csv_num(s.delta_mean) + "," +
                   csv_num(s.delta_bias) + "," + csv_num(s.delta_mse) + "," +
                   csv_num(s.ab_mean) + "," + csv_num(s.ab_bias) + "," + csv_num(s.ab_mse);
            for (double v : s.omega_mean) csv += "," + csv_num(v);
            csv += "\n";
        }
    }
    result["cells"] = jcells;
    write_result(common.out_dir, result);
    write_text(common.out_dir + "/cells.csv", csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Granger mediation analysis for treatment/mediator/outcome time series"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "generate benchmark datasets");
    std::string sim_scenario = "table1";
    double sim_delta = 0.5;
    int sim_n = 50, sim_t = 100, sim_reps = 1;
    std::uint64_t sim_seed = 1;
    CommonArgs sim_common;
    sim->add_option("--scenario", sim_scenario)->check(CLI::IsMember({"table1", "two-level"}));
    sim->add_option("--delta", sim_delta, "innovation correlation");
    sim->add_option("--n", sim_n, "number of subjects (two-level)");
    sim->add_option("--t", sim_t, "series length (table1) or mean length (two-level)");
    sim->add_option("--reps", sim_reps, "number of datasets");
    sim->add_option("--seed", sim_seed);
    sim->add_option("--out", sim_common.out_dir)->required();
    sim->add_option("--jobs", sim_common.jobs);

    auto* fit = app.add_subcommand("fit", "fit the mediation model");
    std::string fit_input, fit_level = "single", fit_method = "ts";
    int fit_p = 1;
    double fit_delta = 0.0;
    bool fit_demean = false;
    CommonArgs fit_common;
    auto* fit_delta_opt = fit->add_option("--delta", fit_delta, "sensitivity value");
    fit->add_option("--input", fit_input)->required();
    fit->add_option("--p", fit_p, "lag order");
    fit->add_option("--level", fit_level)->check(CLI::IsMember({"single", "multi"}));
    fit->add_option("--method", fit_method)->check(CLI::IsMember({"ts", "bcd"}));
    fit->add_flag("--demean", fit_demean, "remove per-subject means before fitting");
    fit->add_option("--out", fit_common.out_dir)->required();
    fit->add_option("--jobs", fit_common.jobs);

    auto* sens = app.add_subcommand("sensitivity", "sweep the sensitivity parameter");
    std::string sens_input, sens_grid = "-0.9:0.9:0.1";
    int sens_p = 1;
    bool sens_demean = false;
    CommonArgs sens_common;
    sens->add_option("--input", sens_input)->required();
    sens->add_option("--p", sens_p);
    sens->add_option("--grid", sens_grid, "LO:HI:STEP, endpoints inclusive");
    sens->add_flag("--demean", sens_demean);
    sens->add_option("--out", sens_common.out_dir)->required();
    sens->add_option("--jobs", sens_common.jobs);

    auto* boot = app.add_subcommand("bootstrap", "participant bootstrap of population effects");
    std::string boot_input, boot_method = "ts";
    int boot_p = 1, boot_b = 200;
    std::uint64_t boot_seed = 1;
    bool boot_demean = false;
    CommonArgs boot_common;
    boot->add_option("--input", boot_input)->required();
    boot->add_option("--p", boot_p);
    boot->add_option("--method", boot_method)->check(CLI::IsMember({"ts", "bcd"}));
    boot->add_option("--b", boot_b, "bootstrap replicates");
    boot->add_option("--seed", boot_seed);
    boot->add_flag("--demean", boot_demean);
    boot->add_option("--out", boot_common.out_dir)->required();
    boot->add_option("--jobs", boot_common.jobs);

    auto* rep = app.add_subcommand("replicate", "replication studies");
    std::string rep_study;
    int rep_reps = 1000;
    std::uint64_t rep_seed = 1;
    CommonArgs rep_common;
    rep->add_option("study", rep_study)
        ->required()
        ->check(CLI::IsMember({"table1", "two-level-bias", "consistency"}));
    rep->add_option("--reps", rep_reps);
    rep->add_option("--seed", rep_seed);
    rep->add_option("--out", rep_common.out_dir)->required();
    rep->add_option("--jobs", rep_common.jobs);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) {
            RunConfig cfg{"simulate",
                          {{"scenario", sim_scenario},
                           {"delta", sim_delta},
                           {"n", sim_n},
                           {"t", sim_t},
                           {"reps", sim_reps},
                           {"seed", sim_seed},
                           {"out", sim_common.out_dir}}};
            return cmd_simulate(sim_scenario, sim_delta, sim_n, sim_t, sim_reps, sim_seed,
                                sim_common, cfg);
        }
        if (fit->parsed()) {
            const bool have_delta = fit_delta_opt->count() > 0;
            RunConfig cfg{"fit",
                          {{"input", fit_input},
                           {"p", fit_p},
                           {"level", fit_level},
                           {"method", fit_method},
                           {"demean", fit_demean},
                           {"out", fit_common.out_dir}}};
            if (have_delta) cfg.options["delta"] = fit_delta;
            return cmd_fit(fit_input, fit_p, fit_level, fit_method, have_delta, fit_delta,
                           fit_demean, fit_common, cfg);
        }
        if (sens->parsed()) {
            RunConfig cfg{"sensitivity",
                          {{"input", sens_input},
                           {"p", sens_p},
                           {"grid", sens_grid},
                           {"demean", sens_demean},
                           {"out", sens_common.out_dir}}};
            return cmd_sensitivity(sens_input, sens_p, sens_grid, sens_demean, sens_common, cfg);
        }
        if (boot->parsed()) {
            RunConfig cfg{"bootstrap",
                          {{"input", boot_input},
                           {"p", boot_p},
                           {"method", boot_method},
                           {"b", boot_b},
                           {"seed", boot_seed},
                           {"demean", boot_demean},
                           {"out", boot_common.out_dir},
                           {"jobs", boot_common.jobs}}};
            return cmd_bootstrap(boot_input, boot_p, boot_method, boot_b, boot_seed, boot_demean,
                                 boot_common, cfg);
        }
        if (rep->parsed()) {
            RunConfig cfg{"replicate",
                          {{"study", rep_study},
                           {"reps", rep_reps},
                           {"seed", rep_seed},
                           {"out", rep_common.out_dir},
                           {"jobs", rep_common.jobs}}};
            return cmd_replicate(rep_study, rep_reps, rep_seed, rep_common, cfg);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case Error::Kind::usage:
                return 2;
            case Error::Kind::data:
                return 3;
            case Error::Kind::numeric:
                return 4;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
