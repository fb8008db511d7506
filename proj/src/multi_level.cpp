#include "gma/multi_level.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "gma/errors.hpp"

namespace gma {

namespace {

constexpr double kSigmaFloor = 1e-10;
constexpr double kLambdaFloor = 1e-8;
constexpr double kMonotoneSlack = 1e-10;

struct ResidualMoments {
    double e11 = 0.0;
    double e12 = 0.0;
    double e22 = 0.0;
};

/// Residual cross-moments of one subject at stacked coefficients, computed
/// from the cached design cross-products. Accumulated in extended precision:
/// the moments cancel heavily near a fitted point, and the sigma/theta
/// alternation is quadratically convergent, so its attainable fixed-point
/// accuracy is set directly by the rounding noise of these forms.
ResidualMoments residual_moments(const SubjectCore& core, const Eigen::VectorXd& theta) {
    const int k = 3 * core.p + 1;
    const double* t1 = theta.data();
    const double* t2 = theta.data() + k;
    const double b = theta[2 * k];

    auto dot1 = [&](const Eigen::VectorXd& v, const double* t) {
        long double acc = 0.0L;
        for (int i = 0; i < k; ++i) acc += static_cast<long double>(v[i]) * t[i];
        return acc;
    };
    auto quad = [&](const double* ta, const double* tb) {
        long double acc = 0.0L;
        for (int i = 0; i < k; ++i) {
            long double row = 0.0L;
            for (int j = 0; j < k; ++j)
                row += static_cast<long double>(core.xtx(i, j)) * tb[j];
            acc += static_cast<long double>(ta[i]) * row;
        }
        return acc;
    };

    const long double bl = b;
    ResidualMoments rm;
    rm.e11 = static_cast<double>(core.mtm - 2.0L * dot1(core.xtm, t1) + quad(t1, t1));
    rm.e22 = static_cast<double>(core.rtr + bl * bl * core.mtm + quad(t2, t2) -
                                 2.0L * bl * core.mtr - 2.0L * dot1(core.xtr, t2) +
                                 2.0L * bl * dot1(core.xtm, t2));
    rm.e12 = static_cast<double>(core.mtr - bl * core.mtm - dot1(core.xtm, t2) -
                                 dot1(core.xtr, t1) + bl * dot1(core.xtm, t1) + quad(t1, t2));
    return rm;
}

double subject_loglik(const SubjectCore& core, const Eigen::VectorXd& theta, double s1sq,
                      double s2sq, double delta) {
    const ResidualMoments rm = residual_moments(core, theta);
    const double one_md2 = 1.0 - delta * delta;
    const double kappa = delta * std::sqrt(s2sq / s1sq);
    const double quad = rm.e22 - 2.0 * kappa * rm.e12 + kappa * kappa * rm.e11;
    return -0.5 * core.n * std::log(s1sq * s2sq * one_md2) - rm.e11 / (2.0 * s1sq) -
           quad / (2.0 * s2sq * one_md2);
}

Eigen::Vector3d extract_b(const Eigen::VectorXd& theta, int p) {
    const int k = 3 * p + 1;
    return {theta[0], theta[2 * k], theta[k]};  // (A, B, C)
}

}  // namespace

Eigen::Vector3d TwoLevelFit::subject_b(int i) const {
    const SingleLevelFit& f = subject_fits[static_cast<std::size_t>(i)];
    return {f.theta.a(), f.theta.b, f.theta.c()};
}

TwoLevelEngine::TwoLevelEngine(const MultiSubjectDataset& data, int p) : p_(p) {
    if (data.size() < 2) throw_data("multi-level: need at least two subjects");
    owned_.reserve(data.subjects.size());
    cores_.reserve(data.subjects.size());
    for (const SubjectSeries& s : data.subjects) {
        owned_.push_back(std::make_unique<SubjectCore>(make_subject_core(s, p)));
        cores_.push_back(owned_.back().get());
    }
}

TwoLevelEngine::TwoLevelEngine(std::vector<const SubjectCore*> cores, int p)
    : cores_(std::move(cores)), p_(p) {
    if (cores_.size() < 2) throw_data("multi-level: need at least two subjects");
}

TwoLevelEngine::State TwoLevelEngine::init_two_stage(double delta) const {
    const int n_sub = num_subjects();
    State s;
    s.theta.reserve(n_sub);
    s.s1sq.reserve(n_sub);
    s.s2sq.reserve(n_sub);
    Eigen::Matrix<double, Eigen::Dynamic, 3> bis(n_sub, 3);
    for (int i = 0; i < n_sub; ++i) {
        SingleLevelFit fit = fit_from_core(core(i), delta, /*with_vcov=*/false);
        s.theta.push_back(fit.theta.stacked());
        s.s1sq.push_back(fit.sigma1_sq);
        s.s2sq.push_back(fit.sigma2_sq);
        bis.row(i) = extract_b(s.theta.back(), p_).transpose();
    }
    s.b = bis.colwise().mean().transpose();
    for (int j = 0; j < 3; ++j) {
        const double var = (bis.col(j).array() - s.b[j]).square().mean();
        s.lambda[j] = std::max(var, kLambdaFloor);
    }
    return s;
}

TwoLevelEngine::State TwoLevelEngine::state_from_fit(const TwoLevelFit& fit) const {
    if (static_cast<int>(fit.subject_fits.size()) != num_subjects())
        throw_data("multi-level: init fit does not match the dataset");
    State s;
    for (const SingleLevelFit& f : fit.subject_fits) {
        s.theta.push_back(f.theta.stacked());
        s.s1sq.push_back(f.sigma1_sq);
        s.s2sq.push_back(f.sigma2_sq);
    }
    s.b = fit.population.b;
    s.lambda = fit.population.lambda.diagonal().cwiseMax(kLambdaFloor);
    return s;
}

double TwoLevelEngine::h_value(const State& s, double delta, double* h1_out,
                               double* h2_out) const {
    long double h1 = 0.0L;
    for (int i = 0; i < num_subjects(); ++i)
        h1 += subject_loglik(core(i), s.theta[static_cast<std::size_t>(i)],
                             s.s1sq[static_cast<std::size_t>(i)],
                             s.s2sq[static_cast<std::size_t>(i)], delta);
    long double h2 = 0.0L;
    const int n_sub = num_subjects();
    for (int j = 0; j < 3; ++j) h2 -= 0.5L * n_sub * std::log(s.lambda[j]);
    for (int i = 0; i < n_sub; ++i) {
        Eigen::Vector3d dev = extract_b(s.theta[static_cast<std::size_t>(i)], p_) - s.b;
        for (int j = 0; j < 3; ++j) h2 -= 0.5L * dev[j] * dev[j] / s.lambda[j];
    }
    if (h1_out) *h1_out = static_cast<double>(h1);
    if (h2_out) *h2_out = static_cast<double>(h2);
    return static_cast<double>(h1 + h2);
}

void TwoLevelEngine::update_sigmas(State& s, double delta) const {
    const double one_md2 = 1.0 - delta * delta;
    for (int i = 0; i < num_subjects(); ++i) {
        const SubjectCore& c = core(i);
        const ResidualMoments rm = residual_moments(c, s.theta[static_cast<std::size_t>(i)]);
        const double s11 = std::max(rm.e11, kSigmaFloor);
        const double s22 = std::max(rm.e22, kSigmaFloor);
        const double denom = c.n * one_md2;
        const double v1 = (s11 - delta * rm.e12 * std::sqrt(s11 / s22)) / denom;
        const double v2 = (s22 - delta * rm.e12 * std::sqrt(s22 / s11)) / denom;
        if (!std::isfinite(v1) || !std::isfinite(v2))
            throw_numeric("multi-level: variance update produced a non-finite value for subject '" +
                          c.id + "'");
        s.s1sq[static_cast<std::size_t>(i)] = std::max(v1, kSigmaFloor);
        s.s2sq[static_cast<std::size_t>(i)] = std::max(v2, kSigmaFloor);
    }
}

Eigen::VectorXd bcd_theta_update(const SubjectCore& core, double delta, double s1sq,
                                 double s2sq, const Eigen::Vector3d& b,
                                 const Eigen::Vector3d& lambda_inv) {
    const int k = 3 * core.p + 1;
    const int dim = 2 * k + 1;
    const double one_md2 = 1.0 - delta * delta;
    const double c2 = s2sq * one_md2;
    const double kappa = delta * std::sqrt(s2sq / s1sq);

    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    lhs.topLeftCorner(k, k) = core.xtx / s1sq + (kappa * kappa / c2) * core.xtx;
    lhs.block(0, k, k, k) = -(kappa / c2) * core.xtx;
    lhs.block(k, 0, k, k) = -(kappa / c2) * core.xtx;
    lhs.block(k, k, k, k) = core.xtx / c2;
    lhs.block(0, 2 * k, k, 1) = -(kappa / c2) * core.xtm;
    lhs.block(2 * k, 0, 1, k) = -(kappa / c2) * core.xtm.transpose();
    lhs.block(k, 2 * k, k, 1) = core.xtm / c2;
    lhs.block(2 * k, k, 1, k) = core.xtm.transpose() / c2;
    lhs(2 * k, 2 * k) = core.mtm / c2;

    const Eigen::VectorXd xtr_adj = core.xtr - kappa * core.xtm;
    rhs.head(k) = core.xtm / s1sq - (kappa / c2) * xtr_adj;
    rhs.segment(k, k) = xtr_adj / c2;
    rhs[2 * k] = (core.mtr - kappa * core.mtm) / c2;

    // Random-effect prior on (A, B, C) = coordinates (0, 2k, k).
    lhs(0, 0) += lambda_inv[0];
    lhs(2 * k, 2 * k) += lambda_inv[1];
    lhs(k, k) += lambda_inv[2];
    rhs[0] += lambda_inv[0] * b[0];
    rhs[2 * k] += lambda_inv[1] * b[1];
    rhs[k] += lambda_inv[2] * b[2];

    Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
    if (ldlt.info() != Eigen::Success)
        throw_numeric("multi-level: coefficient update failed for subject '" + core.id + "'");
    Eigen::VectorXd theta = ldlt.solve(rhs);
    if (!theta.allFinite())
        throw_numeric("multi-level: coefficient update produced non-finite values for subject '" +
                      core.id + "'");
    return theta;
}

void TwoLevelEngine::update_thetas(State& s, double delta) const {
    const Eigen::Vector3d lambda_inv = s.lambda.cwiseInverse();
    for (int i = 0; i < num_subjects(); ++i)
        s.theta[static_cast<std::size_t>(i)] =
            bcd_theta_update(core(i), delta, s.s1sq[static_cast<std::size_t>(i)],
                             s.s2sq[static_cast<std::size_t>(i)], s.b, lambda_inv);
}

void TwoLevelEngine::update_b(State& s) const {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (int i = 0; i < num_subjects(); ++i)
        sum += extract_b(s.theta[static_cast<std::size_t>(i)], p_);
    s.b = sum / num_subjects();
}

void TwoLevelEngine::update_lambda(State& s) const {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (int i = 0; i < num_subjects(); ++i) {
        Eigen::Vector3d dev = extract_b(s.theta[static_cast<std::size_t>(i)], p_) - s.b;
        acc += dev.cwiseProduct(dev);
    }
    s.lambda = (acc / num_subjects()).cwiseMax(kLambdaFloor);
}

TwoLevelFit TwoLevelEngine::materialize(const State& s, double delta,
                                        TwoLevelMethod method) const {
    TwoLevelFit fit;
    fit.delta_hat = delta;
    fit.method = method;
    fit.subject_fits.reserve(cores_.size());
    for (int i = 0; i < num_subjects(); ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        SingleLevelFit sf;
        sf.delta = delta;
        sf.theta = ThetaVector::from_stacked(p_, s.theta[ui]);
        sf.sigma1_sq = s.s1sq[ui];
        sf.sigma2_sq = s.s2sq[ui];
        sf.kappa = delta * std::sqrt(s.s2sq[ui] / s.s1sq[ui]);
        sf.omegas_hat = recover_omegas(sf.theta);
        sf.loglik = subject_loglik(core(i), s.theta[ui], s.s1sq[ui], s.s2sq[ui], delta);
        fit.subject_fits.push_back(std::move(sf));
    }
    fit.population.b = s.b;
    fit.population.lambda = s.lambda.asDiagonal();
    fit.h = h_value(s, delta, &fit.h1, &fit.h2);
    return fit;
}

TwoLevelFit TwoLevelEngine::two_stage(double delta, bool with_subject_fits) const {
    State s = init_two_stage(delta);
    TwoLevelFit fit = materialize(s, delta, TwoLevelMethod::two_stage);
    fit.converged = true;
    if (!with_subject_fits) fit.subject_fits.clear();
    return fit;
}

double TwoLevelEngine::h_two_stage(double delta) const {
    State s = init_two_stage(delta);
    return h_value(s, delta);
}

namespace {

double state_distance(const std::vector<Eigen::VectorXd>& ta, const std::vector<double>& s1a,
                      const std::vector<double>& s2a, const std::vector<Eigen::VectorXd>& tb,
                      const std::vector<double>& s1b, const std::vector<double>& s2b) {
    double d = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        d = std::max(d, (ta[i] - tb[i]).cwiseAbs().maxCoeff());
        d = std::max(d, std::abs(s1a[i] - s1b[i]));
        d = std::max(d, std::abs(s2a[i] - s2b[i]));
    }
    return d;
}

}  // namespace

TwoLevelFit TwoLevelEngine::bcd(double delta, const TwoLevelFit* init, double tol,
                                int max_iter) const {
    State s = init ? state_from_fit(*init) : init_two_stage(delta);
    std::vector<double> trace;
    trace.push_back(h_value(s, delta));
    double h_sweep_prev = trace.front();
    bool converged = false;
    int sweeps = 0;

    auto record = [&](const char* block) {
        double h = h_value(s, delta);
        if (h < trace.back() - kMonotoneSlack)
            throw_numeric(std::string("multi-level: joint likelihood decreased in the ") + block +
                          " block update; update formulas are inconsistent");
        trace.push_back(h);
    };

    for (int it = 0; it < max_iter; ++it) {
        update_sigmas(s, delta);
        record("variance");
        update_thetas(s, delta);
        record("coefficient");
        update_b(s);
        record("population-mean");
        update_lambda(s);
        record("random-effect-variance");
        ++sweeps;
        const double h_now = trace.back();
        if (it > 0 && std::abs(h_now - h_sweep_prev) < tol * (1.0 + std::abs(h_now))) {
            converged = true;
            break;
        }
        h_sweep_prev = h_now;
    }

    if (converged) {
        // Interleaving the population updates can leave the per-subject pair
        // on a tiny floating-point limit cycle; with the population blocks
        // held fixed, the variance/coefficient alternation converges exactly.
        // Finish there, then close with one exact population update.
        for (int it = 0; it < 500; ++it) {
            std::vector<Eigen::VectorXd> theta_prev = s.theta;
            std::vector<double> s1_prev = s.s1sq, s2_prev = s.s2sq;
            update_sigmas(s, delta);
            record("variance");
            update_thetas(s, delta);
            record("coefficient");
            if (state_distance(s.theta, s.s1sq, s.s2sq, theta_prev, s1_prev, s2_prev) < 1e-14)
                break;
        }
        update_b(s);
        record("population-mean");
        update_lambda(s);
        record("random-effect-variance");
    }

    TwoLevelFit fit = materialize(s, delta, TwoLevelMethod::bcd);
    fit.iterations = sweeps;
    fit.converged = converged;
    fit.h_trace = std::move(trace);
    return fit;
}

double TwoLevelEngine::profile_eval(double delta, const SearchOpts& opts, bool use_bcd) const {
    if (!use_bcd) return h_two_stage(delta);
    State s = init_two_stage(delta);
    for (int it = 0; it < opts.bcd_sweeps; ++it) {
        update_sigmas(s, delta);
        update_thetas(s, delta);
        update_b(s);
        update_lambda(s);
    }
    return h_value(s, delta);
}

namespace {

/// Maximizes f on [lo, hi] to within tol; f is evaluated deterministically.
double golden_section(double lo, double hi, double tol,
                      const std::function<double(double)>& f) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c1 = b - inv_phi * (b - a);
    double c2 = a + inv_phi * (b - a);
    double f1 = f(c1), f2 = f(c2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + inv_phi * (b - a);
            f2 = f(c2);
        } else {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - inv_phi * (b - a);
            f1 = f(c1);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

namespace {

void validate_search(const SearchOpts& opts) {
    if (!(opts.lo > -1.0 && opts.hi < 1.0 && opts.lo < opts.hi))
        throw_data("multi-level: search bracket must lie inside (-1, 1)");
    if (opts.grid_points < 2) throw_data("multi-level: need at least two grid points");
    if (!(opts.tol > 0.0)) throw_data("multi-level: search tolerance must be positive");
    if (opts.bcd_sweeps < 1) throw_data("multi-level: need at least one refinement sweep");
}

}  // namespace

double TwoLevelEngine::profile_search(const SearchOpts& opts, bool use_bcd) const {
    validate_search(opts);
    // Coarse scan, then golden-section refinement between the neighbours of
    // the best grid point. Evaluations that fail are skipped.
    std::vector<double> grid(static_cast<std::size_t>(opts.grid_points));
    for (int i = 0; i < opts.grid_points; ++i)
        grid[static_cast<std::size_t>(i)] =
            opts.lo + (opts.hi - opts.lo) * i / (opts.grid_points - 1);
    double best_val = -std::numeric_limits<double>::infinity();
    int best_idx = -1;
    for (int i = 0; i < opts.grid_points; ++i) {
        double v;
        try {
            v = profile_eval(grid[static_cast<std::size_t>(i)], opts, use_bcd);
        } catch (const Error&) {
            continue;
        }
        if (std::isfinite(v) && v > best_val) {
            best_val = v;
            best_idx = i;
        }
    }
    if (best_idx < 0) throw_numeric("multi-level: every profile evaluation failed");
    const double lo = grid[static_cast<std::size_t>(std::max(best_idx - 1, 0))];
    const double hi = grid[static_cast<std::size_t>(std::min(best_idx + 1, opts.grid_points - 1))];
    return golden_section(lo, hi, opts.tol,
                          [&](double d) { return profile_eval(d, opts, use_bcd); });
}

TwoLevelFit TwoLevelEngine::profile_ts(const SearchOpts& opts) const {
    const double delta_hat = profile_search(opts, /*use_bcd=*/false);
    TwoLevelFit fit = two_stage(delta_hat);
    fit.converged = true;
    return fit;
}

TwoLevelFit TwoLevelEngine::profile_bcd(const SearchOpts& opts) const {
    const double delta_hat = profile_search(opts, /*use_bcd=*/true);
    return bcd(delta_hat, nullptr, 0.0, opts.bcd_sweeps);
}

TwoLevelFit two_stage_fixed_delta(const MultiSubjectDataset& data, int p, double delta) {
    return TwoLevelEngine(data, p).two_stage(delta);
}

TwoLevelFit profile_delta_ts(const MultiSubjectDataset& data, int p, const SearchOpts& opts) {
    return TwoLevelEngine(data, p).profile_ts(opts);
}

TwoLevelFit bcd_fixed_delta(const MultiSubjectDataset& data, int p, double delta,
                            const TwoLevelFit& init, double tol, int max_iter) {
    return TwoLevelEngine(data, p).bcd(delta, &init, tol, max_iter);
}

TwoLevelFit profile_delta_bcd(const MultiSubjectDataset& data, int p, const SearchOpts& opts) {
    return TwoLevelEngine(data, p).profile_bcd(opts);
}

PopulationEffects population_effects(const TwoLevelFit& fit) {
    PopulationEffects eff;
    eff.direct = fit.population.b[2];
    eff.indirect = fit.population.b[0] * fit.population.b[1];
    if (!fit.subject_fits.empty()) {
        const std::size_t p = fit.subject_fits.front().omegas_hat.size();
        eff.omega_mean.assign(p, Eigen::Matrix2d::Zero());
        for (const SingleLevelFit& sf : fit.subject_fits)
            for (std::size_t j = 0; j < p; ++j) eff.omega_mean[j] += sf.omegas_hat[j];
        for (std::size_t j = 0; j < p; ++j)
            eff.omega_mean[j] /= static_cast<double>(fit.subject_fits.size());
    }
    return eff;
}

}  // namespace gma
