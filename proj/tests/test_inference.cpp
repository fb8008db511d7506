#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gma/errors.hpp"
#include "gma/inference.hpp"
#include "gma/rng.hpp"
#include "gma/sim_harness.hpp"

using namespace gma;

namespace {

MultiSubjectDataset small_dataset(std::uint64_t seed, int n_subjects = 12) {
    NoiseCov noise(1.0, 2.0, 0.5);
    ScenarioSpec spec;
    spec.two_level = true;
    spec.path = {0.5, -1.0, 0.5};
    spec.mar = MarSpec({scenario_transition(noise)}, noise);
    spec.n_subjects = n_subjects;
    spec.t_poisson = true;
    spec.t_mean = 60;
    spec.lambda = Eigen::Vector3d::Constant(0.5);
    spec.burn_in = 500;
    spec.seed = seed;
    return simulate_two_level(spec);
}

}  // namespace

TEST_CASE("wald test basics") {
    WaldTest t0 = wald_test(0.0, 1.0, 0.0, 0.05);
    CHECK(t0.z == 0.0);
    CHECK(t0.p_value == doctest::Approx(1.0));
    CHECK_FALSE(t0.reject);

    // boundary: the 97.5% quantile gives p == alpha up to rounding
    WaldTest tb = wald_test(1.959964 * 2.0, 4.0, 0.0, 0.05);
    CHECK(tb.p_value == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(tb.reject == (tb.p_value < 0.05));

    // antisymmetry: only |estimate - null| matters
    WaldTest tp = wald_test(1.3, 0.49, 0.0, 0.05);
    WaldTest tm = wald_test(-1.3, 0.49, 0.0, 0.05);
    CHECK(tp.p_value == doctest::Approx(tm.p_value).epsilon(1e-15));
    CHECK(tp.z == doctest::Approx(-tm.z));
    WaldTest shifted = wald_test(2.3, 0.49, 1.0, 0.05);
    CHECK(shifted.p_value == doctest::Approx(tp.p_value).epsilon(1e-15));

    CHECK_THROWS_AS(wald_test(1.0, 0.0, 0.0, 0.05), Error);
    CHECK_THROWS_AS(wald_test(1.0, -1.0, 0.0, 0.05), Error);
    CHECK_THROWS_AS(wald_test(1.0, 1.0, 0.0, 0.0), Error);
}

TEST_CASE("percentile endpoints are monotone in the sample") {
    std::vector<double> sample = {3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.3, 5.8, 9.7, 9.3,
                                  2.3, 8.4, 6.2, 6.4, 3.3, 8.3, 2.7, 9.5, 0.2, 8.8};
    const double hi = percentile(sample, 0.975);
    const double lo = percentile(sample, 0.025);
    CHECK(lo <= hi);
    std::vector<double> extended = sample;
    extended.push_back(50.0);  // above the max: upper endpoint cannot decrease
    CHECK(percentile(extended, 0.975) >= hi);
    extended = sample;
    extended.push_back(-50.0);
    CHECK(percentile(extended, 0.025) <= lo);
}

TEST_CASE("bootstrap is deterministic and independent of the worker count") {
    MultiSubjectDataset data = small_dataset(9);
    BootstrapOpts opts;
    opts.jobs = 1;
    auto a = bootstrap_population(data, 1, TwoLevelMethod::two_stage, 24, 31415, opts);
    auto b = bootstrap_population(data, 1, TwoLevelMethod::two_stage, 24, 31415, opts);
    opts.jobs = 3;
    auto c = bootstrap_population(data, 1, TwoLevelMethod::two_stage, 24, 31415, opts);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == c.size());
    for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK(a[t].target == b[t].target);
        CHECK(a[t].replicates == b[t].replicates);
        CHECK(a[t].replicates == c[t].replicates);
        CHECK(a[t].ci_lo == c[t].ci_lo);
        CHECK(a[t].ci_hi == c[t].ci_hi);
        CHECK(a[t].replicates.size() == 24);
    }
    // different seed, different draw
    auto d = bootstrap_population(data, 1, TwoLevelMethod::two_stage, 24, 999, opts);
    CHECK(d[0].replicates != a[0].replicates);
}

TEST_CASE("bootstrap of identical subjects degenerates to a point") {
    MultiSubjectDataset data = small_dataset(77, 2);
    MultiSubjectDataset clones;
    for (int i = 0; i < 6; ++i) {
        clones.subjects.push_back(data.subjects[0]);
        clones.subjects.back().id = "c" + std::to_string(i);
    }
    auto res = bootstrap_population(clones, 1, TwoLevelMethod::two_stage, 20, 5, {});
    for (const auto& tgt : res) {
        CHECK(tgt.ci_lo == doctest::Approx(tgt.ci_hi));
        for (double v : tgt.replicates) CHECK(v == doctest::Approx(tgt.replicates.front()));
    }
}

TEST_CASE("bootstrap targets include the population and dynamic quantities") {
    MultiSubjectDataset data = small_dataset(13);
    auto res = bootstrap_population(data, 1, TwoLevelMethod::two_stage, 20, 2, {});
    std::vector<std::string> expected = {"delta", "A",  "B",  "C", "AB", "direct",
                                         "omega1_11", "omega1_12", "omega1_21", "omega1_22"};
    REQUIRE(res.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(res[i].target == expected[i]);

    CHECK_THROWS_AS(bootstrap_population(data, 1, TwoLevelMethod::two_stage, 10, 2, {}), Error);
}

TEST_CASE("replicate streams never coincide") {
    // adjacent replicate streams stay distinct over their first 10^6 draws
    Rng a(derive_seed({123, 0}));
    Rng b(derive_seed({123, 1}));
    int collisions = 0;
    bool locked = false;  // identical streams would collide on every draw
    int run = 0;
    for (int i = 0; i < 1000000; ++i) {
        if (a.raw() == b.raw()) {
            ++collisions;
            locked |= (++run > 4);
        } else {
            run = 0;
        }
    }
    CHECK_FALSE(locked);
    CHECK(collisions < 10);
}
