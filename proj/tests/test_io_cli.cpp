#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gma/dataset_io.hpp"
#include "gma/errors.hpp"
#include "gma/run_config.hpp"
#include "gma/sim_harness.hpp"
#include "support/json_schema.hpp"

using namespace gma;
namespace fs = std::filesystem;

namespace {

std::string cli_bin() {
    const char* env = std::getenv("GMA_CLI_BIN");
    REQUIRE(env != nullptr);
    return env;
}

int run_cli(const std::string& args) {
    std::string cmd = cli_bin() + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("gma_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

nlohmann::json load_schema() {
    // the schema ships with the sources; tests run from the build tree
    fs::path here = fs::path(__FILE__).parent_path();
    return nlohmann::json::parse(slurp(here / ".." / "schemas" / "gma_result.schema.json"));
}

MultiSubjectDataset sample_dataset(int n_subjects, std::uint64_t seed) {
    NoiseCov noise(1.0, 2.0, 0.5);
    ScenarioSpec spec;
    spec.two_level = true;
    spec.path = {0.5, -1.0, 0.5};
    spec.mar = MarSpec({scenario_transition(noise)}, noise);
    spec.n_subjects = n_subjects;
    spec.t_poisson = true;
    spec.t_mean = 60;
    spec.lambda = Eigen::Vector3d::Constant(0.5);
    spec.burn_in = 300;
    spec.seed = seed;
    return simulate_two_level(spec);
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text) n += (c == '\n');
    return n;
}

}  // namespace

TEST_CASE("dataset round trip") {
    MultiSubjectDataset data = sample_dataset(3, 41);
    fs::path dir = fresh_dir("roundtrip");
    write_dataset(data, (dir / "d.csv").string());
    MultiSubjectDataset back = read_dataset((dir / "d.csv").string());
    REQUIRE(back.size() == data.size());
    for (int i = 0; i < data.size(); ++i) {
        CHECK(back.subjects[i].id == data.subjects[i].id);
        CHECK(back.subjects[i].z == data.subjects[i].z);
        CHECK(back.subjects[i].m == data.subjects[i].m);
        CHECK(back.subjects[i].r == data.subjects[i].r);
    }
}

TEST_CASE("dataset parse errors carry line numbers") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_dataset_stream(in, "test.csv");
    };
    CHECK_THROWS_WITH_AS(parse(""), doctest::Contains("no subjects"), Error);
    CHECK_THROWS_WITH_AS(parse("subject_id,t,z,m\n"), doctest::Contains("missing column 'r'"),
                         Error);
    CHECK_THROWS_WITH_AS(parse("subject_id,t,z,m,r\n"), doctest::Contains("no subjects"), Error);
    // gap in t: line 4 jumps from 2 to 4
    CHECK_THROWS_WITH_AS(parse("subject_id,t,z,m,r\n"
                               "s1,1,0,0.1,0.2\n"
                               "s1,2,1,0.2,0.3\n"
                               "s1,4,0,0.3,0.4\n"),
                         doctest::Contains("test.csv:4"), Error);
    CHECK_THROWS_WITH_AS(parse("subject_id,t,z,m,r\ns1,1,0,nan,0.2\n"),
                         doctest::Contains("not a finite number"), Error);
    // column order is free
    std::istringstream in("r,m,z,t,subject_id\n1.0,2.0,1,1,s9\n");
    MultiSubjectDataset d = read_dataset_stream(in, "x");
    CHECK(d.subjects[0].id == "s9");
    CHECK(d.subjects[0].r[0] == 1.0);
    CHECK(d.subjects[0].z[0] == 1.0);
}

TEST_CASE("demeaning removes per-subject means") {
    MultiSubjectDataset data = sample_dataset(2, 11);
    demean_subjects(data);
    for (const auto& s : data.subjects) {
        CHECK(std::abs(s.z.mean()) < 1e-12);
        CHECK(std::abs(s.m.mean()) < 1e-12);
        CHECK(std::abs(s.r.mean()) < 1e-12);
    }
}

TEST_CASE("run config round trip") {
    RunConfig cfg;
    cfg.command = "fit";
    cfg.options["input"] = "data.csv";
    cfg.options["p"] = 2;
    cfg.options["delta"] = -0.25;
    cfg.options["demean"] = true;
    RunConfig back = RunConfig::from_json(cfg.to_json());
    CHECK(back == cfg);
    // serialization is stable
    CHECK(back.to_json().dump() == cfg.to_json().dump());
}

TEST_CASE("cli: usage errors exit 2, data errors 3") {
    fs::path dir = fresh_dir("usage");
    MultiSubjectDataset data = sample_dataset(2, 5);
    write_dataset(data, (dir / "d.csv").string());

    CHECK(run_cli("fit --level single --input " + (dir / "d.csv").string() + " --out " +
                  (dir / "o1").string()) == 2);
    CHECK(run_cli("definitely-not-a-command") == 2);
    CHECK(run_cli("fit --level single --delta 0.3 --input " + (dir / "missing.csv").string() +
                  " --out " + (dir / "o2").string()) == 3);

    std::ofstream bad(dir / "bad.csv");
    bad << "subject_id,t,z,m,r\ns1,1,0,0.5,0.1\ns1,3,1,0.2,0.2\n";
    bad.close();
    CHECK(run_cli("fit --level single --delta 0.3 --input " + (dir / "bad.csv").string() +
                  " --out " + (dir / "o3").string()) == 3);
}

TEST_CASE("cli: simulate then fit round trip with schema validation") {
    fs::path dir = fresh_dir("simfit");
    CHECK(run_cli("simulate --scenario two-level --delta 0.5 --n 12 --t 60 --seed 9 --out " +
                  dir.string()) == 0);
    nlohmann::json sim = nlohmann::json::parse(slurp(dir / "result.json"));
    test::SchemaChecker checker(load_schema());
    CHECK(checker.check_definition("simulate", sim) == "");
    CHECK(sim["kind"] == "simulate");
    REQUIRE(fs::exists(dir / "dataset.csv"));

    CHECK(run_cli("fit --level multi --method ts --p 1 --input " +
                  (dir / "dataset.csv").string() + " --out " + (dir / "fit").string()) == 0);
    nlohmann::json fit = nlohmann::json::parse(slurp(dir / "fit" / "result.json"));
    CHECK(checker.check_definition("fit", fit) == "");
    CHECK(fit["level"] == "multi");
    CHECK(fit["delta_hat"].is_number());
    CHECK(fs::exists(dir / "fit" / "subjects.csv"));
    // profile data for plotting: one row per scan grid point
    CHECK(count_lines(slurp(dir / "fit" / "profile.csv")) == 22);

    // fixed-delta multi fit skips the profile search
    CHECK(run_cli("fit --level multi --method bcd --p 1 --delta 0.3 --input " +
                  (dir / "dataset.csv").string() + " --out " + (dir / "fixed").string()) == 0);
    nlohmann::json fixed = nlohmann::json::parse(slurp(dir / "fixed" / "result.json"));
    CHECK(checker.check_definition("fit", fixed) == "");
    CHECK(fixed["delta_hat"].get<double>() == doctest::Approx(0.3));
    CHECK(fixed["converged"].get<bool>());
    CHECK_FALSE(fs::exists(dir / "fixed" / "profile.csv"));

    // rerunning the same invocation reproduces the results bit for bit
    std::string first = slurp(dir / "fit" / "result.json");
    CHECK(run_cli("fit --level multi --method ts --p 1 --input " +
                  (dir / "dataset.csv").string() + " --out " + (dir / "fit2").string()) == 0);
    std::string second = slurp(dir / "fit2" / "result.json");
    // output directory is echoed in the config; strip it before comparing
    auto scrub = [](std::string s, const std::string& from) {
        std::size_t pos;
        while ((pos = s.find(from)) != std::string::npos) s.erase(pos, from.size());
        return s;
    };
    CHECK(scrub(first, (dir / "fit").string()) == scrub(second, (dir / "fit2").string()));
}

TEST_CASE("cli: single-level fit and sensitivity surface the flatness property") {
    fs::path dir = fresh_dir("sens");
    CHECK(run_cli("simulate --scenario table1 --delta 0.5 --t 200 --seed 3 --out " +
                  dir.string()) == 0);

    CHECK(run_cli("fit --level single --delta 0.5 --p 1 --input " +
                  (dir / "dataset.csv").string() + " --out " + (dir / "fit").string()) == 0);
    nlohmann::json fit = nlohmann::json::parse(slurp(dir / "fit" / "result.json"));
    test::SchemaChecker checker(load_schema());
    CHECK(checker.check_definition("fit", fit) == "");
    REQUIRE(fit["subjects"].size() == 1);

    CHECK(run_cli("sensitivity --input " + (dir / "dataset.csv").string() +
                  " --p 1 --grid -0.9:0.9:0.1 --out " + (dir / "sens").string()) == 0);
    nlohmann::json sens = nlohmann::json::parse(slurp(dir / "sens" / "result.json"));
    CHECK(checker.check_definition("sensitivity", sens) == "");
    std::string csv = slurp(dir / "sens" / "sensitivity.csv");
    CHECK(count_lines(csv) == 20);  // header + 19 grid rows

    // flatness of the profiled likelihood, end to end through the CSV
    double lo = 1e300, hi = -1e300;
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
        std::size_t a = line.find(',');
        std::size_t b = line.find(',', a + 1);
        std::size_t c = line.find(',', b + 1);
        double ll = std::stod(line.substr(b + 1, c - b - 1));
        lo = std::min(lo, ll);
        hi = std::max(hi, ll);
    }
    CHECK((hi - lo) / std::abs(lo) < 1e-8);

    CHECK(run_cli("sensitivity --input " + (dir / "dataset.csv").string() +
                  " --p 1 --grid 0.5:-0.5:0.1 --out " + (dir / "bad").string()) == 2);
}

TEST_CASE("cli: bootstrap determinism across jobs") {
    fs::path dir = fresh_dir("boot");
    MultiSubjectDataset data = sample_dataset(10, 99);
    write_dataset(data, (dir / "d.csv").string());

    CHECK(run_cli("bootstrap --input " + (dir / "d.csv").string() +
                  " --p 1 --method ts --b 20 --seed 7 --jobs 1 --out " +
                  (dir / "b1").string()) == 0);
    CHECK(run_cli("bootstrap --input " + (dir / "d.csv").string() +
                  " --p 1 --method ts --b 20 --seed 7 --jobs 3 --out " +
                  (dir / "b2").string()) == 0);
    std::string r1 = slurp(dir / "b1" / "bootstrap_replicates.csv");
    std::string r2 = slurp(dir / "b2" / "bootstrap_replicates.csv");
    CHECK(r1 == r2);

    nlohmann::json res = nlohmann::json::parse(slurp(dir / "b1" / "result.json"));
    test::SchemaChecker checker(load_schema());
    CHECK(checker.check_definition("bootstrap", res) == "");

    // honours GMA_JOBS as the default worker count
    std::string cmd = "GMA_JOBS=2 " + cli_bin() + " bootstrap --input " +
                      (dir / "d.csv").string() + " --p 1 --method ts --b 20 --seed 7 --out " +
                      (dir / "b3").string() + " >/dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(slurp(dir / "b3" / "bootstrap_replicates.csv") == r1);
}

TEST_CASE("cli: replicate emits schema-valid summaries") {
    fs::path dir = fresh_dir("repl");
    CHECK(run_cli("replicate table1 --reps 100 --seed 4 --out " + (dir / "t1").string()) == 0);
    nlohmann::json t1 = nlohmann::json::parse(slurp(dir / "t1" / "result.json"));
    test::SchemaChecker checker(load_schema());
    CHECK(checker.check_definition("replicate", t1) == "");
    CHECK(t1["blocks"].size() == 4);
    CHECK(fs::exists(dir / "t1" / "table1.csv"));

    CHECK(run_cli("replicate consistency --reps 10 --seed 4 --out " + (dir / "c").string()) ==
          0);
    nlohmann::json c = nlohmann::json::parse(slurp(dir / "c" / "result.json"));
    CHECK(checker.check_definition("replicate", c) == "");
    CHECK(c["cells"].size() == 3);
}
