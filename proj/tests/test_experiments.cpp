#include <doctest.h>

#include "itomc/experiments.hpp"
#include "itomc/hpartition.hpp"
#include "itomc/sampling.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace itomc;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path &p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string &name) {
    const auto d = fs::temp_directory_path() / ("itomc_test_" + name);
    fs::remove_all(d);
    return d;
}
} // namespace

TEST_CASE("config parsing") {
    const auto c = ExperimentConfig::parse("# comment\nexperiment = block-sweep\nlevels = 5, 6 ,7\np_grid=0.1,0.2\nseed = 12 # trailing\n");
    CHECK(c.experiment == "block-sweep");
    CHECK(c.levels == std::vector<int>{5, 6, 7});
    CHECK(c.p_grid == std::vector<double>{0.1, 0.2});
    CHECK(c.seed == 12u);
    CHECK_THROWS_AS(ExperimentConfig::parse("bogus = 1"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::parse("levels = x"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::parse("levels"), std::invalid_argument);
    // canonical text round-trips and the hash ignores the output directory
    auto d = ExperimentConfig::parse(c.canonical());
    d.output_dir = "elsewhere";
    CHECK(d.hash() == c.hash());
    d.set("trials", "3");
    CHECK(d.hash() != c.hash());
    CHECK(c.hash().size() == 16);
}

TEST_CASE("config validation") {
    ExperimentConfig c;
    c.experiment = "nope";
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.experiment = "block-sweep";
    CHECK_THROWS_AS(c.validate(), std::invalid_argument); // seed missing
    c.seed = 1;
    CHECK_NOTHROW(c.validate());
    c.p_grid = {1.5};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.p_grid = {0.5};
    c.phantom = "cat";
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    ExperimentConfig r;
    r.experiment = "refinement-consistency";
    CHECK_NOTHROW(r.validate()); // deterministic experiments need no seed
}

TEST_CASE("refinement experiment writes artifacts and manifest") {
    ExperimentConfig c;
    c.experiment = "refinement-consistency";
    c.levels = {2, 3, 4};
    c.output_dir = scratch_dir("refine");
    const auto m = run_experiment(c);
    CHECK(m.ok());
    CHECK(m.config_hash == c.hash());
    for (const auto &a : m.artifacts) CHECK(fs::exists(c.output_dir / a));
    CHECK(std::find(m.artifacts.begin(), m.artifacts.end(), "refinement.csv") != m.artifacts.end());
    const auto js = slurp(c.output_dir / "manifest.json");
    CHECK(js.find("\"status\": \"ok\"") != std::string::npos);
}

TEST_CASE("stochastic experiments rerun byte-identically") {
    ExperimentConfig c;
    c.experiment = "full-pipeline";
    c.levels = {4};
    c.seed = 9;
    c.phantom = "shepp-logan";
    c.output_dir = scratch_dir("pipe1");
    const auto m1 = run_experiment(c);
    CHECK(m1.ok());
    const auto first = c.output_dir;
    c.output_dir = scratch_dir("pipe2");
    const auto m2 = run_experiment(c);
    REQUIRE(m1.artifacts == m2.artifacts);
    for (const auto &a : m1.artifacts)
        if (fs::path(a).extension() == ".csv") CHECK(slurp(first / a) == slurp(c.output_dir / a));

    ExperimentConfig s;
    s.experiment = "block-sweep";
    s.levels = {4};
    s.p_grid = {0.3, 1.0};
    s.trials = 3;
    s.seed = 4;
    s.output_dir = scratch_dir("sweep");
    const auto ms = run_experiment(s);
    CHECK(ms.ok());
    const auto csv = slurp(s.output_dir / "block_sweep.csv");
    CHECK(csv.find("4,1,3,3,1") != std::string::npos); // p = 1 always succeeds
}

TEST_CASE("failed steps are recorded") {
    ExperimentConfig c;
    c.experiment = "rank-survey";
    c.levels = {2};
    c.min_block = 3; // not a valid leaf size
    c.output_dir = scratch_dir("fail");
    const auto m = run_experiment(c);
    CHECK_FALSE(m.ok());
    CHECK(m.steps.at(0).status == "failed");
    CHECK(slurp(c.output_dir / "manifest.json").find("\"status\": \"failed\"") != std::string::npos);
}

TEST_CASE("mask CSV round trip") {
    const auto p = build_partition(64, Admissibility::strong_periodic, 8);
    BudgetRule r;
    r.mode = BudgetMode::bernoulli;
    r.p = 0.2;
    const auto mask = build_mask(p, r, 3);
    std::stringstream ss;
    write_mask_csv(ss, mask);
    const auto back = read_mask_csv(ss, p);
    CHECK(back.entries == mask.entries);
    for (size_t k = 0; k < p.blocks.size(); ++k) CHECK(back.per_block[k].count == mask.per_block[k].count);
    std::stringstream bad("i,j\n0,1\n");
    CHECK_THROWS_AS(read_mask_csv(bad, p), std::invalid_argument); // diagonal block incomplete
}
