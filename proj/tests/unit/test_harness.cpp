#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rrm/harness.hpp"

using namespace rrm;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("rrm_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_config(const fs::path& dir, const std::string& mode)
{
    nlohmann::json j = {{"mode", mode},
                        {"episodes", 3},
                        {"seeds", {1}},
                        {"output_dir", dir.string()},
                        {"log_wall_time", false},
                        {"eval_seeds", {7}},
                        {"eval_episodes_per_seed", 1},
                        {"env", {{"num_subnetworks", 4}, {"steps_per_episode", 20}}},
                        {"ddqn", {{"warmup_transitions", 16}, {"batch_size", 8}}},
                        {"ppo", {{"rollout_steps", 16}, {"minibatch_size", 8}}}};
    return parse_config(j);
}

} // namespace

TEST_CASE("config schema")
{
    const nlohmann::json bad = {{"mode", "f-maddqn"}, {"bogus", 1}, {"env", {{"nope", 2}}}};
    try {
        parse_config(bad);
        FAIL("accepted unknown keys");
    } catch (const ConfigSchemaError& e) {
        const std::string what = e.what();
        CHECK(what.find("bogus") != std::string::npos);
        CHECK(what.find("nope") != std::string::npos);
        CHECK(e.problems().size() >= 2);
    }
    CHECK_THROWS_AS(parse_config({{"episodes", "many"}}), ConfigSchemaError);
    CHECK_THROWS_AS(parse_config({{"mode", "x-maddqn"}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"orf", "sideways"}}), ConfigError);

    const ExperimentConfig def = parse_config(nlohmann::json::object());
    CHECK(config_hash(def).size() == 16);
    CHECK(config_hash(def) == config_hash(parse_config(to_json(def))));
    ExperimentConfig other = def;
    other.tau_agg = 128;
    CHECK(config_hash(other) != config_hash(def));
}

TEST_CASE("metrics sink refuses to mix configurations")
{
    const auto dir = fresh_dir("sink");
    const auto path = dir / "log.jsonl";
    {
        MetricsSink s(path, "aaaa");
        s.write({{"x", 1}});
    }
    {
        MetricsSink again(path, "aaaa");
        again.write({{"x", 2}});
    }
    CHECK_THROWS_AS(MetricsSink(path, "bbbb"), HashMismatch);
    std::ifstream in(path);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        CHECK(nlohmann::json::parse(line)["config_hash"] == "aaaa");
        ++rows;
    }
    CHECK(rows == 2);
}

TEST_CASE("percentiles and rate CDF")
{
    std::vector<double> v{5, 1, 4, 2, 3};
    CHECK(percentile(v, 100) == 5);
    CHECK(percentile(v, 20) == 1);
    CHECK(percentile(v, 50) == 3);
    CHECK(percentile(v, 1) == 1);
    CHECK_THROWS(percentile({}, 50));

    RateSamples s;
    for (int i = 0; i < 1000; ++i) {
        s.rate_bps.push_back((i * 7919) % 1000 * 1e4);
        s.se.push_back((i * 7919) % 1000 * 1e-3);
    }
    const auto cdf = rate_cdf(s);
    REQUIRE(cdf.size() == cdf_percentiles().size());
    for (std::size_t i = 1; i < cdf.size(); ++i) {
        CHECK(cdf[i].rate_bps >= cdf[i - 1].rate_bps);
        CHECK(cdf[i].cdf >= cdf[i - 1].cdf);
    }
    CHECK(cdf.back().cdf == 1.0);
    for (const auto& row : cdf)
        CHECK(row.rate_bps == percentile(s.rate_bps, row.percentile));
}

TEST_CASE("eval CDF matches its raw dump")
{
    const auto dir = fresh_dir("eval");
    const auto cfg = small_config(dir, "greedy");
    const auto cdf = run_eval(cfg, std::nullopt);
    std::ifstream raw(dir / "eval_greedy_rates.csv");
    std::string line;
    std::getline(raw, line);
    CHECK(line == "rate_bps,se_bps_hz,config_hash");
    std::vector<double> rates;
    while (std::getline(raw, line)) {
        CHECK(line.substr(line.rfind(',') + 1) == config_hash(cfg));
        rates.push_back(std::stod(line.substr(0, line.find(','))));
    }
    CHECK(rates.size() == 20u * 4u);
    for (const auto& row : cdf)
        CHECK(row.rate_bps == doctest::Approx(percentile(rates, row.percentile)).epsilon(1e-12));
    CHECK(fs::exists(dir / "eval_greedy_cdf.csv"));
}

TEST_CASE("training output is byte-reproducible without wall time")
{
    for (const std::string mode : {"f-maddqn", "f-mappo", "random"}) {
        CAPTURE(mode);
        const auto a = fresh_dir("repro_a");
        const auto b = fresh_dir("repro_b");
        const auto ra = run_train(small_config(a, mode));
        const auto rb = run_train(small_config(b, mode));
        REQUIRE(ra.log_files.size() == 1);
        const std::string la = slurp(ra.log_files[0]);
        CHECK(la == slurp(rb.log_files[0]));
        CHECK(la.find("wall_ms") == std::string::npos);
        CHECK(std::count(la.begin(), la.end(), '\n') == 3);
        if (mode != "random")
            CHECK(slurp(ra.checkpoints[0]) == slurp(rb.checkpoints[0]));
    }
}

TEST_CASE("checkpoints are validated against the environment")
{
    const auto dir = fresh_dir("ckpt");
    auto cfg = small_config(dir, "d-maddqn");
    const auto art = run_train(cfg);
    REQUIRE(art.checkpoints.size() == 1);
    CHECK(run_eval(cfg, art.checkpoints[0]).size() == cdf_percentiles().size());
    CHECK_THROWS_AS(run_eval(cfg, std::nullopt), ConfigError);
    auto wider = cfg;
    wider.env.radio.num_channels = 5;
    CHECK_THROWS_AS(run_eval(wider, art.checkpoints[0]), std::invalid_argument);
}

TEST_CASE("sweeps cover the full cross product")
{
    const auto dir = fresh_dir("sweeps");
    auto cfg = small_config(dir, "cgc");
    const auto density = run_density_sweep(cfg, std::nullopt, {2, 4});
    CHECK(density.size() == 2u * 3u);
    for (int n : {2, 4})
        for (const std::string m : {"cgc", "greedy", "random"})
            CHECK(std::count_if(density.begin(), density.end(),
                                [&](const DensityRow& r) { return r.n == n && r.method == m; })
                  == 1);
    CHECK(fs::exists(dir / "density_sweep.csv"));

    const std::vector<ClutterScenario> scen = {{Scenario::InF_SL, 10.0, 0.2}, {Scenario::InF_DL, 2.0, 0.4}};
    const auto clutter = run_clutter_sweep(cfg, std::nullopt, scen);
    CHECK(clutter.size() == 2u * 3u);
    for (const auto& r : clutter) {
        CHECK(r.min_rate_bps <= r.avg_rate_bps);
        CHECK(r.avg_rate_bps <= r.max_rate_bps);
    }
    CHECK(fs::exists(dir / "clutter_sweep.csv"));
}

TEST_CASE("output directory override")
{
    const auto dir = fresh_dir("override");
    auto cfg = small_config(fresh_dir("ignored"), "random");
    ::setenv(kOutputDirEnv, dir.c_str(), 1);
    CHECK(resolve_output_dir(cfg) == dir);
    const auto art = run_train(cfg);
    ::unsetenv(kOutputDirEnv);
    CHECK(art.log_files[0].parent_path() == dir);
    CHECK(fs::exists(dir / "random_seed1.jsonl"));
    CHECK(resolve_output_dir(cfg) == cfg.output_dir);
}

TEST_CASE("config hash ignores the output directory")
{
    auto a = parse_config(nlohmann::json::object());
    auto b = a;
    b.output_dir = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("random allocation trails greedy in the low percentiles")
{
    const auto dir = fresh_dir("lowtail");
    auto cfg = small_config(dir, "greedy");
    cfg.env.num_subnetworks = 10;
    cfg.env.steps_per_episode = 200;
    cfg.eval_seeds = {11, 12};
    cfg.eval_episodes_per_seed = 2;
    const auto greedy = run_eval(cfg, std::nullopt);
    cfg.mode = "random";
    const auto random = run_eval(cfg, std::nullopt);
    for (std::size_t i = 0; i < greedy.size() && greedy[i].percentile <= 10; ++i) {
        CAPTURE(greedy[i].percentile);
        CHECK(random[i].rate_bps < greedy[i].rate_bps);
    }
}

TEST_CASE("average rate falls with density for every baseline")
{
    const auto dir = fresh_dir("density");
    auto cfg = small_config(dir, "cgc");
    cfg.env.steps_per_episode = 100;
    cfg.eval_seeds = {21, 22};
    cfg.eval_episodes_per_seed = 1;
    const std::vector<int> ns = {10, 20, 30, 40, 50};
    const auto rows = run_density_sweep(cfg, std::nullopt, ns);
    for (const std::string m : {"cgc", "greedy", "random"}) {
        std::vector<double> avg;
        for (int n : ns)
            for (const auto& r : rows)
                if (r.n == n && r.method == m)
                    avg.push_back(r.avg_rate_bps);
        REQUIRE(avg.size() == ns.size());
        int inversions = 0;
        for (std::size_t i = 1; i < avg.size(); ++i)
            inversions += avg[i] > avg[i - 1] ? 1 : 0;
        CAPTURE(m);
        CHECK(inversions <= 1);
    }
}
