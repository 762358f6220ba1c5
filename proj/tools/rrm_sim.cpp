// Command-line front end: train, eval, sweep-density, sweep-clutter, baseline, oracle-check.
// Exit codes: 0 ok, 2 configuration error, 3 runtime error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "rrm/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
    std::string config_path;
    std::string mode;
    int tau_agg = 0;
    std::string orf;
    int n = 0;
    std::vector<std::uint64_t> seeds;
    std::string out;
    int episodes = 0;
    bool no_wall_time = false;
    std::string checkpoint;
    std::vector<int> n_values;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config_path, "JSON experiment configuration");
    cmd->add_option("--mode", o.mode, "f-maddqn|f-mappo|c-maddqn|c-mappo|d-maddqn|d-mappo|cgc|greedy|random");
    cmd->add_option("--tau-agg", o.tau_agg, "aggregation interval in environment steps");
    cmd->add_option("--orf", o.orf, "full|mean|max|median|min");
    cmd->add_option("--n", o.n, "number of subnetworks");
    cmd->add_option("--seed", o.seeds, "run seed (repeatable)");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--episodes", o.episodes, "training episodes");
    cmd->add_flag("--no-wall-time", o.no_wall_time, "omit wall_ms from logs (byte-reproducible output)");
}

rrm::ExperimentConfig build_config(const Overrides& o)
{
    nlohmann::json j = nlohmann::json::object();
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in)
            throw rrm::ConfigError("cannot open config file " + o.config_path);
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw rrm::ConfigError(o.config_path + " is not valid JSON: " + e.what());
        }
    }
    if (!o.mode.empty())
        j["mode"] = o.mode;
    if (o.tau_agg != 0)
        j["tau_agg"] = o.tau_agg;
    if (!o.orf.empty())
        j["orf"] = o.orf;
    if (o.n != 0)
        j["env"]["num_subnetworks"] = o.n;
    if (!o.seeds.empty())
        j["seeds"] = o.seeds;
    if (!o.out.empty())
        j["output_dir"] = o.out;
    if (o.episodes != 0)
        j["episodes"] = o.episodes;
    if (o.no_wall_time)
        j["log_wall_time"] = false;
    return rrm::parse_config(j);
}

std::optional<std::filesystem::path> checkpoint_of(const Overrides& o)
{
    if (o.checkpoint.empty())
        return std::nullopt;
    return std::filesystem::path(o.checkpoint);
}

int oracle_check()
{
    using namespace rrm;
    RadioConfig rc;
    int failures = 0;
    auto report = [&](const char* name, bool ok, double value) {
        std::printf("%-40s %-4s %.15g\n", name, ok ? "ok" : "FAIL", value);
        failures += ok ? 0 : 1;
    };
    const double noise_dbm = 10.0 * std::log10(noise_power_mw(rc));
    report("noise power -94 dBm", std::abs(noise_dbm + 94.0) < 1e-9, noise_dbm);
    report("dispersion(1) = 0.75", std::abs(dispersion(1.0) - 0.75) < 1e-15, dispersion(1.0));
    const double q = q_inverse(1e-5);
    report("Q^-1(1e-5)", std::abs(q - 4.264890793922825) < 1e-9, q);
    RadioConfig longblock = rc;
    longblock.blocklength = 1000000000;
    const double shannon = rc.channel_bandwidth_hz * std::log2(11.0);
    const double fbl = achievable_rate(10.0, longblock);
    report("finite blocklength -> Shannon", std::abs(fbl - shannon) / shannon < 1e-3, fbl / shannon);
    report("PL LOS 10 m", std::abs(pathloss_db(10.0, rc, true) - 68.12487375728923) < 1e-9,
           pathloss_db(10.0, rc, true));
    return failures == 0 ? 0 : kExitRuntime;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Channel allocation simulator for mobile in-factory subnetworks"};
    app.require_subcommand(1);
    Overrides o;

    auto* train = app.add_subcommand("train", "train the configured mode and write logs and checkpoints");
    add_common(train, o);
    auto* eval = app.add_subcommand("eval", "rate CDF of a frozen policy or baseline");
    add_common(eval, o);
    eval->add_option("--checkpoint", o.checkpoint, "weights of a trained policy");
    auto* density = app.add_subcommand("sweep-density", "average per-device rate versus N");
    add_common(density, o);
    density->add_option("--checkpoint", o.checkpoint, "weights of a trained policy");
    density->add_option("--n-values", o.n_values, "subnetwork counts (default from config)");
    auto* clutter = app.add_subcommand("sweep-clutter", "per-device rate across clutter scenarios");
    add_common(clutter, o);
    clutter->add_option("--checkpoint", o.checkpoint, "weights of a trained policy");
    auto* baseline = app.add_subcommand("baseline", "roll out cgc, greedy or random with training-style logs");
    add_common(baseline, o);
    app.add_subcommand("oracle-check", "verify closed-form link budget values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (app.got_subcommand("oracle-check"))
            return oracle_check();

        const auto config = build_config(o);
        std::cerr << "config hash " << rrm::config_hash(config) << ", output " << rrm::resolve_output_dir(config)
                  << '\n';
        if (app.got_subcommand(train)) {
            const auto art = rrm::run_train(config);
            for (std::size_t i = 0; i < art.log_files.size(); ++i) {
                const auto& eps = art.logs[i].episodes;
                std::cout << art.log_files[i].string() << ": final mean reward "
                          << (eps.empty() ? 0.0 : eps.back().mean_reward) << ", aggregations "
                          << art.logs[i].aggregations << '\n';
            }
        } else if (app.got_subcommand(baseline)) {
            if (config.is_learned())
                throw rrm::ConfigError("baseline expects --mode cgc, greedy or random");
            rrm::run_train(config);
        } else if (app.got_subcommand(eval)) {
            for (const auto& r : rrm::run_eval(config, checkpoint_of(o)))
                std::cout << r.percentile << "," << r.rate_bps << "," << r.se << '\n';
        } else if (app.got_subcommand(density)) {
            const auto values = o.n_values.empty() ? config.density_values : o.n_values;
            for (const auto& r : rrm::run_density_sweep(config, checkpoint_of(o), values))
                std::cout << r.n << "," << r.method << "," << r.avg_rate_bps << '\n';
        } else if (app.got_subcommand(clutter)) {
            for (const auto& r : rrm::run_clutter_sweep(config, checkpoint_of(o), config.clutter_scenarios))
                std::cout << r.scenario << "," << r.method << "," << r.min_rate_bps << "," << r.avg_rate_bps << ","
                          << r.max_rate_bps << '\n';
        }
    } catch (const rrm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
