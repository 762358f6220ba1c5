#pragma once

// Experiment configuration, metrics sink and the evaluation suites
// (rate CDF, density sweep, clutter sweep).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rrm/federated.hpp"
#include "rrm/policy.hpp"

namespace rrm {

/// Schema violation; what() lists every offending key.
class ConfigSchemaError : public ConfigError {
public:
    ConfigSchemaError(const std::vector<std::string>& problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct ClutterScenario {
    Scenario scenario = Scenario::InF_SL;
    double clutter_size_m = 10.0;
    double clutter_density = 0.2;

    std::string label() const;   // e.g. "InF-SL(10,0.2)"
};

std::vector<ClutterScenario> default_clutter_scenarios();

struct ExperimentConfig {
    std::string mode = "f-maddqn";   // a training mode, or cgc | greedy | random
    int episodes = 2000;
    std::vector<std::uint64_t> seeds = {1};
    std::string output_dir = "runs";
    int tau_agg = 512;
    std::vector<double> agg_weights;
    EnvConfig env;
    DdqnConfig ddqn;
    PpoConfig ppo;
    std::vector<std::uint64_t> eval_seeds = {101, 102, 103, 104, 105};
    int eval_episodes_per_seed = 10;
    std::vector<int> density_values = {10, 20, 30, 40, 50};
    std::vector<ClutterScenario> clutter_scenarios = default_clutter_scenarios();
    bool cgc_every_step = false;
    bool log_wall_time = true;

    bool is_learned() const;
    TrainingMode training_mode() const;   // throws unless is_learned()
    void validate() const;
};

/// Throws ConfigSchemaError naming unknown keys and ill-typed values.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// FNV-1a (64 bit) of the canonical JSON form without output_dir, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

inline constexpr const char* kOutputDirEnv = "RRM_OUTPUT_DIR";
/// config.output_dir unless the RRM_OUTPUT_DIR environment variable is set.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

class HashMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Append-only JSONL file whose every row carries the config hash. Opening a
/// file that already holds rows from another configuration throws HashMismatch.
class MetricsSink {
public:
    MetricsSink(const std::filesystem::path& path, std::string config_hash);
    void write(nlohmann::json row);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::string hash_;
    std::ofstream out_;
};

/// Environment configuration with the training-run overrides applied.
EnvConfig effective_env(const ExperimentConfig& config);

struct TrainArtifacts {
    std::vector<TrainingLog> logs;                       // one per seed
    std::vector<std::filesystem::path> checkpoints;      // one per seed
    std::vector<std::filesystem::path> log_files;
};

/// Trains (or, for baseline modes, rolls out) every seed; writes
/// <mode>_seed<s>.jsonl and, for learned modes, <mode>_seed<s>.ckpt.
TrainArtifacts run_train(const ExperimentConfig& config);

/// Loads a checkpoint as a frozen policy and checks it against the environment.
std::unique_ptr<Policy> load_policy(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                                    const EnvConfig& env);

struct RateSamples {
    std::vector<double> rate_bps;
    std::vector<double> se;
};

/// Per-device rates of every step of eval_episodes_per_seed episodes per eval seed.
RateSamples collect_rates(const ExperimentConfig& config, const EnvConfig& env, Policy& policy);

inline const std::vector<double>& cdf_percentiles()
{
    static const std::vector<double> p = {1,  5,  10, 15, 20, 25, 30, 35, 40, 45, 50, 55,
                                          60, 65, 70, 75, 80, 85, 90, 95, 99, 100};
    return p;
}

/// Nearest-rank percentile of unsorted samples (p in (0, 100]).
double percentile(std::vector<double> samples, double p);

struct CdfRow {
    double percentile = 0.0;
    double cdf = 0.0;
    double rate_bps = 0.0;
    double se = 0.0;
};

std::vector<CdfRow> rate_cdf(const RateSamples& samples);

/// Rate CDF of the configured mode; checkpoint required for learned modes.
/// Writes eval_<mode>_cdf.csv and the raw dump eval_<mode>_rates.csv.
std::vector<CdfRow> run_eval(const ExperimentConfig& config,
                             const std::optional<std::filesystem::path>& checkpoint);

struct DensityRow {
    int n = 0;
    std::string method;
    double avg_rate_bps = 0.0;
    double avg_se = 0.0;
};

/// Average per-device rate for every N and every method (the checkpoint's
/// policy, if given, plus cgc, greedy and random). Writes density_sweep.csv.
std::vector<DensityRow> run_density_sweep(const ExperimentConfig& config,
                                          const std::optional<std::filesystem::path>& checkpoint,
                                          const std::vector<int>& n_values);

struct ClutterRow {
    std::string scenario;
    std::string method;
    double min_rate_bps = 0.0;
    double avg_rate_bps = 0.0;
    double max_rate_bps = 0.0;
};

/// Min/avg/max over devices of the episode-mean per-device rate. Writes clutter_sweep.csv.
std::vector<ClutterRow> run_clutter_sweep(const ExperimentConfig& config,
                                          const std::optional<std::filesystem::path>& checkpoint,
                                          const std::vector<ClutterScenario>& scenarios);

} // namespace rrm
