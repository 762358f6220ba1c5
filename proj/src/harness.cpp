#include "rrm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace rrm {

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i)
        out += (i ? sep : "") + items[i];
    return out;
}

// Reads known keys of one JSON object; whatever is left over is reported as unknown.
class ObjectReader {
public:
    ObjectReader(const nlohmann::json& j, std::string path, std::vector<std::string>& problems)
        : j_(j), path_(std::move(path)), problems_(problems)
    {
        if (!j_.is_object())
            problems_.push_back(where() + ": expected an object");
    }

    ~ObjectReader()
    {
        if (!j_.is_object())
            return;
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key()))
                problems_.push_back("unknown key '" + qualified(item.key()) + "'");
        }
    }

    template <typename T>
    void get(const std::string& key, T& out)
    {
        seen_.insert(key);
        if (!j_.is_object() || !j_.contains(key))
            return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            problems_.push_back("'" + qualified(key) + "' has the wrong type");
        }
    }

    template <typename T, typename Convert>
    void get_as(const std::string& key, T& out, Convert convert)
    {
        seen_.insert(key);
        if (!j_.is_object() || !j_.contains(key))
            return;
        try {
            out = convert(j_.at(key).get<std::string>());
        } catch (const std::exception& e) {
            problems_.push_back("'" + qualified(key) + "': " + e.what());
        }
    }

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

    const nlohmann::json& child(const std::string& key)
    {
        seen_.insert(key);
        static const nlohmann::json empty = nlohmann::json::object();
        return has(key) ? j_.at(key) : empty;
    }

    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string where() const { return path_.empty() ? "<root>" : path_; }

    const nlohmann::json& j_;
    std::string path_;
    std::vector<std::string>& problems_;
    std::set<std::string> seen_;
};

Activation activation_from_string(const std::string& s)
{
    if (s == "relu")
        return Activation::relu;
    if (s == "tanh")
        return Activation::tanh;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

std::string to_string(Activation a)
{
    return a == Activation::relu ? "relu" : "tanh";
}

void read_radio(ObjectReader r, RadioConfig& c)
{
    r.get("carrier_freq_hz", c.carrier_freq_hz);
    r.get("channel_bandwidth_hz", c.channel_bandwidth_hz);
    r.get("num_channels", c.num_channels);
    r.get("tx_power_dbm", c.tx_power_dbm);
    r.get("noise_figure_db", c.noise_figure_db);
    r.get("blocklength", c.blocklength);
    r.get("decode_error_prob", c.decode_error_prob);
    r.get_as("scenario", c.scenario, scenario_from_string);
    r.get("clutter_density", c.clutter_density);
    r.get("clutter_size_m", c.clutter_size_m);
    r.get("shadow_decorr_m", c.shadow_decorr_m);
    r.get("shadow_sigma_db", c.shadow_sigma_db);
    r.get("fading_doppler_hz", c.fading_doppler_hz);
}

void read_layout(ObjectReader r, LayoutConfig& c)
{
    r.get("width_m", c.width_m);
    r.get("height_m", c.height_m);
    r.get("alley_width_m", c.alley_width_m);
    r.get("obstacle_rows", c.obstacle_rows);
    r.get("obstacle_cols", c.obstacle_cols);
}

void read_mobility(ObjectReader r, MobilityConfig& c)
{
    r.get("nominal_speed_mps", c.nominal_speed_mps);
    r.get("min_separation_m", c.min_separation_m);
    r.get("subnetwork_radius_m", c.subnetwork_radius_m);
    r.get("max_spawn_attempts", c.max_spawn_attempts);
    r.get("max_speed_halvings", c.max_speed_halvings);
}

void read_env(ObjectReader r, EnvConfig& c, std::vector<std::string>& problems)
{
    r.get("num_subnetworks", c.num_subnetworks);
    r.get("devices_per_subnetwork", c.devices_per_subnetwork);
    r.get("dt_s", c.dt_s);
    r.get("steps_per_episode", c.steps_per_episode);
    r.get("max_switch_delay", c.max_switch_delay);
    r.get("switch_gating", c.switch_gating);
    r.get_as("measure", c.observation.measure, measure_from_string);
    r.get("observation_floor_db", c.observation.floor_db);
    r.get("observation_ceil_db", c.observation.ceil_db);
    {
        ObjectReader rw(r.child("reward"), r.qualified("reward"), problems);
        rw.get("lambda1", c.reward.lambda1);
        rw.get("lambda2", c.reward.lambda2);
        rw.get("r_min", c.reward.r_min);
    }
    read_mobility(ObjectReader(r.child("mobility"), r.qualified("mobility"), problems), c.mobility);
}

void read_ddqn(ObjectReader r, DdqnConfig& c)
{
    r.get("hidden", c.hidden);
    r.get_as("activation", c.activation, activation_from_string);
    r.get("learning_rate", c.learning_rate);
    r.get("discount", c.discount);
    r.get("batch_size", c.batch_size);
    r.get("replay_capacity", c.replay_capacity);
    r.get("polyak_tau", c.polyak_tau);
    r.get("epsilon_start", c.epsilon_start);
    r.get("epsilon_end", c.epsilon_end);
    r.get("epsilon_decay_fraction", c.epsilon_decay_fraction);
    r.get("warmup_transitions", c.warmup_transitions);
    r.get("train_every", c.train_every);
    r.get("max_grad_norm", c.max_grad_norm);
    r.get("input_scale", c.input_scale);
}

void read_ppo(ObjectReader r, PpoConfig& c)
{
    r.get("hidden", c.hidden);
    r.get_as("activation", c.activation, activation_from_string);
    r.get("actor_learning_rate", c.actor_learning_rate);
    r.get("critic_learning_rate", c.critic_learning_rate);
    r.get("discount", c.discount);
    r.get("gae_lambda", c.gae_lambda);
    r.get("clip_eta", c.clip_eta);
    r.get("epochs", c.epochs);
    r.get("minibatch_size", c.minibatch_size);
    r.get("rollout_steps", c.rollout_steps);
    r.get("entropy_coef", c.entropy_coef);
    r.get("max_grad_norm", c.max_grad_norm);
    r.get("input_scale", c.input_scale);
}

nlohmann::json scenario_json(const ClutterScenario& s)
{
    return {{"scenario", to_string(s.scenario)},
            {"clutter_size_m", s.clutter_size_m},
            {"clutter_density", s.clutter_density}};
}

std::string fmt(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace

ConfigSchemaError::ConfigSchemaError(const std::vector<std::string>& problems)
    : ConfigError("invalid configuration: " + join(problems, "; ")), problems_(problems)
{
}

std::string ClutterScenario::label() const
{
    std::ostringstream os;
    os << to_string(scenario) << "(" << clutter_size_m << "," << clutter_density << ")";
    return os.str();
}

std::vector<ClutterScenario> default_clutter_scenarios()
{
    return {{Scenario::InF_SL, 10.0, 0.2},
            {Scenario::InF_SL, 10.0, 0.35},
            {Scenario::InF_DL, 2.0, 0.4},
            {Scenario::InF_DL, 2.0, 0.6}};
}

bool ExperimentConfig::is_learned() const
{
    return mode != "cgc" && mode != "greedy" && mode != "random";
}

TrainingMode ExperimentConfig::training_mode() const
{
    return TrainingMode::parse(mode);
}

void ExperimentConfig::validate() const
{
    std::vector<std::string> problems;
    auto check = [&](const std::string& what, auto&& fn) {
        try {
            fn();
        } catch (const std::invalid_argument& e) {
            problems.push_back(what + ": " + e.what());
        }
    };
    if (is_learned())
        check("mode", [&] { training_mode(); });
    if (episodes < 1)
        problems.push_back("episodes must be >= 1");
    if (seeds.empty())
        problems.push_back("seeds must not be empty");
    if (tau_agg < 1)
        problems.push_back("tau_agg must be >= 1");
    if (eval_seeds.empty() || eval_episodes_per_seed < 1)
        problems.push_back("evaluation needs at least one seed and one episode");
    for (int n : density_values) {
        if (n < 1)
            problems.push_back("density_values must be >= 1");
    }
    if (!agg_weights.empty() && static_cast<int>(agg_weights.size()) != env.num_subnetworks)
        problems.push_back("agg_weights needs one weight per subnetwork");
    check("env", [&] { env.validate(); });
    check("ddqn", [&] { ddqn.validate(); });
    check("ppo", [&] { ppo.validate(); });
    if (!problems.empty())
        throw ConfigSchemaError(problems);
}

ExperimentConfig parse_config(const nlohmann::json& j)
{
    ExperimentConfig c;
    std::vector<std::string> problems;
    {
        ObjectReader r(j, "", problems);
        r.get("mode", c.mode);
        r.get("episodes", c.episodes);
        r.get("seeds", c.seeds);
        r.get("output_dir", c.output_dir);
        r.get("tau_agg", c.tau_agg);
        r.get("agg_weights", c.agg_weights);
        r.get_as("orf", c.env.observation.orf, orf_from_string);
        r.get("eval_seeds", c.eval_seeds);
        r.get("eval_episodes_per_seed", c.eval_episodes_per_seed);
        r.get("density_values", c.density_values);
        r.get("cgc_every_step", c.cgc_every_step);
        r.get("log_wall_time", c.log_wall_time);
        read_radio(ObjectReader(r.child("radio"), "radio", problems), c.env.radio);
        read_layout(ObjectReader(r.child("layout"), "layout", problems), c.env.layout);
        read_env(ObjectReader(r.child("env"), "env", problems), c.env, problems);
        read_ddqn(ObjectReader(r.child("ddqn"), "ddqn", problems), c.ddqn);
        read_ppo(ObjectReader(r.child("ppo"), "ppo", problems), c.ppo);
        if (r.has("clutter_scenarios")) {
            const auto& list = r.child("clutter_scenarios");
            if (!list.is_array()) {
                problems.push_back("'clutter_scenarios' must be an array");
            } else {
                c.clutter_scenarios.clear();
                for (std::size_t i = 0; i < list.size(); ++i) {
                    ClutterScenario s;
                    ObjectReader rs(list[i], "clutter_scenarios[" + std::to_string(i) + "]", problems);
                    rs.get_as("scenario", s.scenario, scenario_from_string);
                    rs.get("clutter_size_m", s.clutter_size_m);
                    rs.get("clutter_density", s.clutter_density);
                    c.clutter_scenarios.push_back(s);
                }
            }
        }
    }
    if (!problems.empty())
        throw ConfigSchemaError(problems);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

nlohmann::json to_json(const ExperimentConfig& c)
{
    const auto& e = c.env;
    const auto& rc = e.radio;
    nlohmann::json j;
    j["mode"] = c.mode;
    j["episodes"] = c.episodes;
    j["seeds"] = c.seeds;
    j["output_dir"] = c.output_dir;
    j["tau_agg"] = c.tau_agg;
    j["agg_weights"] = c.agg_weights;
    j["orf"] = to_string(e.observation.orf);
    j["eval_seeds"] = c.eval_seeds;
    j["eval_episodes_per_seed"] = c.eval_episodes_per_seed;
    j["density_values"] = c.density_values;
    j["cgc_every_step"] = c.cgc_every_step;
    j["log_wall_time"] = c.log_wall_time;
    j["radio"] = {{"carrier_freq_hz", rc.carrier_freq_hz},
                  {"channel_bandwidth_hz", rc.channel_bandwidth_hz},
                  {"num_channels", rc.num_channels},
                  {"tx_power_dbm", rc.tx_power_dbm},
                  {"noise_figure_db", rc.noise_figure_db},
                  {"blocklength", rc.blocklength},
                  {"decode_error_prob", rc.decode_error_prob},
                  {"scenario", to_string(rc.scenario)},
                  {"clutter_density", rc.clutter_density},
                  {"clutter_size_m", rc.clutter_size_m},
                  {"shadow_decorr_m", rc.shadow_decorr_m},
                  {"shadow_sigma_db", rc.shadow_sigma_db},
                  {"fading_doppler_hz", rc.fading_doppler_hz}};
    j["layout"] = {{"width_m", e.layout.width_m},
                   {"height_m", e.layout.height_m},
                   {"alley_width_m", e.layout.alley_width_m},
                   {"obstacle_rows", e.layout.obstacle_rows},
                   {"obstacle_cols", e.layout.obstacle_cols}};
    j["env"] = {{"num_subnetworks", e.num_subnetworks},
                {"devices_per_subnetwork", e.devices_per_subnetwork},
                {"dt_s", e.dt_s},
                {"steps_per_episode", e.steps_per_episode},
                {"max_switch_delay", e.max_switch_delay},
                {"switch_gating", e.switch_gating},
                {"measure", to_string(e.observation.measure)},
                {"observation_floor_db", e.observation.floor_db},
                {"observation_ceil_db", e.observation.ceil_db},
                {"reward", {{"lambda1", e.reward.lambda1}, {"lambda2", e.reward.lambda2}, {"r_min", e.reward.r_min}}},
                {"mobility",
                 {{"nominal_speed_mps", e.mobility.nominal_speed_mps},
                  {"min_separation_m", e.mobility.min_separation_m},
                  {"subnetwork_radius_m", e.mobility.subnetwork_radius_m},
                  {"max_spawn_attempts", e.mobility.max_spawn_attempts},
                  {"max_speed_halvings", e.mobility.max_speed_halvings}}}};
    const auto& d = c.ddqn;
    j["ddqn"] = {{"hidden", d.hidden},
                 {"activation", to_string(d.activation)},
                 {"learning_rate", d.learning_rate},
                 {"discount", d.discount},
                 {"batch_size", d.batch_size},
                 {"replay_capacity", d.replay_capacity},
                 {"polyak_tau", d.polyak_tau},
                 {"epsilon_start", d.epsilon_start},
                 {"epsilon_end", d.epsilon_end},
                 {"epsilon_decay_fraction", d.epsilon_decay_fraction},
                 {"warmup_transitions", d.warmup_transitions},
                 {"train_every", d.train_every},
                 {"max_grad_norm", d.max_grad_norm},
                 {"input_scale", d.input_scale}};
    const auto& p = c.ppo;
    j["ppo"] = {{"hidden", p.hidden},
                {"activation", to_string(p.activation)},
                {"actor_learning_rate", p.actor_learning_rate},
                {"critic_learning_rate", p.critic_learning_rate},
                {"discount", p.discount},
                {"gae_lambda", p.gae_lambda},
                {"clip_eta", p.clip_eta},
                {"epochs", p.epochs},
                {"minibatch_size", p.minibatch_size},
                {"rollout_steps", p.rollout_steps},
                {"entropy_coef", p.entropy_coef},
                {"max_grad_norm", p.max_grad_norm},
                {"input_scale", p.input_scale}};
    j["clutter_scenarios"] = nlohmann::json::array();
    for (const auto& s : c.clutter_scenarios)
        j["clutter_scenarios"].push_back(scenario_json(s));
    return j;
}

std::string config_hash(const ExperimentConfig& config)
{
    // object keys are sorted, so dump() is canonical; where results go is not
    // part of the experiment
    auto j = to_json(config);
    j.erase("output_dir");
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config)
{
    if (const char* env = std::getenv(kOutputDirEnv); env && *env)
        return env;
    return config.output_dir;
}

// ---------------------------------------------------------------------------
// Metrics sink

MetricsSink::MetricsSink(const std::filesystem::path& path, std::string config_hash)
    : path_(path), hash_(std::move(config_hash))
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    if (std::filesystem::exists(path)) {
        std::ifstream in(path);
        std::string line;
        if (std::getline(in, line) && !line.empty()) {
            const auto existing = nlohmann::json::parse(line, nullptr, false);
            if (existing.is_discarded() || !existing.contains("config_hash")
                || existing["config_hash"] != hash_) {
                throw HashMismatch(path.string() + " holds rows from a different configuration");
            }
        }
    }
    out_.open(path, std::ios::app);
    if (!out_)
        throw std::runtime_error("cannot open " + path.string() + " for appending");
}

void MetricsSink::write(nlohmann::json row)
{
    row["config_hash"] = hash_;
    out_ << row.dump() << '\n';
    out_.flush();
}

// ---------------------------------------------------------------------------
// Runners

EnvConfig effective_env(const ExperimentConfig& config)
{
    EnvConfig env = config.env;
    if (config.mode == "cgc" && config.cgc_every_step)
        env.switch_gating = false;
    return env;
}

namespace {

std::filesystem::path prepare_dir(const ExperimentConfig& config)
{
    const auto dir = resolve_output_dir(config);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string seed_tag(const std::string& mode, std::uint64_t seed)
{
    return mode + "_seed" + std::to_string(seed);
}

void write_csv(const std::filesystem::path& path, const std::string& header,
               const std::vector<std::string>& rows)
{
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + path.string());
        out << header << '\n';
        for (const auto& r : rows)
            out << r << '\n';
    }
    std::filesystem::rename(tmp, path);
}

// Evaluation and sweeps use their own seeds, disjoint from training.
std::uint64_t eval_episode_seed(std::uint64_t seed, int episode)
{
    return derive_seed(seed, 500000 + static_cast<std::uint64_t>(episode));
}

double policy_input_scale(const ExperimentConfig& config, const std::vector<NetworkWeights>& nets)
{
    return nets.front().spec.output_head == OutputHead::softmax ? config.ppo.input_scale
                                                                : config.ddqn.input_scale;
}

} // namespace

TrainArtifacts run_train(const ExperimentConfig& config)
{
    config.validate();
    const auto dir = prepare_dir(config);
    const std::string hash = config_hash(config);
    const EnvConfig env_cfg = effective_env(config);
    TrainArtifacts art;
    for (std::uint64_t seed : config.seeds) {
        const auto tag = seed_tag(config.mode, seed);
        const auto log_path = dir / (tag + ".jsonl");
        std::filesystem::remove(log_path);
        MetricsSink sink(log_path, hash);
        Environment env(env_cfg);
        TrainingLog log;

        auto emit = [&](const EpisodeRecord& rec) {
            auto row = to_json(rec, config.log_wall_time);
            row["seed"] = seed;
            row["n"] = env_cfg.num_subnetworks;
            row["scenario"] = to_string(env_cfg.radio.scenario);
            sink.write(std::move(row));
        };

        if (config.is_learned()) {
            TrainConfig tc;
            tc.episodes = config.episodes;
            tc.seed = seed;
            tc.ddqn = config.ddqn;
            tc.ppo = config.ppo;
            tc.tau_agg = config.tau_agg;
            tc.agg_weights = config.agg_weights;
            tc.on_episode = emit;
            if (config.training_mode().coordination == Coordination::federated)
                tc.round_checkpoint = dir / (tag + "_global.ckpt");
            Trainer trainer(config.training_mode(), env, tc);
            log = trainer.run();
            const auto ckpt = dir / (tag + ".ckpt");
            save_checkpoint(ckpt, trainer.export_policy());
            art.checkpoints.push_back(ckpt);
        } else {
            auto policy = make_baseline(config.mode);
            for (int e = 0; e < config.episodes; ++e) {
                StepOutput current = env.reset(episode_seed(seed, e));
                policy->begin_episode(episode_seed(seed, e), env);
                std::vector<double> per_agent(static_cast<std::size_t>(env_cfg.num_subnetworks), 0.0);
                int steps = 0;
                while (!current.done) {
                    current = env.step(policy->act(env, current));
                    for (std::size_t i = 0; i < per_agent.size(); ++i)
                        per_agent[i] += current.rewards[i];
                    ++steps;
                }
                EpisodeRecord rec;
                rec.episode = e;
                rec.mode = config.mode;
                rec.tau_agg = config.tau_agg;
                for (double& r : per_agent)
                    r /= std::max(1, steps);
                rec.per_agent_reward = per_agent;
                rec.mean_reward = std::accumulate(per_agent.begin(), per_agent.end(), 0.0) / per_agent.size();
                emit(rec);
                log.episodes.push_back(std::move(rec));
            }
        }
        art.logs.push_back(std::move(log));
        art.log_files.push_back(log_path);
    }
    return art;
}

std::unique_ptr<Policy> load_policy(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                                    const EnvConfig& env)
{
    auto nets = load_checkpoint(checkpoint);
    const double scale = policy_input_scale(config, nets);
    auto policy = std::make_unique<LearnedPolicy>(std::move(nets), scale, config.mode);
    policy->check_compatible(env);
    return policy;
}

RateSamples collect_rates(const ExperimentConfig& config, const EnvConfig& env_cfg, Policy& policy)
{
    RateSamples out;
    Environment env(env_cfg);
    for (std::uint64_t seed : config.eval_seeds) {
        for (int e = 0; e < config.eval_episodes_per_seed; ++e) {
            auto r = run_episode(env, policy, eval_episode_seed(seed, e));
            out.rate_bps.insert(out.rate_bps.end(), r.device_rates_bps.begin(), r.device_rates_bps.end());
            out.se.insert(out.se.end(), r.device_se.begin(), r.device_se.end());
        }
    }
    return out;
}

double percentile(std::vector<double> samples, double p)
{
    if (samples.empty())
        throw std::invalid_argument("percentile of an empty sample");
    if (!(p > 0.0 && p <= 100.0))
        throw std::invalid_argument("percentile must lie in (0, 100]");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
    return samples[std::max<std::size_t>(rank, 1) - 1];
}

std::vector<CdfRow> rate_cdf(const RateSamples& samples)
{
    std::vector<double> rates = samples.rate_bps;
    std::vector<double> se = samples.se;
    std::sort(rates.begin(), rates.end());
    std::sort(se.begin(), se.end());
    std::vector<CdfRow> rows;
    for (double p : cdf_percentiles()) {
        const auto n = static_cast<double>(rates.size());
        const auto idx = std::max<std::size_t>(static_cast<std::size_t>(std::ceil(p / 100.0 * n)), 1) - 1;
        rows.push_back({p, p / 100.0, rates.at(idx), se.at(idx)});
    }
    return rows;
}

std::vector<CdfRow> run_eval(const ExperimentConfig& config, const std::optional<std::filesystem::path>& checkpoint)
{
    config.validate();
    const auto dir = prepare_dir(config);
    const std::string hash = config_hash(config);
    const EnvConfig env_cfg = effective_env(config);
    std::unique_ptr<Policy> policy;
    if (config.is_learned()) {
        if (!checkpoint)
            throw ConfigError("evaluating a learned mode requires a checkpoint");
        policy = load_policy(config, *checkpoint, env_cfg);
    } else {
        policy = make_baseline(config.mode);
    }
    const auto samples = collect_rates(config, env_cfg, *policy);
    const auto rows = rate_cdf(samples);

    std::vector<std::string> lines;
    for (const auto& r : rows)
        lines.push_back(fmt(r.percentile) + "," + fmt(r.cdf) + "," + fmt(r.rate_bps) + "," + fmt(r.se) + ","
                        + config.mode + "," + hash);
    write_csv(dir / ("eval_" + config.mode + "_cdf.csv"), "percentile,cdf,rate_bps,se_bps_hz,method,config_hash",
              lines);
    std::vector<std::string> raw;
    raw.reserve(samples.rate_bps.size());
    for (std::size_t i = 0; i < samples.rate_bps.size(); ++i)
        raw.push_back(fmt(samples.rate_bps[i]) + "," + fmt(samples.se[i]) + "," + hash);
    write_csv(dir / ("eval_" + config.mode + "_rates.csv"), "rate_bps,se_bps_hz,config_hash", raw);
    return rows;
}

namespace {

// The methods compared by the sweeps: the trained policy (if any) and every baseline.
std::vector<std::pair<std::string, std::unique_ptr<Policy>>> sweep_methods(
    const ExperimentConfig& config, const std::optional<std::filesystem::path>& checkpoint, const EnvConfig& env)
{
    std::vector<std::pair<std::string, std::unique_ptr<Policy>>> out;
    if (checkpoint) {
        auto p = load_policy(config, *checkpoint, env);
        out.emplace_back(config.is_learned() ? config.mode : "learned", std::move(p));
    }
    for (const char* name : {"cgc", "greedy", "random"})
        out.emplace_back(name, make_baseline(name));
    return out;
}

double mean(const std::vector<double>& v)
{
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

std::vector<DensityRow> run_density_sweep(const ExperimentConfig& config,
                                          const std::optional<std::filesystem::path>& checkpoint,
                                          const std::vector<int>& n_values)
{
    config.validate();
    const auto dir = prepare_dir(config);
    const std::string hash = config_hash(config);
    std::vector<DensityRow> rows;
    std::vector<std::string> lines;
    for (int n : n_values) {
        EnvConfig env_cfg = config.env;
        env_cfg.num_subnetworks = n;
        env_cfg.validate();
        for (auto& [name, policy] : sweep_methods(config, checkpoint, env_cfg)) {
            EnvConfig run_cfg = env_cfg;
            if (name == "cgc" && config.cgc_every_step)
                run_cfg.switch_gating = false;
            const auto samples = collect_rates(config, run_cfg, *policy);
            DensityRow row{n, name, mean(samples.rate_bps), mean(samples.se)};
            lines.push_back(std::to_string(n) + "," + name + "," + fmt(row.avg_rate_bps) + "," + fmt(row.avg_se) + ","
                            + hash);
            rows.push_back(row);
        }
    }
    write_csv(dir / "density_sweep.csv", "n,method,avg_rate_bps,avg_se_bps_hz,config_hash", lines);
    return rows;
}

std::vector<ClutterRow> run_clutter_sweep(const ExperimentConfig& config,
                                          const std::optional<std::filesystem::path>& checkpoint,
                                          const std::vector<ClutterScenario>& scenarios)
{
    config.validate();
    const auto dir = prepare_dir(config);
    const std::string hash = config_hash(config);
    std::vector<ClutterRow> rows;
    std::vector<std::string> lines;
    for (const auto& sc : scenarios) {
        EnvConfig env_cfg = config.env;
        env_cfg.radio.scenario = sc.scenario;
        env_cfg.radio.clutter_size_m = sc.clutter_size_m;
        env_cfg.radio.clutter_density = sc.clutter_density;
        env_cfg.validate();
        const int devices = env_cfg.num_subnetworks * env_cfg.devices_per_subnetwork;
        for (auto& [name, policy] : sweep_methods(config, checkpoint, env_cfg)) {
            EnvConfig run_cfg = env_cfg;
            if (name == "cgc" && config.cgc_every_step)
                run_cfg.switch_gating = false;
            Environment env(run_cfg);
            std::vector<double> device_means;
            for (std::uint64_t seed : config.eval_seeds) {
                for (int e = 0; e < config.eval_episodes_per_seed; ++e) {
                    const auto r = run_episode(env, *policy, eval_episode_seed(seed, e));
                    // rates are stored step-major, `devices` per step
                    const std::size_t steps = r.device_rates_bps.size() / devices;
                    for (int d = 0; d < devices; ++d) {
                        double s = 0.0;
                        for (std::size_t t = 0; t < steps; ++t)
                            s += r.device_rates_bps[t * devices + d];
                        device_means.push_back(s / static_cast<double>(steps));
                    }
                }
            }
            ClutterRow row;
            row.scenario = sc.label();
            row.method = name;
            row.min_rate_bps = *std::min_element(device_means.begin(), device_means.end());
            row.max_rate_bps = *std::max_element(device_means.begin(), device_means.end());
            row.avg_rate_bps = mean(device_means);
            lines.push_back("\"" + row.scenario + "\"," + name + "," + fmt(row.min_rate_bps) + ","
                            + fmt(row.avg_rate_bps) + "," + fmt(row.max_rate_bps) + "," + hash);
            rows.push_back(row);
        }
    }
    write_csv(dir / "clutter_sweep.csv", "scenario,method,min_rate_bps,avg_rate_bps,max_rate_bps,config_hash", lines);
    return rows;
}

} // namespace rrm
