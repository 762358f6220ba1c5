#pragma once

// Training orchestration over N agents: federated (periodic weight averaging),
// centralized (one shared learner) and distributed (independent learners).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rrm/agents.hpp"
#include "rrm/env.hpp"

namespace rrm {

enum class Coordination { federated, centralized, distributed };
enum class Algorithm { maddqn, mappo };

struct TrainingMode {
    Coordination coordination = Coordination::federated;
    Algorithm algorithm = Algorithm::maddqn;

    /// "f-maddqn", "c-mappo", ...
    std::string name() const;
    static TrainingMode parse(const std::string& name);
    bool operator==(const TrainingMode&) const = default;
};

/// Elementwise weighted mean of equally long parameter vectors. Empty weights
/// mean 1/N each. The result depends only on the multiset of (client, weight)
/// pairs, so it is bit-identical under any client ordering.
ParamVector aggregate(const std::vector<ParamVector>& clients, std::span<const double> weights = {});

struct AggregatorState {
    std::vector<ParamVector> global_params;   // one entry per model slot (DDQN: 1, PPO: 2)
    int agg_interval_steps = 512;
    std::vector<double> weights;              // empty = uniform
    long round = 0;
};

/// Averages every model slot of the clients into state.global_params.
void aggregate_clients(AggregatorState& state, std::span<FederatedClient* const> clients);
/// Loads state.global_params into every client and advances the round counter.
void broadcast(AggregatorState& state, std::span<FederatedClient* const> clients);

struct EpisodeRecord {
    int episode = 0;
    std::string mode;
    int tau_agg = 0;
    double mean_reward = 0.0;
    std::vector<double> per_agent_reward;
    long aggregations_so_far = 0;
    double wall_ms = 0.0;
};

nlohmann::json to_json(const EpisodeRecord& record, bool include_wall_time = true);

struct TrainingLog {
    std::vector<EpisodeRecord> episodes;
    long aggregations = 0;

    std::string to_jsonl(bool include_wall_time = true) const;
    std::vector<double> mean_rewards() const;
};

struct TrainConfig {
    int episodes = 2000;
    std::uint64_t seed = 1;
    DdqnConfig ddqn;
    PpoConfig ppo;
    int tau_agg = 512;
    std::vector<double> agg_weights;   // empty = uniform
    /// When set, the global model is written here after every federated round.
    std::filesystem::path round_checkpoint;

    std::function<void(const EpisodeRecord&)> on_episode;
    /// Called after every environment step (post-learning, post-aggregation).
    std::function<void(long global_step)> on_step;

    void validate() const;
};

/// Seed of the environment for training episode e.
std::uint64_t episode_seed(std::uint64_t base, int episode);

class Team;

class Trainer {
public:
    Trainer(TrainingMode mode, Environment& env, TrainConfig config);
    ~Trainer();
    Trainer(const Trainer&) = delete;
    Trainer& operator=(const Trainer&) = delete;

    TrainingLog run();

    /// Networks of the policy to deploy: the average of the local models for
    /// federated runs, the shared model for centralized runs and agent 0's
    /// model for distributed runs.
    std::vector<NetworkWeights> export_policy() const;

    /// The learners exchanging weights (one per subnetwork, or one shared).
    std::vector<FederatedClient*> clients() const;
    const AggregatorState& aggregator() const { return aggregator_; }
    const TrainingMode& mode() const { return mode_; }

private:
    TrainingMode mode_;
    Environment& env_;
    TrainConfig config_;
    std::unique_ptr<Team> team_;
    AggregatorState aggregator_;
};

TrainingLog train(TrainingMode mode, Environment& env, const TrainConfig& config);

} // namespace rrm
