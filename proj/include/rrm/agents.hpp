#pragma once

// Per-subnetwork learners: double DQN with experience replay and PPO with a
// clipped surrogate and a separate value network.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rrm/approximator.hpp"
#include "rrm/checkpoint.hpp"
#include "rrm/rng.hpp"

namespace rrm {

/// Index of the largest entry; ties go to the lowest index.
int argmax_lowest(std::span<const double> values);

/// Anything whose trainable weights take part in federated averaging.
class FederatedClient {
public:
    virtual ~FederatedClient() = default;
    virtual std::vector<ParamVector> local_models() const = 0;
    virtual void load_global(const std::vector<ParamVector>& global) = 0;
};

struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;
};

enum class BufferMode { shared, individual };

/// Fixed-capacity FIFO of transitions.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity, BufferMode mode = BufferMode::individual);

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    BufferMode mode() const { return mode_; }
    const Transition& operator[](std::size_t i) const;

    /// Distinct transitions chosen uniformly without replacement.
    std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;

private:
    std::size_t capacity_;
    BufferMode mode_;
    std::size_t head_ = 0;   // oldest element once full
    std::vector<Transition> items_;
};

struct DdqnConfig {
    std::vector<int> hidden = {64, 64};
    Activation activation = Activation::relu;
    double learning_rate = 3e-4;
    double discount = 0.99;
    int batch_size = 64;
    std::size_t replay_capacity = 100000;
    double polyak_tau = 0.005;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.6;
    std::size_t warmup_transitions = 1000;
    int train_every = 1;
    double max_grad_norm = 10.0;
    double input_scale = 0.025;   // observations arrive in dB

    void validate() const;
};

/// Linear decay from epsilon_start to epsilon_end over the first
/// epsilon_decay_fraction of the episodes, constant afterwards.
double epsilon_at(const DdqnConfig& config, int episode, int total_episodes);

/// y = r for terminal transitions, else r + discount * Q_target(s', argmax_a Q_online(s', a)).
double double_q_target(double reward, bool done, double discount, std::span<const double> online_next,
                       std::span<const double> target_next);

class DdqnAgent : public FederatedClient {
public:
    DdqnAgent(int observation_size, int actions, DdqnConfig config, std::uint64_t seed,
              BufferMode mode = BufferMode::individual);

    int act(std::span<const double> observation);
    int greedy_action(std::span<const double> observation) const;
    std::vector<double> q_values(std::span<const double> observation) const;

    void set_epsilon(double epsilon);
    double epsilon() const { return epsilon_; }

    void remember(Transition t) { buffer_.push(std::move(t)); }
    const ReplayBuffer& buffer() const { return buffer_; }

    /// One gradient step on the mean squared Bellman error; returns the loss before the step.
    double update(const std::vector<const Transition*>& batch);
    /// Samples a minibatch and updates once the warm-up is reached.
    std::optional<double> train_step();

    const MlpSpec& spec() const { return spec_; }
    const ParamVector& online() const { return online_; }
    const ParamVector& target() const { return target_; }
    void set_online(ParamVector p) { online_ = std::move(p); }
    void set_target(ParamVector p) { target_ = std::move(p); }
    const DdqnConfig& config() const { return config_; }

    std::vector<ParamVector> local_models() const override { return {online_}; }
    void load_global(const std::vector<ParamVector>& global) override;

    std::vector<NetworkWeights> export_weights() const { return {{spec_, online_}}; }

private:
    Eigen::MatrixXd stack(const std::vector<const Transition*>& batch, bool next) const;

    DdqnConfig config_;
    MlpSpec spec_;
    ParamVector online_;
    ParamVector target_;
    AdamState optimizer_;
    ReplayBuffer buffer_;
    double epsilon_ = 1.0;
    int actions_;
    Rng rng_;
};

struct PpoConfig {
    std::vector<int> hidden = {64, 64};
    Activation activation = Activation::relu;
    double actor_learning_rate = 3e-4;
    double critic_learning_rate = 1e-3;
    double discount = 0.99;
    double gae_lambda = 0.95;
    double clip_eta = 0.2;
    int epochs = 4;
    int minibatch_size = 64;
    int rollout_steps = 32;    // environment steps between updates
    double entropy_coef = 0.0;
    double max_grad_norm = 0.5;
    double input_scale = 0.025;

    void validate() const;
};

struct RolloutRecord {
    std::vector<double> state;
    int action = 0;
    double logp = 0.0;
    double reward = 0.0;
    double value = 0.0;
    bool done = false;
};

struct AdvantageEstimate {
    std::vector<double> advantages;
    std::vector<double> returns;   // advantage + value, before normalization
};

/// GAE(lambda) over one trajectory. bootstrap_value is V of the state following
/// the last record and is ignored when that record is terminal.
AdvantageEstimate compute_gae(std::span<const RolloutRecord> rollout, double discount, double gae_lambda,
                              double bootstrap_value);

/// Shifts and scales to zero mean and unit variance (left unchanged for a single sample).
void normalize_advantages(std::vector<double>& advantages);

/// compute_gae followed by normalization of the advantages.
AdvantageEstimate compute_advantages(std::span<const RolloutRecord> rollout, double discount,
                                     double gae_lambda, double bootstrap_value);

/// min(r A, clip(r, 1 - eta, 1 + eta) A).
double clipped_surrogate(double ratio, double advantage, double eta);

struct PpoLosses {
    double policy_loss = 0.0;
    double value_loss = 0.0;
};

class PpoAgent : public FederatedClient {
public:
    struct Decision {
        int action = 0;
        double logp = 0.0;
        double value = 0.0;
    };

    /// streams > 1 keeps independent trajectories (one per subnetwork) for a shared learner.
    PpoAgent(int observation_size, int actions, PpoConfig config, std::uint64_t seed, int streams = 1);

    Decision act(std::span<const double> observation);
    int greedy_action(std::span<const double> observation) const;
    std::vector<double> probabilities(std::span<const double> observation) const;
    /// State value in return units; the critic itself outputs value * (1 - discount).
    double value(std::span<const double> observation) const;

    void collect(int stream, RolloutRecord record);
    std::size_t rollout_size() const;
    const std::vector<RolloutRecord>& rollout(int stream) const { return rollouts_.at(stream); }
    int streams() const { return static_cast<int>(rollouts_.size()); }

    /// Runs the clipped-surrogate and value updates over all collected records
    /// and clears the rollout. bootstrap[s] is V of the state after stream s's last record.
    PpoLosses update(const std::vector<double>& bootstrap);

    const MlpSpec& actor_spec() const { return actor_spec_; }
    const MlpSpec& critic_spec() const { return critic_spec_; }
    const ParamVector& actor() const { return actor_; }
    const ParamVector& critic() const { return critic_; }
    void set_actor(ParamVector p) { actor_ = std::move(p); }
    void set_critic(ParamVector p) { critic_ = std::move(p); }
    const PpoConfig& config() const { return config_; }

    std::vector<ParamVector> local_models() const override { return {actor_, critic_}; }
    void load_global(const std::vector<ParamVector>& global) override;

    std::vector<NetworkWeights> export_weights() const
    {
        return {{actor_spec_, actor_}, {critic_spec_, critic_}};
    }

private:
    Eigen::VectorXd scaled(std::span<const double> observation) const;

    PpoConfig config_;
    MlpSpec actor_spec_;
    MlpSpec critic_spec_;
    ParamVector actor_;
    ParamVector critic_;
    AdamState actor_opt_;
    AdamState critic_opt_;
    std::vector<std::vector<RolloutRecord>> rollouts_;
    int actions_;
    Rng rng_;
};

} // namespace rrm
