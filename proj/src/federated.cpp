#include "rrm/federated.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace rrm {

std::string TrainingMode::name() const
{
    std::string prefix = coordination == Coordination::federated     ? "f-"
                         : coordination == Coordination::centralized ? "c-"
                                                                     : "d-";
    return prefix + (algorithm == Algorithm::maddqn ? "maddqn" : "mappo");
}

TrainingMode TrainingMode::parse(const std::string& name)
{
    for (auto c : {Coordination::federated, Coordination::centralized, Coordination::distributed}) {
        for (auto a : {Algorithm::maddqn, Algorithm::mappo}) {
            TrainingMode m{c, a};
            if (m.name() == name)
                return m;
        }
    }
    throw std::invalid_argument("unknown training mode '" + name + "'");
}

// ---------------------------------------------------------------------------
// FedAvg

namespace {

std::vector<double> checked_weights(std::size_t n, std::span<const double> weights)
{
    if (weights.empty())
        return std::vector<double>(n, 1.0 / static_cast<double>(n));
    if (weights.size() != n)
        throw std::invalid_argument("aggregate: one weight per client required");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0))
            throw std::invalid_argument("aggregate: weights must be positive");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("aggregate: weights must sum to 1");
    return {weights.begin(), weights.end()};
}

} // namespace

ParamVector aggregate(const std::vector<ParamVector>& clients, std::span<const double> weights)
{
    if (clients.empty())
        throw std::invalid_argument("aggregate: no clients");
    const std::size_t len = clients.front().size();
    for (const auto& c : clients) {
        if (c.size() != len)
            throw std::invalid_argument("aggregate: parameter vectors differ in length");
    }
    const auto w = checked_weights(clients.size(), weights);

    // Per element, sum in a canonical order relative to the smallest value:
    // order-independent, and exact when all clients agree.
    ParamVector out(len, 0.0);
    std::vector<std::pair<double, double>> terms(clients.size());
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t c = 0; c < clients.size(); ++c)
            terms[c] = {clients[c][i], w[c]};
        std::sort(terms.begin(), terms.end());
        const double base = terms.front().first;
        double acc = 0.0;
        for (const auto& [value, weight] : terms)
            acc += weight * (value - base);
        out[i] = base + acc;
    }
    return out;
}

void aggregate_clients(AggregatorState& state, std::span<FederatedClient* const> clients)
{
    if (clients.empty())
        throw std::invalid_argument("aggregate_clients: no clients");
    if (state.agg_interval_steps < 1)
        throw std::invalid_argument("aggregation interval must be >= 1");
    std::vector<std::vector<ParamVector>> models;
    models.reserve(clients.size());
    for (const auto* c : clients)
        models.push_back(c->local_models());
    const std::size_t slots = models.front().size();
    state.global_params.assign(slots, {});
    for (std::size_t s = 0; s < slots; ++s) {
        std::vector<ParamVector> slot;
        slot.reserve(models.size());
        for (auto& m : models) {
            if (m.size() != slots)
                throw std::invalid_argument("aggregate_clients: clients expose different model counts");
            slot.push_back(std::move(m[s]));
        }
        state.global_params[s] = aggregate(slot, state.weights);
    }
}

void broadcast(AggregatorState& state, std::span<FederatedClient* const> clients)
{
    if (state.global_params.empty())
        throw std::logic_error("broadcast before aggregation");
    for (auto* c : clients)
        c->load_global(state.global_params);
    ++state.round;
}

// ---------------------------------------------------------------------------
// Logging

nlohmann::json to_json(const EpisodeRecord& r, bool include_wall_time)
{
    nlohmann::json j;
    j["episode"] = r.episode;
    j["mode"] = r.mode;
    j["tau_agg"] = r.tau_agg;
    j["mean_reward"] = r.mean_reward;
    j["per_agent_reward"] = r.per_agent_reward;
    j["aggregations_so_far"] = r.aggregations_so_far;
    if (include_wall_time)
        j["wall_ms"] = r.wall_ms;
    return j;
}

std::string TrainingLog::to_jsonl(bool include_wall_time) const
{
    std::ostringstream os;
    for (const auto& e : episodes)
        os << to_json(e, include_wall_time).dump() << '\n';
    return os.str();
}

std::vector<double> TrainingLog::mean_rewards() const
{
    std::vector<double> out;
    out.reserve(episodes.size());
    for (const auto& e : episodes)
        out.push_back(e.mean_reward);
    return out;
}

void TrainConfig::validate() const
{
    if (episodes < 1)
        throw std::invalid_argument("episodes must be >= 1");
    if (tau_agg < 1)
        throw std::invalid_argument("tau_agg must be >= 1");
    ddqn.validate();
    ppo.validate();
}

std::uint64_t episode_seed(std::uint64_t base, int episode)
{
    return derive_seed(base, 1000 + static_cast<std::uint64_t>(episode));
}

// ---------------------------------------------------------------------------
// Teams

class Team {
public:
    virtual ~Team() = default;
    virtual void begin_episode(int episode, int total_episodes) = 0;
    virtual AllocationVector act(const Environment& env, const StepOutput& current) = 0;
    virtual void observe(const StepOutput& current, const StepOutput& next) = 0;
    virtual void learn(long global_step) = 0;
    virtual std::vector<FederatedClient*> clients() = 0;
    virtual std::vector<NetworkWeights> networks(std::size_t learner) const = 0;
};

namespace {

class DdqnTeam final : public Team {
public:
    DdqnTeam(Coordination coordination, int n, int obs, int k, const DdqnConfig& cfg, std::uint64_t seed)
        : n_(n), shared_(coordination == Coordination::centralized)
    {
        const int learners = shared_ ? 1 : n;
        const auto mode = shared_ ? BufferMode::shared : BufferMode::individual;
        for (int i = 0; i < learners; ++i)
            agents_.emplace_back(obs, k, cfg, derive_seed(seed, 100 + static_cast<std::uint64_t>(i)), mode);
    }

    void begin_episode(int episode, int total) override
    {
        for (auto& a : agents_)
            a.set_epsilon(epsilon_at(a.config(), episode, total));
    }

    AllocationVector act(const Environment& env, const StepOutput& current) override
    {
        const auto deciding = env.switching_mask();
        AllocationVector actions = current.allocation;
        for (int n = 0; n < n_; ++n) {
            if (deciding[n])
                actions[n] = agent(n).act(current.observations[n]);
        }
        return actions;
    }

    void observe(const StepOutput& current, const StepOutput& next) override
    {
        for (int n = 0; n < n_; ++n) {
            agent(n).remember({current.observations[n], next.allocation[n], next.rewards[n],
                               next.observations[n], next.done});
        }
    }

    void learn(long global_step) override
    {
        if (global_step % agents_.front().config().train_every != 0)
            return;
        // the shared learner takes one gradient step per subnetwork it serves
        const int repeats = shared_ ? n_ : 1;
        for (auto& a : agents_) {
            for (int r = 0; r < repeats; ++r)
                a.train_step();
        }
    }

    std::vector<FederatedClient*> clients() override
    {
        std::vector<FederatedClient*> out;
        for (auto& a : agents_)
            out.push_back(&a);
        return out;
    }

    std::vector<NetworkWeights> networks(std::size_t learner) const override
    {
        return agents_.at(learner).export_weights();
    }

private:
    DdqnAgent& agent(int n) { return agents_[shared_ ? 0 : static_cast<std::size_t>(n)]; }

    int n_;
    bool shared_;
    std::vector<DdqnAgent> agents_;
};

class PpoTeam final : public Team {
public:
    PpoTeam(Coordination coordination, int n, int obs, int k, const PpoConfig& cfg, std::uint64_t seed)
        : n_(n), shared_(coordination == Coordination::centralized), pending_(static_cast<std::size_t>(n))
    {
        if (shared_) {
            agents_.emplace_back(obs, k, cfg, derive_seed(seed, 100), n);
        } else {
            for (int i = 0; i < n; ++i)
                agents_.emplace_back(obs, k, cfg, derive_seed(seed, 100 + static_cast<std::uint64_t>(i)), 1);
        }
    }

    void begin_episode(int, int) override
    {
        for (auto& p : pending_)
            p.reset();
    }

    AllocationVector act(const Environment& env, const StepOutput& current) override
    {
        const auto deciding = env.switching_mask();
        AllocationVector actions = current.allocation;
        for (int n = 0; n < n_; ++n) {
            if (!deciding[n])
                continue;
            finish(n, false);
            const auto d = agent(n).act(current.observations[n]);
            Pending p;
            p.record.state = current.observations[n];
            p.record.action = d.action;
            p.record.logp = d.logp;
            p.record.value = d.value;
            pending_[n] = std::move(p);
            actions[n] = d.action;
        }
        return actions;
    }

    void observe(const StepOutput&, const StepOutput& next) override
    {
        for (int n = 0; n < n_; ++n) {
            if (!pending_[n])
                continue;
            pending_[n]->reward_sum += next.rewards[n];
            ++pending_[n]->steps;
            if (next.done)
                finish(n, true);
        }
    }

    void learn(long global_step) override
    {
        if (global_step % agents_.front().config().rollout_steps != 0)
            return;
        for (std::size_t a = 0; a < agents_.size(); ++a) {
            if (agents_[a].rollout_size() == 0)
                continue;
            // V of the state where the next (still open) record starts
            std::vector<double> bootstrap(static_cast<std::size_t>(agents_[a].streams()), 0.0);
            for (int s = 0; s < agents_[a].streams(); ++s) {
                const int n = shared_ ? s : static_cast<int>(a);
                if (pending_[n])
                    bootstrap[s] = pending_[n]->record.value;
            }
            agents_[a].update(bootstrap);
        }
    }

    std::vector<FederatedClient*> clients() override
    {
        std::vector<FederatedClient*> out;
        for (auto& a : agents_)
            out.push_back(&a);
        return out;
    }

    std::vector<NetworkWeights> networks(std::size_t learner) const override
    {
        return agents_.at(learner).export_weights();
    }

private:
    struct Pending {
        RolloutRecord record;
        double reward_sum = 0.0;
        int steps = 0;
    };

    PpoAgent& agent(int n) { return agents_[shared_ ? 0 : static_cast<std::size_t>(n)]; }

    // Closes subnetwork n's open decision; its reward is the mean over the holding period.
    void finish(int n, bool done)
    {
        auto& p = pending_[n];
        if (!p || p->steps == 0)
            return;
        p->record.reward = p->reward_sum / p->steps;
        p->record.done = done;
        agent(n).collect(shared_ ? n : 0, std::move(p->record));
        p.reset();
    }

    int n_;
    bool shared_;
    std::vector<PpoAgent> agents_;
    std::vector<std::optional<Pending>> pending_;
};

} // namespace

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(TrainingMode mode, Environment& env, TrainConfig config)
    : mode_(mode), env_(env), config_(std::move(config))
{
    config_.validate();
    const auto& ec = env_.config();
    const int n = ec.num_subnetworks;
    const int obs = ec.observation_size();
    const int k = ec.radio.num_channels;
    if (mode_.algorithm == Algorithm::maddqn)
        team_ = std::make_unique<DdqnTeam>(mode_.coordination, n, obs, k, config_.ddqn, config_.seed);
    else
        team_ = std::make_unique<PpoTeam>(mode_.coordination, n, obs, k, config_.ppo, config_.seed);
    aggregator_.agg_interval_steps = config_.tau_agg;
    aggregator_.weights = config_.agg_weights;

    if (mode_.coordination == Coordination::federated) {
        // common starting point; not counted as a round
        auto cl = team_->clients();
        const auto initial = cl.front()->local_models();
        for (auto* c : cl)
            c->load_global(initial);
    }
}

Trainer::~Trainer() = default;

std::vector<FederatedClient*> Trainer::clients() const
{
    return team_->clients();
}

TrainingLog Trainer::run()
{
    TrainingLog log;
    const int n = env_.num_subnetworks();
    long global_step = 0;
    auto clients = team_->clients();
    for (int e = 0; e < config_.episodes; ++e) {
        const auto start = std::chrono::steady_clock::now();
        StepOutput current = env_.reset(episode_seed(config_.seed, e));
        team_->begin_episode(e, config_.episodes);
        std::vector<double> per_agent(static_cast<std::size_t>(n), 0.0);
        int steps = 0;
        while (!current.done) {
            const auto actions = team_->act(env_, current);
            StepOutput next = env_.step(actions);
            team_->observe(current, next);
            for (int i = 0; i < n; ++i)
                per_agent[i] += next.rewards[i];
            ++steps;
            ++global_step;
            team_->learn(global_step);
            if (mode_.coordination == Coordination::federated && global_step % config_.tau_agg == 0) {
                aggregate_clients(aggregator_, clients);
                broadcast(aggregator_, clients);
                ++log.aggregations;
                if (!config_.round_checkpoint.empty())
                    save_checkpoint(config_.round_checkpoint, export_policy());
            }
            if (config_.on_step)
                config_.on_step(global_step);
            current = std::move(next);
        }

        EpisodeRecord rec;
        rec.episode = e;
        rec.mode = mode_.name();
        rec.tau_agg = config_.tau_agg;
        double total = 0.0;
        for (double& r : per_agent) {
            r /= std::max(1, steps);
            total += r;
        }
        rec.per_agent_reward = per_agent;
        rec.mean_reward = total / n;
        rec.aggregations_so_far = log.aggregations;
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        if (config_.on_episode)
            config_.on_episode(rec);
        log.episodes.push_back(std::move(rec));
    }
    return log;
}

std::vector<NetworkWeights> Trainer::export_policy() const
{
    auto nets = team_->networks(0);
    if (mode_.coordination != Coordination::federated)
        return nets;
    auto clients = team_->clients();
    AggregatorState snapshot = aggregator_;
    aggregate_clients(snapshot, clients);
    for (std::size_t s = 0; s < nets.size(); ++s)
        nets[s].params = snapshot.global_params[s];
    return nets;
}

TrainingLog train(TrainingMode mode, Environment& env, const TrainConfig& config)
{
    Trainer trainer(mode, env, config);
    return trainer.run();
}

} // namespace rrm
