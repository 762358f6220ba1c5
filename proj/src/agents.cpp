#include "rrm/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace rrm {

int argmax_lowest(std::span<const double> values)
{
    if (values.empty())
        throw std::invalid_argument("argmax of an empty range");
    int best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best])
            best = static_cast<int>(i);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Replay buffer

ReplayBuffer::ReplayBuffer(std::size_t capacity, BufferMode mode) : capacity_(capacity), mode_(mode)
{
    if (capacity == 0)
        throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
}

void ReplayBuffer::push(Transition t)
{
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
        return;
    }
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::operator[](std::size_t i) const
{
    if (i >= items_.size())
        throw std::out_of_range("ReplayBuffer index");
    // logical index 0 is the oldest element
    return items_[(head_ + i) % items_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const
{
    if (batch > items_.size())
        throw std::invalid_argument("ReplayBuffer::sample: batch larger than buffer");
    // Floyd's algorithm: batch distinct indices without materialising a permutation.
    std::unordered_set<std::size_t> chosen;
    std::vector<const Transition*> out;
    out.reserve(batch);
    const std::size_t n = items_.size();
    for (std::size_t j = n - batch; j < n; ++j) {
        std::uniform_int_distribution<std::size_t> dist(0, j);
        std::size_t t = dist(rng);
        if (!chosen.insert(t).second) {
            chosen.insert(j);
            t = j;
        }
        out.push_back(&items_[t]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// DDQN

void DdqnConfig::validate() const
{
    if (!(discount >= 0.0 && discount < 1.0))
        throw std::invalid_argument("ddqn: discount must lie in [0, 1)");
    if (batch_size < 1)
        throw std::invalid_argument("ddqn: batch_size must be >= 1");
    if (replay_capacity < static_cast<std::size_t>(batch_size))
        throw std::invalid_argument("ddqn: replay capacity smaller than a batch");
    if (!(polyak_tau > 0.0 && polyak_tau <= 1.0))
        throw std::invalid_argument("ddqn: polyak_tau must lie in (0, 1]");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0))
        throw std::invalid_argument("ddqn: epsilon bounds must lie in [0, 1]");
    if (!(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0))
        throw std::invalid_argument("ddqn: epsilon_decay_fraction must lie in (0, 1]");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("ddqn: learning_rate must be > 0");
    if (train_every < 1)
        throw std::invalid_argument("ddqn: train_every must be >= 1");
}

double epsilon_at(const DdqnConfig& config, int episode, int total_episodes)
{
    const double horizon = std::max(1.0, config.epsilon_decay_fraction * total_episodes);
    const double frac = std::min(1.0, episode / horizon);
    return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac;
}

double double_q_target(double reward, bool done, double discount, std::span<const double> online_next,
                       std::span<const double> target_next)
{
    if (done)
        return reward;
    const int a_star = argmax_lowest(online_next);
    return reward + discount * target_next[a_star];
}

namespace {

MlpSpec make_spec(int input, const std::vector<int>& hidden, int output, Activation act, OutputHead head)
{
    MlpSpec spec;
    spec.layer_sizes.push_back(input);
    spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
    spec.layer_sizes.push_back(output);
    spec.activation = act;
    spec.output_head = head;
    spec.validate();
    return spec;
}

} // namespace

DdqnAgent::DdqnAgent(int observation_size, int actions, DdqnConfig config, std::uint64_t seed,
                     BufferMode mode)
    : config_(std::move(config)),
      spec_(make_spec(observation_size, config_.hidden, actions, config_.activation, OutputHead::linear)),
      online_(init_params(spec_, derive_seed(seed, 0))),
      target_(online_),
      optimizer_(make_optimizer(online_.size(), config_.learning_rate)),
      buffer_(config_.replay_capacity, mode),
      epsilon_(config_.epsilon_start),
      actions_(actions),
      rng_(make_rng(seed, 1))
{
    config_.validate();
}

void DdqnAgent::set_epsilon(double epsilon)
{
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("epsilon must lie in [0, 1]");
    epsilon_ = epsilon;
}

std::vector<double> DdqnAgent::q_values(std::span<const double> observation) const
{
    std::vector<double> x(observation.begin(), observation.end());
    for (double& v : x)
        v *= config_.input_scale;
    return forward(online_, spec_, x);
}

int DdqnAgent::greedy_action(std::span<const double> observation) const
{
    return argmax_lowest(q_values(observation));
}

int DdqnAgent::act(std::span<const double> observation)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng_) < epsilon_) {
        std::uniform_int_distribution<int> any(0, actions_ - 1);
        return any(rng_);
    }
    return greedy_action(observation);
}

Eigen::MatrixXd DdqnAgent::stack(const std::vector<const Transition*>& batch, bool next) const
{
    Eigen::MatrixXd x(spec_.input_size(), static_cast<Eigen::Index>(batch.size()));
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& s = next ? batch[b]->next_state : batch[b]->state;
        if (static_cast<int>(s.size()) != spec_.input_size())
            throw std::invalid_argument("DdqnAgent: transition state size mismatch");
        for (int i = 0; i < spec_.input_size(); ++i)
            x(i, static_cast<Eigen::Index>(b)) = s[i] * config_.input_scale;
    }
    return x;
}

double DdqnAgent::update(const std::vector<const Transition*>& batch)
{
    if (batch.empty())
        throw std::invalid_argument("DdqnAgent::update: empty minibatch");
    const auto cols = static_cast<Eigen::Index>(batch.size());
    const Eigen::MatrixXd states = stack(batch, false);
    const Eigen::MatrixXd next_states = stack(batch, true);

    const Eigen::MatrixXd online_next = forward_batch(online_, spec_, next_states);
    const Eigen::MatrixXd target_next = forward_batch(target_, spec_, next_states);
    ForwardCache cache;
    const Eigen::MatrixXd q = forward_batch(online_, spec_, states, &cache);

    Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(q.rows(), cols);
    double loss = 0.0;
    for (Eigen::Index b = 0; b < cols; ++b) {
        const Transition& t = *batch[static_cast<std::size_t>(b)];
        if (t.action < 0 || t.action >= actions_)
            throw std::invalid_argument("DdqnAgent::update: action out of range");
        const double y = double_q_target(t.reward, t.done, config_.discount,
                                         {online_next.col(b).data(), static_cast<std::size_t>(q.rows())},
                                         {target_next.col(b).data(), static_cast<std::size_t>(q.rows())});
        const double err = q(t.action, b) - y;
        loss += err * err;
        upstream(t.action, b) = 2.0 * err / static_cast<double>(cols);
    }
    loss /= static_cast<double>(cols);

    ParamVector grad(online_.size(), 0.0);
    backward_batch(online_, spec_, cache, upstream, grad);
    clip_grad_norm(grad, config_.max_grad_norm);
    adam_step(online_, grad, optimizer_);
    polyak_update_in_place(target_, online_, config_.polyak_tau);
    return loss;
}

std::optional<double> DdqnAgent::train_step()
{
    const std::size_t needed = std::max<std::size_t>(config_.warmup_transitions, config_.batch_size);
    if (buffer_.size() < needed)
        return std::nullopt;
    return update(buffer_.sample(static_cast<std::size_t>(config_.batch_size), rng_));
}

void DdqnAgent::load_global(const std::vector<ParamVector>& global)
{
    if (global.size() != 1 || global[0].size() != online_.size())
        throw std::invalid_argument("DdqnAgent::load_global: model shape mismatch");
    online_ = global[0];
    target_ = global[0];
}

// ---------------------------------------------------------------------------
// PPO

void PpoConfig::validate() const
{
    if (!(clip_eta > 0.0))
        throw std::invalid_argument("ppo: clip_eta must be > 0");
    if (!(discount >= 0.0 && discount < 1.0))
        throw std::invalid_argument("ppo: discount must lie in [0, 1)");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
        throw std::invalid_argument("ppo: gae_lambda must lie in [0, 1]");
    if (epochs < 1 || minibatch_size < 1 || rollout_steps < 1)
        throw std::invalid_argument("ppo: epochs, minibatch_size and rollout_steps must be >= 1");
    if (!(actor_learning_rate > 0.0 && critic_learning_rate > 0.0))
        throw std::invalid_argument("ppo: learning rates must be > 0");
}

AdvantageEstimate compute_gae(std::span<const RolloutRecord> rollout, double discount, double gae_lambda,
                              double bootstrap_value)
{
    AdvantageEstimate est;
    est.advantages.assign(rollout.size(), 0.0);
    est.returns.assign(rollout.size(), 0.0);
    double next_value = bootstrap_value;
    double running = 0.0;
    for (std::size_t i = rollout.size(); i-- > 0;) {
        const auto& r = rollout[i];
        const double not_done = r.done ? 0.0 : 1.0;
        const double delta = r.reward + discount * next_value * not_done - r.value;
        running = delta + discount * gae_lambda * not_done * running;
        est.advantages[i] = running;
        est.returns[i] = running + r.value;
        next_value = r.value;
    }
    return est;
}

void normalize_advantages(std::vector<double>& advantages)
{
    if (advantages.size() < 2)
        return;
    const double n = static_cast<double>(advantages.size());
    const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
    double var = 0.0;
    for (double a : advantages)
        var += (a - mean) * (a - mean);
    const double stddev = std::sqrt(var / n);
    for (double& a : advantages)
        a = (a - mean) / (stddev + 1e-8);
}

AdvantageEstimate compute_advantages(std::span<const RolloutRecord> rollout, double discount,
                                     double gae_lambda, double bootstrap_value)
{
    AdvantageEstimate est = compute_gae(rollout, discount, gae_lambda, bootstrap_value);
    normalize_advantages(est.advantages);
    return est;
}

double clipped_surrogate(double ratio, double advantage, double eta)
{
    const double clipped = std::clamp(ratio, 1.0 - eta, 1.0 + eta);
    return std::min(ratio * advantage, clipped * advantage);
}

PpoAgent::PpoAgent(int observation_size, int actions, PpoConfig config, std::uint64_t seed, int streams)
    : config_(std::move(config)),
      actor_spec_(make_spec(observation_size, config_.hidden, actions, config_.activation, OutputHead::softmax)),
      critic_spec_(make_spec(observation_size, config_.hidden, 1, config_.activation, OutputHead::linear)),
      actor_(init_params(actor_spec_, derive_seed(seed, 0))),
      critic_(init_params(critic_spec_, derive_seed(seed, 1))),
      actor_opt_(make_optimizer(actor_.size(), config_.actor_learning_rate)),
      critic_opt_(make_optimizer(critic_.size(), config_.critic_learning_rate)),
      rollouts_(static_cast<std::size_t>(std::max(1, streams))),
      actions_(actions),
      rng_(make_rng(seed, 2))
{
    config_.validate();
}

Eigen::VectorXd PpoAgent::scaled(std::span<const double> observation) const
{
    if (static_cast<int>(observation.size()) != actor_spec_.input_size())
        throw std::invalid_argument("PpoAgent: observation size mismatch");
    Eigen::VectorXd x(actor_spec_.input_size());
    for (int i = 0; i < x.size(); ++i)
        x(i) = observation[i] * config_.input_scale;
    return x;
}

std::vector<double> PpoAgent::probabilities(std::span<const double> observation) const
{
    const Eigen::MatrixXd p = forward_batch(actor_, actor_spec_, scaled(observation));
    return {p.data(), p.data() + p.size()};
}

namespace {

// The critic predicts returns times (1 - discount), i.e. in per-step reward
// units, so its targets stay O(reward) for discounts close to one.
double value_unit(double discount)
{
    return discount < 1.0 ? 1.0 - discount : 1.0;
}

} // namespace

double PpoAgent::value(std::span<const double> observation) const
{
    return forward_batch(critic_, critic_spec_, scaled(observation))(0, 0) / value_unit(config_.discount);
}

PpoAgent::Decision PpoAgent::act(std::span<const double> observation)
{
    const auto p = probabilities(observation);
    std::discrete_distribution<int> pick(p.begin(), p.end());
    Decision d;
    d.action = pick(rng_);
    d.logp = std::log(std::max(p[d.action], 1e-300));
    d.value = value(observation);
    return d;
}

int PpoAgent::greedy_action(std::span<const double> observation) const
{
    return argmax_lowest(probabilities(observation));
}

void PpoAgent::collect(int stream, RolloutRecord record)
{
    if (record.action < 0 || record.action >= actions_)
        throw std::invalid_argument("PpoAgent::collect: action out of range");
    rollouts_.at(static_cast<std::size_t>(stream)).push_back(std::move(record));
}

std::size_t PpoAgent::rollout_size() const
{
    std::size_t n = 0;
    for (const auto& r : rollouts_)
        n += r.size();
    return n;
}

PpoLosses PpoAgent::update(const std::vector<double>& bootstrap)
{
    if (bootstrap.size() != rollouts_.size())
        throw std::invalid_argument("PpoAgent::update: one bootstrap value per stream required");

    std::vector<const RolloutRecord*> records;
    std::vector<double> advantages;
    std::vector<double> returns;
    for (std::size_t s = 0; s < rollouts_.size(); ++s) {
        if (rollouts_[s].empty())
            continue;
        const auto est = compute_gae(rollouts_[s], config_.discount, config_.gae_lambda, bootstrap[s]);
        for (std::size_t i = 0; i < rollouts_[s].size(); ++i) {
            records.push_back(&rollouts_[s][i]);
            advantages.push_back(est.advantages[i]);
            returns.push_back(est.returns[i]);
        }
    }
    PpoLosses losses;
    if (records.empty())
        return losses;
    normalize_advantages(advantages);

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t mb = static_cast<std::size_t>(config_.minibatch_size);
    int batches = 0;
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng_);
        for (std::size_t start = 0; start < order.size(); start += mb) {
            const std::size_t end = std::min(order.size(), start + mb);
            const auto cols = static_cast<Eigen::Index>(end - start);
            Eigen::MatrixXd x(actor_spec_.input_size(), cols);
            for (Eigen::Index c = 0; c < cols; ++c)
                x.col(c) = scaled(records[order[start + static_cast<std::size_t>(c)]]->state);

            ForwardCache actor_cache;
            const Eigen::MatrixXd probs = forward_batch(actor_, actor_spec_, x, &actor_cache);
            Eigen::MatrixXd actor_up = Eigen::MatrixXd::Zero(probs.rows(), cols);
            double objective = 0.0;
            for (Eigen::Index c = 0; c < cols; ++c) {
                const std::size_t idx = order[start + static_cast<std::size_t>(c)];
                const RolloutRecord& r = *records[idx];
                const double a_hat = advantages[idx];
                const double logp = std::log(std::max(probs(r.action, c), 1e-300));
                const double ratio = std::exp(logp - r.logp);
                objective += clipped_surrogate(ratio, a_hat, config_.clip_eta);
                // gradient flows only while the unclipped branch is the minimum
                const double clipped = std::clamp(ratio, 1.0 - config_.clip_eta, 1.0 + config_.clip_eta);
                const double coef = (ratio * a_hat <= clipped * a_hat) ? a_hat * ratio : 0.0;
                // d(-objective)/dlogits = -coef * (onehot - p)
                for (Eigen::Index j = 0; j < probs.rows(); ++j) {
                    const double onehot = (j == r.action) ? 1.0 : 0.0;
                    actor_up(j, c) = -coef * (onehot - probs(j, c)) / static_cast<double>(cols);
                }
                if (config_.entropy_coef > 0.0) {
                    double entropy = 0.0;
                    for (Eigen::Index j = 0; j < probs.rows(); ++j)
                        entropy -= probs(j, c) * std::log(std::max(probs(j, c), 1e-300));
                    for (Eigen::Index j = 0; j < probs.rows(); ++j) {
                        const double p = probs(j, c);
                        const double dh = -p * (std::log(std::max(p, 1e-300)) + entropy);
                        actor_up(j, c) -= config_.entropy_coef * dh / static_cast<double>(cols);
                    }
                }
            }
            ParamVector actor_grad(actor_.size(), 0.0);
            backward_batch(actor_, actor_spec_, actor_cache, actor_up, actor_grad, GradientAt::logits);
            clip_grad_norm(actor_grad, config_.max_grad_norm);
            adam_step(actor_, actor_grad, actor_opt_);

            ForwardCache critic_cache;
            const Eigen::MatrixXd v = forward_batch(critic_, critic_spec_, x, &critic_cache);
            Eigen::MatrixXd critic_up(1, cols);
            const double unit = value_unit(config_.discount);
            double value_loss = 0.0;
            for (Eigen::Index c = 0; c < cols; ++c) {
                const std::size_t idx = order[start + static_cast<std::size_t>(c)];
                const double err = v(0, c) - returns[idx] * unit;
                value_loss += err * err;
                critic_up(0, c) = 2.0 * err / static_cast<double>(cols);
            }
            ParamVector critic_grad(critic_.size(), 0.0);
            backward_batch(critic_, critic_spec_, critic_cache, critic_up, critic_grad);
            clip_grad_norm(critic_grad, config_.max_grad_norm);
            adam_step(critic_, critic_grad, critic_opt_);

            losses.policy_loss += -objective / static_cast<double>(cols);
            losses.value_loss += value_loss / static_cast<double>(cols);
            ++batches;
        }
    }
    losses.policy_loss /= batches;
    losses.value_loss /= batches;
    for (auto& r : rollouts_)
        r.clear();
    return losses;
}

void PpoAgent::load_global(const std::vector<ParamVector>& global)
{
    if (global.size() != 2 || global[0].size() != actor_.size() || global[1].size() != critic_.size())
        throw std::invalid_argument("PpoAgent::load_global: model shape mismatch");
    actor_ = global[0];
    critic_ = global[1];
}

} // namespace rrm
