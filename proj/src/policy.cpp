#include "rrm/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "rrm/agents.hpp"
#include "rrm/baselines.hpp"

namespace rrm {

LearnedPolicy::LearnedPolicy(std::vector<NetworkWeights> networks, double input_scale, std::string name)
    : input_scale_(input_scale), name_(std::move(name))
{
    if (networks.empty())
        throw std::invalid_argument("LearnedPolicy: no networks");
    net_ = std::move(networks.front());
    net_.spec.validate();
    if (net_.params.size() != net_.spec.param_count())
        throw std::invalid_argument("LearnedPolicy: parameter count does not match " + describe(net_.spec));
}

void LearnedPolicy::check_compatible(const EnvConfig& config) const
{
    if (net_.spec.input_size() != config.observation_size()
        || net_.spec.output_size() != config.radio.num_channels) {
        throw std::invalid_argument("checkpoint network " + describe(net_.spec) + " does not fit an environment with "
                                    + std::to_string(config.observation_size()) + " inputs and "
                                    + std::to_string(config.radio.num_channels) + " channels");
    }
}

int LearnedPolicy::choose(std::span<const double> observation) const
{
    std::vector<double> x(observation.begin(), observation.end());
    for (double& v : x)
        v *= input_scale_;
    return argmax_lowest(forward(net_.params, net_.spec, x));
}

AllocationVector LearnedPolicy::act(const Environment& env, const StepOutput& current)
{
    const auto deciding = env.switching_mask();
    AllocationVector out = current.allocation;
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (deciding[n])
            out[n] = choose(current.observations[n]);
    }
    return out;
}

AllocationVector GreedyPolicy::act(const Environment&, const StepOutput& current)
{
    AllocationVector out = current.allocation;
    for (std::size_t n = 0; n < out.size(); ++n) {
        const auto& per_device = current.sinrs[n];
        std::vector<double> worst(per_device.front().size(), std::numeric_limits<double>::infinity());
        for (const auto& dev : per_device) {
            for (std::size_t k = 0; k < dev.size(); ++k)
                worst[k] = std::min(worst[k], dev[k]);
        }
        out[n] = greedy_select(worst);
    }
    return out;
}

void RandomPolicy::begin_episode(std::uint64_t seed, const Environment& env)
{
    fixed_ = random_allocate(env.num_subnetworks(), env.num_channels(), derive_seed(seed, 77));
}

AllocationVector RandomPolicy::act(const Environment& env, const StepOutput&)
{
    if (static_cast<int>(fixed_.size()) != env.num_subnetworks())
        throw std::logic_error("RandomPolicy: begin_episode not called");
    return fixed_;
}

AllocationVector CgcPolicy::act(const Environment& env, const StepOutput& current)
{
    const auto deciding = env.switching_mask();
    bool any = false;
    for (bool d : deciding)
        any = any || d;
    if (!any)
        return current.allocation;
    const int k = env.num_channels();
    const auto graph = build_graph(env.pairwise_interference(), k);
    return match_labels(cgc_allocate(graph, k), current.allocation, k);
}

std::unique_ptr<Policy> make_baseline(const std::string& name)
{
    if (name == "greedy")
        return std::make_unique<GreedyPolicy>();
    if (name == "random")
        return std::make_unique<RandomPolicy>();
    if (name == "cgc")
        return std::make_unique<CgcPolicy>();
    throw std::invalid_argument("unknown baseline '" + name + "'");
}

EpisodeResult run_episode(Environment& env, Policy& policy, std::uint64_t seed)
{
    EpisodeResult result;
    StepOutput current = env.reset(seed);
    policy.begin_episode(seed, env);
    double reward_sum = 0.0;
    int steps = 0;
    while (!current.done) {
        StepOutput next = env.step(policy.act(env, current));
        reward_sum += next.mean_reward();
        ++steps;
        for (std::size_t n = 0; n < next.rates_bps.size(); ++n) {
            for (std::size_t m = 0; m < next.rates_bps[n].size(); ++m) {
                result.device_rates_bps.push_back(next.rates_bps[n][m]);
                result.device_se.push_back(next.spectral_eff[n][m]);
            }
        }
        current = std::move(next);
    }
    result.mean_reward = steps ? reward_sum / steps : 0.0;
    return result;
}

} // namespace rrm
