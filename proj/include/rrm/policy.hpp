#pragma once

// Frozen allocation policies driven through the environment for evaluation.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rrm/checkpoint.hpp"
#include "rrm/env.hpp"

namespace rrm {

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual void begin_episode(std::uint64_t /*seed*/, const Environment& /*env*/) {}
    /// Requested channels; only subnetworks in env.switching_mask() get theirs applied.
    virtual AllocationVector act(const Environment& env, const StepOutput& current) = 0;
};

/// Greedy on a trained network: argmax Q for a linear head, argmax probability
/// for a softmax head. Uses the first network of the checkpoint.
class LearnedPolicy final : public Policy {
public:
    LearnedPolicy(std::vector<NetworkWeights> networks, double input_scale, std::string name);
    std::string name() const override { return name_; }
    AllocationVector act(const Environment& env, const StepOutput& current) override;
    int choose(std::span<const double> observation) const;

    /// Throws std::invalid_argument when the network does not fit the environment.
    void check_compatible(const EnvConfig& config) const;

private:
    NetworkWeights net_;
    double input_scale_;
    std::string name_;
};

/// Best channel of the previous step by measured SINR of the worst device.
class GreedyPolicy final : public Policy {
public:
    std::string name() const override { return "greedy"; }
    AllocationVector act(const Environment& env, const StepOutput& current) override;
};

/// A random channel per subnetwork, fixed for the episode.
class RandomPolicy final : public Policy {
public:
    std::string name() const override { return "random"; }
    void begin_episode(std::uint64_t seed, const Environment& env) override;
    AllocationVector act(const Environment& env, const StepOutput& current) override;

private:
    AllocationVector fixed_;
};

/// Centralized graph coloring recomputed whenever any subnetwork may switch.
class CgcPolicy final : public Policy {
public:
    std::string name() const override { return "cgc"; }
    AllocationVector act(const Environment& env, const StepOutput& current) override;
};

std::unique_ptr<Policy> make_baseline(const std::string& name);

struct EpisodeResult {
    double mean_reward = 0.0;
    std::vector<double> device_rates_bps;   // every device at every step
    std::vector<double> device_se;          // same order, bit/s/Hz
};

/// Runs one full episode of env seeded with seed under the frozen policy.
EpisodeResult run_episode(Environment& env, Policy& policy, std::uint64_t seed);

} // namespace rrm
