#pragma once

// Multi-subnetwork channel-selection environment: every subnetwork is an agent
// that observes per-channel interference measurements and picks one of K channels.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rrm/factory.hpp"
#include "rrm/radiolink.hpp"

namespace rrm {

/// Observation reduction function applied to the M per-device measurements of a channel.
enum class Orf { full, mean, max, median, min };
enum class Measure { SIR, SINR };

std::string to_string(Orf orf);
Orf orf_from_string(const std::string& s);
std::string to_string(Measure m);
Measure measure_from_string(const std::string& s);

struct ObservationConfig {
    Orf orf = Orf::min;
    Measure measure = Measure::SIR;
    // Observations are reported in dB and clamped; an empty channel has infinite SIR.
    double floor_db = -20.0;
    double ceil_db = 60.0;
};

struct RewardConfig {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double r_min = 11.0;   // bit/s/Hz

    void validate() const;
};

struct EnvConfig {
    RadioConfig radio;
    LayoutConfig layout;
    MobilityConfig mobility;
    ObservationConfig observation;
    RewardConfig reward;
    int num_subnetworks = 20;
    int devices_per_subnetwork = 1;
    double dt_s = 0.005;
    int steps_per_episode = 200;
    int max_switch_delay = 10;
    // When false every subnetwork may switch at every step.
    bool switch_gating = true;

    void validate() const;
    int observation_size() const;
};

struct StepOutput {
    std::vector<std::vector<double>> observations;   // [n] -> ORF output
    std::vector<double> rewards;                      // [n]
    std::vector<std::vector<double>> rates_bps;       // [n][m]
    std::vector<std::vector<double>> spectral_eff;    // [n][m], bit/s/Hz
    std::vector<std::vector<std::vector<double>>> sinrs;   // [n][m][k], linear, measured on every channel
    AllocationVector allocation;
    int step = 0;
    bool done = false;

    double sum_rate_bps() const;
    double mean_reward() const;
};

/// Applies the ORF to one subnetwork's [m][k] measurements (linear), returning
/// the dB-clamped state vector ordered channel by channel.
std::vector<double> reduce_observation(const std::vector<std::vector<double>>& per_device_channel,
                                       const ObservationConfig& config);

/// lambda1 * sum r - lambda2 * sum_{r < r_min} (r_min - r), rates in bit/s/Hz.
double reward(std::span<const double> rates_se, const RewardConfig& config);

/// Sum over all devices of the finite-blocklength rate, in bit/s.
double sum_rate_bps(const ChannelGainTensor& gains, const AllocationVector& allocation,
                    double noise_mw, const RadioConfig& radio);

/// Frozen radio state for allocation oracles.
struct Snapshot {
    ChannelGainTensor gains;
    double noise_mw = 0.0;
    RadioConfig radio;
    AllocationVector allocation;
    std::vector<std::vector<double>> pairwise_mw;   // [victim][aggressor]
};

class Environment {
public:
    explicit Environment(EnvConfig config);

    StepOutput reset(std::uint64_t seed);
    /// Throws std::invalid_argument for a wrong action count or a channel outside [0, K).
    StepOutput step(const AllocationVector& actions);

    /// ORF-reduced measurement vector of subnetwork n from the latest transmissions.
    std::vector<double> observe(int n) const;
    /// Linear measurements [m][k] of subnetwork n in the configured measure.
    std::vector<std::vector<double>> measurements(int n) const;

    /// Subnetworks whose channel choice takes effect on the next step.
    std::vector<bool> switching_mask() const;

    /// Mean received power from each aggressor AP at the victim's devices,
    /// averaged over channels (full-band).
    std::vector<std::vector<double>> pairwise_interference() const;
    Snapshot snapshot() const;

    const EnvConfig& config() const { return config_; }
    const FactoryLayout& layout() const { return layout_; }
    const Deployment& deployment() const { return deployment_; }
    const ChannelGainTensor& gains() const { return gains_; }
    const AllocationVector& allocation() const { return allocation_; }
    double noise_mw() const { return noise_mw_; }
    int current_step() const { return step_; }
    int num_subnetworks() const { return config_.num_subnetworks; }
    int num_channels() const { return config_.radio.num_channels; }

    /// Replace the radio state directly (used by tests to hand-build scenarios).
    void override_gains(const ChannelGainTensor& gains, const AllocationVector& allocation);

private:
    struct LosState {
        bool los = true;
        double drawn_at_m = -1.0;
    };

    void rebuild_gains();
    StepOutput measure() const;
    int draw_switch_gap();

    EnvConfig config_;
    FactoryLayout layout_;
    Deployment deployment_;
    ShadowField shadow_;
    FadingState fading_;
    std::vector<LosState> los_;
    ChannelGainTensor gains_;
    AllocationVector allocation_;
    std::vector<int> next_switch_;
    double noise_mw_ = 0.0;
    double fading_rho_ = 1.0;
    int step_ = 0;
    bool ready_ = false;
    Rng fading_rng_, los_rng_, switch_rng_;
};

} // namespace rrm
