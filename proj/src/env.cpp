#include "rrm/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rrm {

std::string to_string(Orf orf)
{
    switch (orf) {
    case Orf::full: return "full";
    case Orf::mean: return "mean";
    case Orf::max: return "max";
    case Orf::median: return "median";
    case Orf::min: return "min";
    }
    return "?";
}

Orf orf_from_string(const std::string& s)
{
    for (Orf o : {Orf::full, Orf::mean, Orf::max, Orf::median, Orf::min}) {
        if (to_string(o) == s)
            return o;
    }
    throw std::invalid_argument("unknown ORF '" + s + "'");
}

std::string to_string(Measure m)
{
    return m == Measure::SIR ? "SIR" : "SINR";
}

Measure measure_from_string(const std::string& s)
{
    if (s == "SIR" || s == "sir")
        return Measure::SIR;
    if (s == "SINR" || s == "sinr")
        return Measure::SINR;
    throw std::invalid_argument("unknown measure '" + s + "'");
}

void RewardConfig::validate() const
{
    if (lambda1 < 0.0 || lambda2 < 0.0)
        throw std::invalid_argument("reward: lambdas must be >= 0");
    if (lambda1 == 0.0 && lambda2 == 0.0)
        throw std::invalid_argument("reward: lambda1 and lambda2 cannot both be zero");
}

void EnvConfig::validate() const
{
    radio.validate();
    reward.validate();
    if (num_subnetworks < 1)
        throw std::invalid_argument("env: num_subnetworks must be >= 1");
    if (devices_per_subnetwork < 1)
        throw std::invalid_argument("env: devices_per_subnetwork must be >= 1");
    if (!(dt_s > 0.0))
        throw std::invalid_argument("env: dt_s must be > 0");
    if (steps_per_episode < 1)
        throw std::invalid_argument("env: steps_per_episode must be >= 1");
    if (max_switch_delay < 1)
        throw std::invalid_argument("env: max_switch_delay must be >= 1");
    if (!(observation.floor_db < observation.ceil_db))
        throw std::invalid_argument("env: observation floor must be below ceiling");
}

int EnvConfig::observation_size() const
{
    const int k = radio.num_channels;
    return observation.orf == Orf::full ? k * devices_per_subnetwork : k;
}

double StepOutput::sum_rate_bps() const
{
    double total = 0.0;
    for (const auto& r : rates_bps)
        total += std::accumulate(r.begin(), r.end(), 0.0);
    return total;
}

double StepOutput::mean_reward() const
{
    if (rewards.empty())
        return 0.0;
    return std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
}

namespace {

double to_clamped_db(double linear, const ObservationConfig& config)
{
    const double db = linear > 0.0 ? 10.0 * std::log10(linear) : -std::numeric_limits<double>::infinity();
    return std::clamp(db, config.floor_db, config.ceil_db);
}

double median_of(std::vector<double> v)
{
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    if (v.size() % 2 == 1)
        return v[mid];
    const double upper = v[mid];
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

} // namespace

std::vector<double> reduce_observation(const std::vector<std::vector<double>>& per_device_channel,
                                       const ObservationConfig& config)
{
    if (per_device_channel.empty())
        throw std::invalid_argument("reduce_observation: no devices");
    const std::size_t devices = per_device_channel.size();
    const std::size_t channels = per_device_channel.front().size();
    std::vector<double> out;
    out.reserve(config.orf == Orf::full ? devices * channels : channels);
    std::vector<double> column(devices);
    for (std::size_t k = 0; k < channels; ++k) {
        // aggregate in dB so that mean/median are taken over the reported values
        for (std::size_t m = 0; m < devices; ++m)
            column[m] = to_clamped_db(per_device_channel[m][k], config);
        switch (config.orf) {
        case Orf::full:
            out.insert(out.end(), column.begin(), column.end());
            break;
        case Orf::mean:
            out.push_back(std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(devices));
            break;
        case Orf::max:
            out.push_back(*std::max_element(column.begin(), column.end()));
            break;
        case Orf::min:
            out.push_back(*std::min_element(column.begin(), column.end()));
            break;
        case Orf::median:
            out.push_back(median_of(column));
            break;
        }
    }
    return out;
}

double reward(std::span<const double> rates_se, const RewardConfig& config)
{
    double sum = 0.0;
    double shortfall = 0.0;
    for (double r : rates_se) {
        sum += r;
        if (r < config.r_min)
            shortfall += config.r_min - r;
    }
    return config.lambda1 * sum - config.lambda2 * shortfall;
}

double sum_rate_bps(const ChannelGainTensor& gains, const AllocationVector& allocation, double noise_mw,
                    const RadioConfig& radio)
{
    double total = 0.0;
    for (int n = 0; n < gains.subnetworks(); ++n) {
        for (int m = 0; m < gains.devices_per_subnetwork(); ++m)
            total += achievable_rate(sinr(gains, allocation, n, m, noise_mw), radio);
    }
    return total;
}

Environment::Environment(EnvConfig config) : config_(std::move(config))
{
    config_.validate();
    layout_ = build_layout(config_.layout);
    noise_mw_ = noise_power_mw(config_.radio);
    fading_rho_ = fading_correlation(config_.radio.fading_doppler_hz, config_.dt_s);
}

int Environment::draw_switch_gap()
{
    std::uniform_int_distribution<int> gap(1, config_.max_switch_delay);
    return gap(switch_rng_);
}

StepOutput Environment::reset(std::uint64_t seed)
{
    const int n = config_.num_subnetworks;
    const int m = config_.devices_per_subnetwork;
    const int k = config_.radio.num_channels;

    MobilityConfig mobility = config_.mobility;
    deployment_ = spawn(layout_, n, m, derive_seed(seed, 10), mobility);
    shadow_ = sample_shadowing(config_.radio, derive_seed(seed, 11));
    fading_rng_ = make_rng(seed, 12);
    los_rng_ = make_rng(seed, 13);
    switch_rng_ = make_rng(seed, 14);
    Rng alloc_rng = make_rng(seed, 15);

    gains_ = ChannelGainTensor(k, n, m);
    fading_ = init_fading(gains_.values().size(), fading_rho_, fading_rng_);
    los_.assign(static_cast<std::size_t>(n) * n * m, LosState{});

    std::uniform_int_distribution<int> channel(0, k - 1);
    allocation_.resize(n);
    for (auto& c : allocation_)
        c = channel(alloc_rng);
    std::uniform_int_distribution<int> offset(0, config_.max_switch_delay - 1);
    next_switch_.resize(n);
    for (auto& s : next_switch_)
        s = offset(switch_rng_);

    step_ = 0;
    rebuild_gains();
    ready_ = true;
    return measure();
}

StepOutput Environment::step(const AllocationVector& actions)
{
    if (!ready_)
        throw std::logic_error("Environment::step called before reset");
    const int n = config_.num_subnetworks;
    const int k = config_.radio.num_channels;
    if (static_cast<int>(actions.size()) != n)
        throw std::invalid_argument("step: expected one action per subnetwork");
    for (int a : actions) {
        if (a < 0 || a >= k)
            throw std::invalid_argument("step: channel index " + std::to_string(a) + " outside [0, "
                                        + std::to_string(k) + ")");
    }

    for (int i = 0; i < n; ++i) {
        if (!config_.switch_gating) {
            allocation_[i] = actions[i];
        } else if (next_switch_[i] == step_) {
            allocation_[i] = actions[i];
            next_switch_[i] += draw_switch_gap();
        }
    }

    step_mobility(deployment_, layout_, config_.dt_s, config_.mobility);
    step_fading_in_place(fading_, fading_rng_);
    ++step_;
    rebuild_gains();
    StepOutput out = measure();
    out.done = step_ >= config_.steps_per_episode;
    return out;
}

std::vector<bool> Environment::switching_mask() const
{
    std::vector<bool> mask(config_.num_subnetworks, true);
    if (config_.switch_gating) {
        for (int i = 0; i < config_.num_subnetworks; ++i)
            mask[i] = next_switch_[i] == step_;
    }
    return mask;
}

void Environment::rebuild_gains()
{
    const int n = config_.num_subnetworks;
    const int m = config_.devices_per_subnetwork;
    const int k = config_.radio.num_channels;
    const auto& radio = config_.radio;

    std::vector<Point2> devices;
    devices.reserve(static_cast<std::size_t>(n) * m);
    for (const auto& r : deployment_.robots) {
        for (const auto& p : r.device_positions())
            devices.push_back(p);
    }
    const auto aps = deployment_.ap_positions();
    std::vector<double> ap_shadow = shadow_.sample(aps);
    std::vector<double> dev_shadow = shadow_.sample(devices);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& fading = fading_.h;
    const int rx_count = n * m;
    for (int tx = 0; tx < n; ++tx) {
        for (int rx = 0; rx < rx_count; ++rx) {
            const double d2 = distance(aps[tx], devices[rx]);
            auto& los = los_[static_cast<std::size_t>(tx) * rx_count + rx];
            if (los.drawn_at_m < 0.0 || std::abs(d2 - los.drawn_at_m) > 1.0) {
                los.los = unit(los_rng_) < los_probability(d2, radio);
                los.drawn_at_m = d2;
            }
            // Serving links are always line of sight inside the robot's coverage disc.
            const bool is_los = (rx / m == tx) || los.los;
            const double pl = pathloss_db(std::max(d2, 1.0), radio, is_los);
            const double rho = std::exp(-d2 / shadow_.decorr_m());
            const double shadow = (1.0 - rho) / std::sqrt(2.0 * (1.0 + rho)) * (ap_shadow[tx] + dev_shadow[rx]);
            for (int c = 0; c < k; ++c) {
                const std::size_t idx = (static_cast<std::size_t>(c) * n + tx) * rx_count + rx;
                gains_.at(c, tx, rx) = compose_gain(pl, shadow, fading[idx], radio.tx_power_dbm);
            }
        }
    }
}

std::vector<std::vector<double>> Environment::measurements(int n) const
{
    const int m_count = config_.devices_per_subnetwork;
    const int k_count = config_.radio.num_channels;
    const double noise = config_.observation.measure == Measure::SINR ? noise_mw_ : 0.0;
    std::vector<std::vector<double>> out(m_count, std::vector<double>(k_count));
    for (int m = 0; m < m_count; ++m) {
        for (int k = 0; k < k_count; ++k) {
            const double signal = gains_.at(k, n, gains_.receiver_index(n, m));
            const double denom = interference_mw(gains_, allocation_, n, m, k) + noise;
            out[m][k] = denom > 0.0 ? signal / denom : std::numeric_limits<double>::infinity();
        }
    }
    return out;
}

std::vector<double> Environment::observe(int n) const
{
    if (!ready_)
        throw std::logic_error("Environment::observe called before reset");
    return reduce_observation(measurements(n), config_.observation);
}

StepOutput Environment::measure() const
{
    const int n_count = config_.num_subnetworks;
    const int m_count = config_.devices_per_subnetwork;
    const int k_count = config_.radio.num_channels;
    StepOutput out;
    out.step = step_;
    out.allocation = allocation_;
    out.observations.resize(n_count);
    out.rewards.resize(n_count);
    out.rates_bps.assign(n_count, std::vector<double>(m_count));
    out.spectral_eff.assign(n_count, std::vector<double>(m_count));
    out.sinrs.assign(n_count, std::vector<std::vector<double>>(m_count, std::vector<double>(k_count)));
    for (int n = 0; n < n_count; ++n) {
        for (int m = 0; m < m_count; ++m) {
            for (int k = 0; k < k_count; ++k)
                out.sinrs[n][m][k] = sinr_on_channel(gains_, allocation_, n, m, k, noise_mw_);
            const double gamma = out.sinrs[n][m][allocation_[n]];
            out.spectral_eff[n][m] = spectral_efficiency(gamma, config_.radio);
            out.rates_bps[n][m] = out.spectral_eff[n][m] * config_.radio.channel_bandwidth_hz;
        }
        out.rewards[n] = reward(out.spectral_eff[n], config_.reward);
        out.observations[n] = observe(n);
    }
    return out;
}

std::vector<std::vector<double>> Environment::pairwise_interference() const
{
    const int n_count = gains_.subnetworks();
    const int m_count = gains_.devices_per_subnetwork();
    const int k_count = gains_.channels();
    std::vector<std::vector<double>> out(n_count, std::vector<double>(n_count, 0.0));
    for (int victim = 0; victim < n_count; ++victim) {
        for (int aggressor = 0; aggressor < n_count; ++aggressor) {
            if (aggressor == victim)
                continue;
            double acc = 0.0;
            for (int m = 0; m < m_count; ++m) {
                for (int k = 0; k < k_count; ++k)
                    acc += gains_.at(k, aggressor, gains_.receiver_index(victim, m));
            }
            out[victim][aggressor] = acc / (m_count * k_count);
        }
    }
    return out;
}

Snapshot Environment::snapshot() const
{
    return Snapshot{gains_, noise_mw_, config_.radio, allocation_, pairwise_interference()};
}

void Environment::override_gains(const ChannelGainTensor& gains, const AllocationVector& allocation)
{
    if (gains.subnetworks() != config_.num_subnetworks || gains.channels() != config_.radio.num_channels
        || gains.devices_per_subnetwork() != config_.devices_per_subnetwork
        || static_cast<int>(allocation.size()) != config_.num_subnetworks)
        throw std::invalid_argument("override_gains: shape mismatch with environment config");
    gains_ = gains;
    allocation_ = allocation;
    ready_ = true;
}

} // namespace rrm
