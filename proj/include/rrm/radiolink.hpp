#pragma once

// Link budget for in-factory subnetworks: InF pathloss, LOS probability,
// correlated shadowing, Rayleigh fading, noise, SINR and finite-blocklength rate.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrm/geometry.hpp"
#include "rrm/rng.hpp"

namespace rrm {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

enum class Scenario { InF_SL, InF_DL };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

struct RadioConfig {
    double carrier_freq_hz = 6e9;
    double channel_bandwidth_hz = 10e6;
    int num_channels = 4;
    double tx_power_dbm = -10.0;
    double noise_figure_db = 10.0;
    int blocklength = 256;
    double decode_error_prob = 1e-5;
    Scenario scenario = Scenario::InF_SL;
    double clutter_density = 0.2;
    double clutter_size_m = 10.0;
    double shadow_decorr_m = 10.0;
    double shadow_sigma_db = 4.0;
    // v * f_c / c for 3 m/s at 6 GHz
    double fading_doppler_hz = 60.0;

    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const;
};

/// InF pathloss in dB. LOS and InF-SL/InF-DL NLOS per the TR 38.901 indoor-factory table.
/// Throws DomainError for distances below 1 m.
double pathloss_db(double d_3d_m, const RadioConfig& config, bool los);

/// exp(-d / k) with k = -d_clutter / ln(1 - r_clutter); 1 for an empty floor.
double los_probability(double d_2d_m, const RadioConfig& config);

/// Stationary Gaussian field in dB with covariance sigma^2 * exp(-|a-b| / d_decorr).
///
/// Realised as a sum of random cosines whose frequencies are drawn from the
/// bivariate Cauchy spectrum of the exponential kernel, so the covariance is
/// exact in expectation over seeds and the field is continuous in space.
/// Any point of the plane can be queried; the same point always returns the
/// same value for a fixed seed.
class ShadowField {
public:
    static constexpr std::size_t kDefaultFeatures = 128;

    ShadowField() = default;
    ShadowField(double sigma_db, double decorr_m, std::uint64_t seed,
                std::size_t features = kDefaultFeatures);

    double value_at(Point2 p) const;
    std::vector<double> sample(std::span<const Point2> positions) const;

    /// Shadowing of the link a-b built from the two endpoint values. Shrinks
    /// to zero for co-located endpoints and approaches sigma for distant ones.
    double link_db(Point2 a, Point2 b) const;

    double sigma_db() const { return sigma_db_; }
    double decorr_m() const { return decorr_m_; }

private:
    double sigma_db_ = 0.0;
    double decorr_m_ = 1.0;
    double amplitude_ = 0.0;
    std::vector<double> wx_, wy_, phase_;
};

ShadowField sample_shadowing(const RadioConfig& config, std::uint64_t seed);

/// Small-scale coefficients evolving as a first-order autoregression.
struct FadingState {
    std::vector<std::complex<double>> h;
    double rho = 1.0;
};

/// rho = J0(2 pi f_D dt), clamped to [0, 1].
double fading_correlation(double doppler_hz, double dt_s);

/// Unit-mean Rayleigh coefficients drawn from the stationary distribution.
FadingState init_fading(std::size_t links, double rho, Rng& rng);

/// h' = rho h + sqrt(1 - rho^2) w, w ~ CN(0, 1).
FadingState step_fading(FadingState state, Rng& rng);
void step_fading_in_place(FadingState& state, Rng& rng);

/// Thermal noise over one channel, in mW.
double noise_power_mw(const RadioConfig& config);

/// Received power in mW: 10^((p - PL - X)/10) * |h|^2.
double compose_gain(double pathloss_db, double shadow_db, std::complex<double> fading,
                    double tx_power_dbm);

/// Received powers for every (channel, transmitting AP, receiving device).
class ChannelGainTensor {
public:
    ChannelGainTensor() = default;
    ChannelGainTensor(int channels, int subnetworks, int devices_per_subnetwork);

    int channels() const { return channels_; }
    int subnetworks() const { return subnetworks_; }
    int devices_per_subnetwork() const { return devices_; }
    int receivers() const { return subnetworks_ * devices_; }
    int receiver_index(int n, int m) const { return n * devices_ + m; }

    double& at(int k, int tx, int rx) { return rx_power_mw_[index(k, tx, rx)]; }
    double at(int k, int tx, int rx) const { return rx_power_mw_[index(k, tx, rx)]; }

    std::span<const double> values() const { return rx_power_mw_; }
    std::span<double> values() { return rx_power_mw_; }

private:
    std::size_t index(int k, int tx, int rx) const
    {
        return (static_cast<std::size_t>(k) * subnetworks_ + tx) * receivers() + rx;
    }

    int channels_ = 0;
    int subnetworks_ = 0;
    int devices_ = 0;
    std::vector<double> rx_power_mw_;
};

/// Joint channel choice, one 0-based channel index per subnetwork.
using AllocationVector = std::vector<int>;

/// Sum of power received at device (n, m) on channel k from every other
/// subnetwork currently allocated to k.
double interference_mw(const ChannelGainTensor& gains, const AllocationVector& allocation,
                       int n, int m, int k);

/// SINR of device (n, m) on the channel allocated to n.
double sinr(const ChannelGainTensor& gains, const AllocationVector& allocation, int n, int m,
            double noise_mw);

/// SINR device (n, m) would see on channel k, whether or not n occupies it.
double sinr_on_channel(const ChannelGainTensor& gains, const AllocationVector& allocation, int n,
                       int m, int k, double noise_mw);

/// V = 1 - 1 / (1 + gamma)^2.
double dispersion(double gamma);

/// Q^{-1}(eps), the inverse Gaussian tail function. Throws DomainError outside (0, 1).
double q_inverse(double eps);

/// Finite-blocklength achievable rate in bit/s, clamped at zero.
double achievable_rate(double gamma, const RadioConfig& config);

/// achievable_rate / bandwidth, in bit/s/Hz.
double spectral_efficiency(double gamma, const RadioConfig& config);

} // namespace rrm
