#include "rrm/radiolink.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rrm {

std::string to_string(Scenario s)
{
    return s == Scenario::InF_SL ? "InF-SL" : "InF-DL";
}

Scenario scenario_from_string(const std::string& s)
{
    if (s == "InF-SL" || s == "inf-sl" || s == "SL")
        return Scenario::InF_SL;
    if (s == "InF-DL" || s == "inf-dl" || s == "DL")
        return Scenario::InF_DL;
    throw std::invalid_argument("unknown scenario '" + s + "'");
}

void RadioConfig::validate() const
{
    if (num_channels < 1)
        throw std::invalid_argument("num_channels must be >= 1");
    if (!(carrier_freq_hz > 0.0))
        throw std::invalid_argument("carrier_freq_hz must be > 0");
    if (!(channel_bandwidth_hz > 0.0))
        throw std::invalid_argument("channel_bandwidth_hz must be > 0");
    if (blocklength < 1)
        throw std::invalid_argument("blocklength must be > 0");
    if (!(decode_error_prob > 0.0 && decode_error_prob < 1.0))
        throw std::invalid_argument("decode_error_prob must lie in (0, 1)");
    if (!(clutter_density >= 0.0 && clutter_density <= 1.0))
        throw std::invalid_argument("clutter_density must lie in [0, 1]");
    if (!(clutter_size_m > 0.0))
        throw std::invalid_argument("clutter_size_m must be > 0");
    if (!(shadow_decorr_m > 0.0))
        throw std::invalid_argument("shadow_decorr_m must be > 0");
    if (!(shadow_sigma_db >= 0.0))
        throw std::invalid_argument("shadow_sigma_db must be >= 0");
    if (!(fading_doppler_hz >= 0.0))
        throw std::invalid_argument("fading_doppler_hz must be >= 0");
}

double pathloss_db(double d_3d_m, const RadioConfig& config, bool los)
{
    if (!(d_3d_m >= 1.0))
        throw DomainError("pathloss_db: distance below the 1 m validity floor");
    const double f_ghz = config.carrier_freq_hz / 1e9;
    const double log_d = std::log10(d_3d_m);
    const double pl_los = 31.84 + 21.5 * log_d + 19.0 * std::log10(f_ghz);
    if (los)
        return pl_los;
    const double pl_sl = std::max(pl_los, 33.0 + 25.5 * log_d + 20.0 * std::log10(f_ghz));
    if (config.scenario == Scenario::InF_SL)
        return pl_sl;
    return std::max(pl_sl, 18.6 + 35.7 * log_d + 20.0 * std::log10(f_ghz));
}

double los_probability(double d_2d_m, const RadioConfig& config)
{
    const double r = config.clutter_density;
    if (r <= 0.0 || d_2d_m <= 0.0)
        return 1.0;
    if (r >= 1.0)
        return 0.0;
    const double k = -config.clutter_size_m / std::log1p(-r);
    return std::exp(-d_2d_m / k);
}

ShadowField::ShadowField(double sigma_db, double decorr_m, std::uint64_t seed, std::size_t features)
    : sigma_db_(sigma_db), decorr_m_(decorr_m)
{
    if (features == 0)
        throw std::invalid_argument("ShadowField needs at least one feature");
    amplitude_ = sigma_db * std::sqrt(2.0 / static_cast<double>(features));
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
    wx_.resize(features);
    wy_.resize(features);
    phase_.resize(features);
    for (std::size_t j = 0; j < features; ++j) {
        // bivariate Cauchy: z / |g|, scaled by the decorrelation distance
        const double zx = gauss(rng);
        const double zy = gauss(rng);
        double g = std::abs(gauss(rng));
        g = std::max(g, 1e-12);
        wx_[j] = zx / (g * decorr_m);
        wy_[j] = zy / (g * decorr_m);
        phase_[j] = uniform(rng);
    }
}

double ShadowField::value_at(Point2 p) const
{
    double acc = 0.0;
    for (std::size_t j = 0; j < phase_.size(); ++j)
        acc += std::cos(wx_[j] * p.x + wy_[j] * p.y + phase_[j]);
    return amplitude_ * acc;
}

std::vector<double> ShadowField::sample(std::span<const Point2> positions) const
{
    std::vector<double> out;
    out.reserve(positions.size());
    for (const auto& p : positions)
        out.push_back(value_at(p));
    return out;
}

double ShadowField::link_db(Point2 a, Point2 b) const
{
    const double rho = std::exp(-distance(a, b) / decorr_m_);
    return (1.0 - rho) / std::sqrt(2.0 * (1.0 + rho)) * (value_at(a) + value_at(b));
}

ShadowField sample_shadowing(const RadioConfig& config, std::uint64_t seed)
{
    return ShadowField(config.shadow_sigma_db, config.shadow_decorr_m, seed);
}

double fading_correlation(double doppler_hz, double dt_s)
{
    if (!(dt_s > 0.0))
        throw std::invalid_argument("fading_correlation: dt must be > 0");
    const double rho = std::cyl_bessel_j(0.0, 2.0 * std::numbers::pi * doppler_hz * dt_s);
    return std::clamp(rho, 0.0, 1.0);
}

namespace {

std::complex<double> complex_gaussian(Rng& rng)
{
    // CN(0, 1): each component has variance 1/2
    std::normal_distribution<double> gauss(0.0, std::numbers::sqrt2 / 2.0);
    const double re = gauss(rng);
    const double im = gauss(rng);
    return {re, im};
}

} // namespace

FadingState init_fading(std::size_t links, double rho, Rng& rng)
{
    FadingState state;
    state.rho = rho;
    state.h.resize(links);
    for (auto& h : state.h)
        h = complex_gaussian(rng);
    return state;
}

void step_fading_in_place(FadingState& state, Rng& rng)
{
    if (state.rho >= 1.0)
        return;
    const double innovation = std::sqrt(1.0 - state.rho * state.rho);
    for (auto& h : state.h)
        h = state.rho * h + innovation * complex_gaussian(rng);
}

FadingState step_fading(FadingState state, Rng& rng)
{
    step_fading_in_place(state, rng);
    return state;
}

double noise_power_mw(const RadioConfig& config)
{
    if (!(config.channel_bandwidth_hz > 0.0))
        throw std::invalid_argument("noise_power_mw: bandwidth must be > 0");
    return std::pow(10.0, (-174.0 + config.noise_figure_db
                           + 10.0 * std::log10(config.channel_bandwidth_hz)) / 10.0);
}

double compose_gain(double pathloss_db, double shadow_db, std::complex<double> fading,
                    double tx_power_dbm)
{
    return std::pow(10.0, (tx_power_dbm - pathloss_db - shadow_db) / 10.0) * std::norm(fading);
}

ChannelGainTensor::ChannelGainTensor(int channels, int subnetworks, int devices_per_subnetwork)
    : channels_(channels), subnetworks_(subnetworks), devices_(devices_per_subnetwork)
{
    if (channels < 1 || subnetworks < 1 || devices_per_subnetwork < 1)
        throw std::invalid_argument("ChannelGainTensor: all dimensions must be >= 1");
    rx_power_mw_.assign(static_cast<std::size_t>(channels) * subnetworks * receivers(), 0.0);
}

double interference_mw(const ChannelGainTensor& gains, const AllocationVector& allocation, int n,
                       int m, int k)
{
    const int rx = gains.receiver_index(n, m);
    double total = 0.0;
    for (int i = 0; i < gains.subnetworks(); ++i) {
        if (i != n && allocation[i] == k)
            total += gains.at(k, i, rx);
    }
    return total;
}

double sinr_on_channel(const ChannelGainTensor& gains, const AllocationVector& allocation, int n,
                       int m, int k, double noise_mw)
{
    const double signal = gains.at(k, n, gains.receiver_index(n, m));
    return signal / (interference_mw(gains, allocation, n, m, k) + noise_mw);
}

double sinr(const ChannelGainTensor& gains, const AllocationVector& allocation, int n, int m,
            double noise_mw)
{
    return sinr_on_channel(gains, allocation, n, m, allocation[n], noise_mw);
}

double dispersion(double gamma)
{
    const double u = 1.0 + gamma;
    return 1.0 - 1.0 / (u * u);
}

double q_inverse(double eps)
{
    if (!(eps > 0.0 && eps < 1.0))
        throw DomainError("q_inverse: probability must lie in (0, 1)");

    // Acklam's rational approximation of the standard normal quantile at p = eps,
    // followed by one Halley step on erfc; Q^{-1}(eps) = -Phi^{-1}(eps).
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    const double p = eps;
    double z;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    for (int iter = 0; iter < 2; ++iter) {
        const double e = 0.5 * std::erfc(-z / std::numbers::sqrt2) - p;
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z);
        z -= u / (1.0 + 0.5 * z * u);
    }
    return -z;
}

double spectral_efficiency(double gamma, const RadioConfig& config)
{
    if (!(config.decode_error_prob > 0.0 && config.decode_error_prob < 1.0))
        throw DomainError("achievable_rate: decoding error probability must lie in (0, 1)");
    if (config.blocklength < 1)
        throw DomainError("achievable_rate: blocklength must be > 0");
    if (!(gamma > 0.0))
        return 0.0;
    // log e ~= 0.434 as the loss constant of the normal approximation
    const double penalty = std::sqrt(dispersion(gamma) / config.blocklength)
                           * q_inverse(config.decode_error_prob) * std::numbers::log10e;
    return std::max(0.0, std::log2(1.0 + gamma) - penalty);
}

double achievable_rate(double gamma, const RadioConfig& config)
{
    return config.channel_bandwidth_hz * spectral_efficiency(gamma, config);
}

} // namespace rrm
