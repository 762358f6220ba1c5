#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "rrm/radiolink.hpp"

using namespace rrm;

namespace {

// Independent high-precision evaluations (50-digit arithmetic), frozen here.
constexpr double kQinv1em5 = 4.264890793922824628;
constexpr double kQinv1em9 = 5.997807015007686872;
constexpr double kQinv1em3 = 3.090232306167813542;
constexpr double kQinv1em1 = 1.281551565544600467;
constexpr double kRate10dB = 33441473.147124291;   // gamma = 10, l = 256, eps = 1e-5, B = 10 MHz
constexpr double kNoise = 3.981071705534972e-10;   // mW
constexpr double kPl10Los = 68.12487375728923;
constexpr double kPl1Los = 46.62487375728923;

double rel(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

} // namespace

TEST_CASE("pathloss follows the indoor-factory table")
{
    RadioConfig c;
    CHECK(pathloss_db(10.0, c, true) == doctest::Approx(kPl10Los).epsilon(1e-13));
    CHECK(pathloss_db(1.0, c, true) == doctest::Approx(kPl1Los).epsilon(1e-13));
    for (double d : {1.0, 3.0, 10.0, 40.0, 150.0}) {
        c.scenario = Scenario::InF_SL;
        const double sl = pathloss_db(d, c, false);
        CHECK(sl >= pathloss_db(d, c, true));
        c.scenario = Scenario::InF_DL;
        CHECK(pathloss_db(d, c, false) >= sl);
    }
    CHECK_THROWS_AS(pathloss_db(0.5, c, true), DomainError);
}

TEST_CASE("LOS probability")
{
    RadioConfig c;
    CHECK(los_probability(0.0, c) == 1.0);
    CHECK(los_probability(10.0, c) == doctest::Approx(0.8).epsilon(1e-12));
    c.clutter_density = 0.0;
    CHECK(los_probability(1e4, c) == 1.0);
    c.clutter_density = 0.4;
    double prev = 1.0;
    for (double d = 0.0; d < 100.0; d += 0.5) {
        const double p = los_probability(d, c);
        CHECK(p <= prev);
        CHECK(p >= 0.0);
        prev = p;
    }
}

TEST_CASE("shadow field statistics")
{
    const double sigma = 4.0;
    const double decorr = 10.0;
    const int samples = 10000;
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (int s = 0; s < samples; ++s) {
        ShadowField f(sigma, decorr, 1000 + s);
        const double a = f.value_at({3.0, 4.0});
        const double b = f.value_at({13.0, 4.0});
        CHECK(f.value_at({3.0, 4.0}) == a);
        sa += a; sb += b; saa += a * a; sbb += b * b; sab += a * b;
    }
    const double ma = sa / samples, mb = sb / samples;
    const double va = saa / samples - ma * ma, vb = sbb / samples - mb * mb;
    const double corr = (sab / samples - ma * mb) / std::sqrt(va * vb);
    CHECK(corr == doctest::Approx(std::exp(-1.0)).epsilon(0.1 / std::exp(-1.0)));
    CHECK(std::sqrt(va) == doctest::Approx(sigma).epsilon(0.05));

    ShadowField f1(sigma, decorr, 7), f2(sigma, decorr, 7), f3(sigma, decorr, 8);
    CHECK(f1.value_at({50, 20}) == f2.value_at({50, 20}));
    CHECK(f1.value_at({50, 20}) != f3.value_at({50, 20}));
    CHECK(f1.link_db({5, 5}, {5, 5}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fading process")
{
    Rng rng(5);
    SUBCASE("rho = 1 freezes h")
    {
        auto st = init_fading(8, 1.0, rng);
        const auto before = st.h;
        step_fading_in_place(st, rng);
        CHECK(st.h == before);
    }
    SUBCASE("rho = 0 decorrelates consecutive samples")
    {
        auto st = init_fading(1, 0.0, rng);
        const int steps = 10000;
        std::complex<double> acc = 0.0;
        for (int i = 0; i < steps; ++i) {
            const auto prev = st.h[0];
            step_fading_in_place(st, rng);
            acc += st.h[0] * std::conj(prev);
        }
        CHECK(std::abs(acc) / steps < 0.05);
    }
    SUBCASE("unit mean power")
    {
        auto st = init_fading(1, fading_correlation(60.0, 0.005), rng);
        double p = 0.0;
        const int steps = 100000;
        for (int i = 0; i < steps; ++i) {
            step_fading_in_place(st, rng);
            p += std::norm(st.h[0]);
        }
        CHECK(p / steps == doctest::Approx(1.0).epsilon(0.02));
    }
    CHECK(fading_correlation(0.0, 0.005) == 1.0);
    CHECK(fading_correlation(60.0, 0.005) > 0.0);
    CHECK(fading_correlation(60.0, 0.005) < 1.0);
}

TEST_CASE("noise power")
{
    RadioConfig c;
    CHECK(rel(noise_power_mw(c), kNoise) < 1e-12);
    CHECK(10.0 * std::log10(noise_power_mw(c)) == doctest::Approx(-94.0).epsilon(1e-13));
    RadioConfig unit = c;
    unit.noise_figure_db = 0.0;
    unit.channel_bandwidth_hz = 1.0;
    CHECK(10.0 * std::log10(noise_power_mw(unit)) == doctest::Approx(-174.0).epsilon(1e-13));
    RadioConfig wide = c;
    wide.channel_bandwidth_hz *= 2.0;
    CHECK(10.0 * std::log10(noise_power_mw(wide) / noise_power_mw(c)) == doctest::Approx(10.0 * std::log10(2.0)));
    RadioConfig noisy = c;
    noisy.noise_figure_db += 0.1;
    CHECK(noise_power_mw(noisy) > noise_power_mw(c));
}

TEST_CASE("gain composition")
{
    CHECK(compose_gain(0.0, 0.0, {1.0, 0.0}, 0.0) == doctest::Approx(1.0));
    CHECK(compose_gain(20.0, 0.0, {0.0, 1.0}, 0.0) == doctest::Approx(0.01));
    const std::complex<double> h(std::sqrt(0.25), std::sqrt(0.25));
    CHECK(compose_gain(68.12, 3.0, h, -10.0) == doctest::Approx(std::pow(10.0, -8.112) * 0.5).epsilon(1e-12));
}

TEST_CASE("SINR")
{
    const double noise = 1e-9;
    ChannelGainTensor g(2, 3, 1);
    SUBCASE("sole occupant at noise level is 0 dB")
    {
        g.at(0, 0, 0) = noise;
        CHECK(sinr(g, {0, 1, 1}, 0, 0, noise) == doctest::Approx(1.0));
    }
    SUBCASE("three co-channel subnetworks match per-term summation")
    {
        Rng rng(3);
        std::uniform_real_distribution<double> u(1e-10, 1e-6);
        for (auto& v : g.values())
            v = u(rng);
        const AllocationVector a{1, 1, 1};
        const double expected =
            g.at(1, 2, 2) / (g.at(1, 0, 2) + g.at(1, 1, 2) + noise);
        CHECK(rel(sinr(g, a, 2, 0, noise), expected) < 1e-14);
        CHECK(sinr_on_channel(g, a, 2, 0, 0, noise) == doctest::Approx(g.at(0, 2, 2) / noise));
    }
    SUBCASE("interference drives SINR to zero")
    {
        g.at(0, 0, 0) = 1e-6;
        g.at(0, 1, 0) = 1e300;
        CHECK(sinr(g, {0, 0, 1}, 0, 0, noise) < 1e-290);
    }
    SUBCASE("scale invariance")
    {
        Rng rng(11);
        std::uniform_real_distribution<double> u(1e-10, 1e-6);
        for (auto& v : g.values())
            v = u(rng);
        ChannelGainTensor scaled = g;
        for (auto& v : scaled.values())
            v *= 37.5;
        const AllocationVector a{0, 0, 1};
        for (int n = 0; n < 3; ++n)
            CHECK(rel(sinr(scaled, a, n, 0, noise * 37.5), sinr(g, a, n, 0, noise)) < 1e-14);
    }
}

TEST_CASE("dispersion and inverse Q")
{
    CHECK(dispersion(0.0) == 0.0);
    CHECK(dispersion(1.0) == 0.75);
    CHECK(dispersion(1e12) == doctest::Approx(1.0));
    CHECK(dispersion(1e6) < 1.0);
    CHECK(rel(q_inverse(1e-5), kQinv1em5) < 1e-10);
    CHECK(rel(q_inverse(1e-9), kQinv1em9) < 1e-10);
    CHECK(rel(q_inverse(1e-3), kQinv1em3) < 1e-10);
    CHECK(rel(q_inverse(0.1), kQinv1em1) < 1e-10);
    CHECK(std::abs(q_inverse(0.5)) < 1e-14);
    CHECK_THROWS_AS(q_inverse(0.0), DomainError);
    CHECK_THROWS_AS(q_inverse(1.0), DomainError);
}

TEST_CASE("finite-blocklength rate")
{
    RadioConfig c;
    CHECK(achievable_rate(0.0, c) == 0.0);
    CHECK(rel(achievable_rate(10.0, c), kRate10dB) < 1e-10);
    RadioConfig longblock = c;
    longblock.blocklength = 1000000000;
    for (double g : {0.5, 10.0, 1000.0}) {
        const double shannon = c.channel_bandwidth_hz * std::log2(1.0 + g);
        CHECK(rel(achievable_rate(g, longblock), shannon) < 1e-3);
    }
    double prev = 0.0;
    for (double db = -20.0; db <= 60.0; db += 0.25) {
        const double g = std::pow(10.0, db / 10.0);
        const double r = achievable_rate(g, c);
        CHECK(r >= prev);
        CHECK(r <= c.channel_bandwidth_hz * std::log2(1.0 + g));
        prev = r;
    }
    CHECK(spectral_efficiency(10.0, c) == doctest::Approx(kRate10dB / 1e7).epsilon(1e-12));
    RadioConfig bad = c;
    bad.decode_error_prob = 1.5;
    CHECK_THROWS(achievable_rate(10.0, bad));
}
