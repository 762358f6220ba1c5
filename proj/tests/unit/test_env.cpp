#include <cmath>
#include <random>

#include "doctest.h"
#include "rrm/env.hpp"

using namespace rrm;

namespace {

EnvConfig small_config(int n, int k, int m = 1)
{
    EnvConfig c;
    c.num_subnetworks = n;
    c.radio.num_channels = k;
    c.devices_per_subnetwork = m;
    c.steps_per_episode = 50;
    return c;
}

double db(double x)
{
    return 10.0 * std::log10(x);
}

} // namespace

TEST_CASE("reset is deterministic and shapes follow the ORF")
{
    auto cfg = small_config(6, 4, 3);
    Environment a(cfg), b(cfg);
    const auto oa = a.reset(5);
    const auto ob = b.reset(5);
    CHECK(oa.observations == ob.observations);
    CHECK(oa.allocation == ob.allocation);
    CHECK(oa.step == 0);
    CHECK(oa.observations[0].size() == 4);

    cfg.observation.orf = Orf::full;
    Environment full(cfg);
    CHECK(full.reset(5).observations[0].size() == 12);
    CHECK(cfg.observation_size() == 12);
}

TEST_CASE("observation reduction")
{
    ObservationConfig oc;
    oc.orf = Orf::min;
    const std::vector<std::vector<double>> two{{std::pow(10.0, 0.3)}, {std::pow(10.0, 0.7)}};
    CHECK(reduce_observation(two, oc)[0] == doctest::Approx(3.0));
    oc.orf = Orf::max;
    CHECK(reduce_observation(two, oc)[0] == doctest::Approx(7.0));
    oc.orf = Orf::mean;
    CHECK(reduce_observation(two, oc)[0] == doctest::Approx(5.0));

    const std::vector<std::vector<double>> single{{2.0, 50.0, 1e9}};
    auto mean_cfg = oc;
    mean_cfg.orf = Orf::mean;
    auto full_cfg = oc;
    full_cfg.orf = Orf::full;
    CHECK(reduce_observation(single, mean_cfg) == reduce_observation(single, full_cfg));
    CHECK(reduce_observation(single, full_cfg)[2] == 60.0);   // clamped
}

TEST_CASE("hand-built two-subnetwork SIR")
{
    auto cfg = small_config(2, 2);
    Environment env(cfg);
    env.reset(1);
    ChannelGainTensor g(2, 2, 1);
    g.at(0, 0, 0) = 1e-5;  g.at(0, 1, 0) = 2e-8;
    g.at(1, 0, 0) = 3e-5;  g.at(1, 1, 0) = 4e-8;
    g.at(0, 1, 1) = 5e-6;  g.at(0, 0, 1) = 1e-7;
    g.at(1, 1, 1) = 6e-6;  g.at(1, 0, 1) = 7e-9;
    env.override_gains(g, {0, 1});
    const auto obs0 = env.observe(0);
    const auto obs1 = env.observe(1);
    // subnetwork 0 on channel 0 hears subnetwork 1 only on channel 1
    CHECK(obs0[0] == 60.0);
    CHECK(obs0[1] == doctest::Approx(db(3e-5 / 4e-8)));
    CHECK(obs1[0] == doctest::Approx(db(5e-6 / 1e-7)));
    CHECK(obs1[1] == 60.0);
}

TEST_CASE("step semantics")
{
    SUBCASE("distinct channels leave only noise")
    {
        auto cfg = small_config(3, 4);
        cfg.switch_gating = false;
        Environment env(cfg);
        env.reset(2);
        const auto out = env.step({0, 1, 3});
        CHECK(out.allocation == AllocationVector{0, 1, 3});
        for (int n = 0; n < 3; ++n) {
            const double signal = env.gains().at(out.allocation[n], n, n);
            CHECK(out.sinrs[n][0][out.allocation[n]] == doctest::Approx(signal / env.noise_mw()).epsilon(1e-12));
        }
    }
    SUBCASE("invalid channel rejected")
    {
        Environment env(small_config(3, 4));
        env.reset(2);
        CHECK_THROWS_AS(env.step({0, 4, 1}), std::invalid_argument);
        CHECK_THROWS_AS(env.step({0, 1}), std::invalid_argument);
    }
    SUBCASE("gating holds channels between switching instants")
    {
        auto cfg = small_config(8, 4);
        cfg.steps_per_episode = 200;
        Environment env(cfg);
        auto out = env.reset(3);
        std::mt19937 rng(1);
        std::uniform_int_distribution<int> pick(0, 3);
        int gated_requests = 0;
        while (!out.done) {
            const auto mask = env.switching_mask();
            AllocationVector actions(8);
            for (auto& a : actions)
                a = pick(rng);
            const auto before = out.allocation;
            out = env.step(actions);
            for (int n = 0; n < 8; ++n) {
                if (mask[n]) {
                    CHECK(out.allocation[n] == actions[n]);
                } else {
                    CHECK(out.allocation[n] == before[n]);
                    gated_requests += actions[n] != before[n];
                }
            }
        }
        CHECK(gated_requests > 0);
        CHECK(out.step == 200);
    }
}

TEST_CASE("splitting two interfering links beats sharing a channel")
{
    RadioConfig radio;
    radio.num_channels = 2;
    ChannelGainTensor g(2, 2, 1);
    for (int k = 0; k < 2; ++k) {
        g.at(k, 0, 0) = 1e-6;
        g.at(k, 1, 1) = 2e-6;
        g.at(k, 0, 1) = 1e-8;
        g.at(k, 1, 0) = 3e-8;
    }
    const double noise = noise_power_mw(radio);
    CHECK(sum_rate_bps(g, {0, 1}, noise, radio) > sum_rate_bps(g, {0, 0}, noise, radio));
}

TEST_CASE("sum rate equals the per-term objective")
{
    RadioConfig radio;
    radio.num_channels = 3;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(1e-11, 1e-6);
    std::uniform_int_distribution<int> ch(0, 2);
    const double noise = noise_power_mw(radio);
    for (int trial = 0; trial < 100; ++trial) {
        ChannelGainTensor g(3, 4, 2);
        for (auto& v : g.values())
            v = u(rng);
        AllocationVector a(4);
        for (auto& c : a)
            c = ch(rng);
        double expected = 0.0;
        for (int n = 0; n < 4; ++n) {
            for (int m = 0; m < 2; ++m) {
                const int rx = n * 2 + m;
                double interference = 0.0;
                for (int i = 0; i < 4; ++i) {
                    if (i != n && a[i] == a[n])
                        interference += g.at(a[n], i, rx);
                }
                const double gamma = g.at(a[n], n, rx) / (interference + noise);
                const double v = 1.0 - 1.0 / ((1.0 + gamma) * (1.0 + gamma));
                const double r = std::log2(1.0 + gamma)
                                 - std::sqrt(v / radio.blocklength) * q_inverse(radio.decode_error_prob)
                                       * std::log10(std::exp(1.0));
                expected += radio.channel_bandwidth_hz * std::max(0.0, r);
            }
        }
        CHECK(sum_rate_bps(g, a, noise, radio) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("distinct channels maximize every device's SINR")
{
    ChannelGainTensor g(3, 3, 1);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(1e-10, 1e-6);
    for (auto& v : g.values())
        v = u(rng);
    const double noise = 1e-10;
    const AllocationVector distinct{0, 1, 2};
    for (int n = 0; n < 3; ++n) {
        // keep n on its channel and pull one or both others onto it
        for (int mask = 1; mask < 4; ++mask) {
            AllocationVector shared = distinct;
            int bit = 0;
            for (int i = 0; i < 3; ++i) {
                if (i == n)
                    continue;
                if (mask & (1 << bit))
                    shared[i] = distinct[n];
                ++bit;
            }
            CHECK(sinr(g, distinct, n, 0, noise) > sinr(g, shared, n, 0, noise));
        }
    }
}

TEST_CASE("reward")
{
    RewardConfig rc{1.0, 2.0, 11.0};
    const std::vector<double> ok{12.0};
    const std::vector<double> short_by_two{9.0};
    CHECK(reward(ok, rc) == 12.0);
    CHECK(reward(short_by_two, rc) == 5.0);
    const std::vector<double> all_above{11.0, 15.0, 20.0};
    CHECK(reward(all_above, rc) == 46.0);
    double prev = -1e9;
    for (double r = 0.0; r < 20.0; r += 0.5) {
        const std::vector<double> one{r};
        CHECK(reward(one, rc) >= prev);
        prev = reward(one, rc);
    }
    RewardConfig zero{0.0, 0.0, 11.0};
    CHECK_THROWS(zero.validate());
}
