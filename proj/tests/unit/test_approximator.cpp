#include <cmath>
#include <random>
#include <cstring>
#include <sstream>

#include "doctest.h"
#include "rrm/approximator.hpp"
#include "rrm/checkpoint.hpp"

using namespace rrm;

namespace {

double max_fd_error(const MlpSpec& spec, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    ParamVector p = init_params(spec, seed);
    for (double& v : p)
        v += 0.1 * g(rng);   // non-zero biases
    std::vector<double> x(spec.input_size()), up(spec.output_size());
    for (double& v : x)
        v = g(rng);
    for (double& v : up)
        v = g(rng);
    auto objective = [&](const ParamVector& q) {
        const auto y = forward(q, spec, x);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            s += up[i] * y[i];
        return s;
    };
    const auto grad = backward(p, spec, x, up);
    double worst = 0.0;
    const double h = 1e-5;
    for (std::size_t i = 0; i < p.size(); ++i) {
        ParamVector plus = p, minus = p;
        plus[i] += h;
        minus[i] -= h;
        const double fd = (objective(plus) - objective(minus)) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
        worst = std::max(worst, std::abs(fd - grad[i]) / scale);
    }
    return worst;
}

} // namespace

TEST_CASE("initialization")
{
    const MlpSpec spec{{100, 100, 4}, Activation::relu, OutputHead::linear};
    const auto a = init_params(spec, 3);
    CHECK(a == init_params(spec, 3));
    CHECK(a != init_params(spec, 4));
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < 100 * 100; ++i) {
        s += a[i];
        ss += a[i] * a[i];
    }
    const double sd = std::sqrt(ss / 1e4 - (s / 1e4) * (s / 1e4));
    CHECK(sd == doctest::Approx(std::sqrt(2.0 / 100.0)).epsilon(0.2));
    for (int i = 100 * 100; i < 100 * 100 + 100; ++i)
        CHECK(a[i] == 0.0);
}

TEST_CASE("forward")
{
    const MlpSpec tiny{{2, 2, 1}, Activation::relu, OutputHead::linear};
    // W1 column-major, b1, W2, b2
    const ParamVector p{1.0, 0.5, -1.0, 2.0, 0.1, -0.2, 3.0, -1.0, 0.5};
    const std::vector<double> x1{2.0, 1.0}, x2{-1.0, 1.0};
    CHECK(forward(p, tiny, x1)[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(forward(p, tiny, x2)[0] == doctest::Approx(-0.8).epsilon(1e-14));

    const MlpSpec lin{{3, 5, 2}, Activation::tanh, OutputHead::linear};
    const std::vector<double> in{1.0, -2.0, 0.5};
    for (double v : forward(ParamVector(lin.param_count(), 0.0), lin, in))
        CHECK(v == 0.0);

    const MlpSpec soft{{3, 8, 5}, Activation::relu, OutputHead::softmax};
    const auto probs = forward(init_params(soft, 1), soft, in);
    double sum = 0.0;
    for (double v : probs)
        sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);

    CHECK_THROWS_AS(forward(p, tiny, in), std::invalid_argument);
    CHECK_THROWS_AS(forward(ParamVector(3, 0.0), tiny, x1), std::invalid_argument);
}

TEST_CASE("backward agrees with finite differences")
{
    CHECK(max_fd_error({{4, 8, 3}, Activation::relu, OutputHead::linear}, 1) < 1e-4);
    CHECK(max_fd_error({{4, 8, 3}, Activation::tanh, OutputHead::linear}, 2) < 1e-4);
    CHECK(max_fd_error({{4, 8, 3}, Activation::tanh, OutputHead::softmax}, 3) < 1e-4);
    CHECK(max_fd_error({{6, 16, 16, 4}, Activation::relu, OutputHead::softmax}, 4) < 1e-4);

    const MlpSpec spec{{4, 8, 3}, Activation::relu, OutputHead::linear};
    const auto p = init_params(spec, 9);
    const std::vector<double> x{1, 2, 3, 4}, zero(3, 0.0);
    for (double v : backward(p, spec, x, zero))
        CHECK(v == 0.0);
    CHECK_THROWS_AS(backward(p, spec, x, std::vector<double>(2, 0.0)), std::invalid_argument);
}

TEST_CASE("softmax cross-entropy gradient is p - onehot at the logits")
{
    const MlpSpec spec{{3, 6, 4}, Activation::tanh, OutputHead::softmax};
    const auto p = init_params(spec, 12);
    const std::vector<double> x{0.3, -1.2, 2.0};
    const auto probs = forward(p, spec, x);
    const int target = 2;
    std::vector<double> up(4, 0.0);
    up[target] = -1.0 / probs[target];   // dL/dp for L = -log p_target
    const auto grad = backward(p, spec, x, up);
    const std::size_t bias_offset = spec.param_count() - 4;
    for (int j = 0; j < 4; ++j)
        CHECK(grad[bias_offset + j] == doctest::Approx(probs[j] - (j == target ? 1.0 : 0.0)).epsilon(1e-10));
}

TEST_CASE("optimizers")
{
    ParamVector theta{0.5, -1.0};
    auto sgd = make_optimizer(2, 0.1, OptimizerKind::sgd);
    adam_step(theta, {0.0, 0.0}, sgd);
    CHECK(theta == ParamVector{0.5, -1.0});
    adam_step(theta, {2.0, -3.0}, sgd);
    CHECK(theta[0] == 0.5 - 0.1 * 2.0);
    CHECK(theta[1] == -1.0 + 0.1 * 3.0);

    ParamVector x{1.0};
    auto adam = make_optimizer(1, 0.05);
    for (int i = 0; i < 500; ++i)
        adam_step(x, {2.0 * x[0]}, adam);
    CHECK(std::abs(x[0]) < 1e-3);

    ParamVector g{3.0, 4.0};
    CHECK(clip_grad_norm(g, 1.0) == doctest::Approx(5.0));
    CHECK(g[0] == doctest::Approx(0.6));
}

TEST_CASE("Polyak averaging")
{
    CHECK(polyak_update({1.0, 2.0}, {5.0, -3.0}, 1.0) == ParamVector{5.0, -3.0});
    CHECK(polyak_update({0.0}, {2.0}, 0.5) == ParamVector{1.0});
    ParamVector target{0.0};
    const double tau = 0.1;
    for (int i = 1; i <= 50; ++i) {
        polyak_update_in_place(target, {1.0}, tau);
        CHECK(1.0 - target[0] == doctest::Approx(std::pow(1.0 - tau, i)).epsilon(1e-12));
    }
    CHECK_THROWS(polyak_update({0.0}, {1.0, 2.0}, 0.5));
    CHECK_THROWS(polyak_update({0.0}, {1.0}, 0.0));
}

TEST_CASE("weight file round trip is bit exact")
{
    const MlpSpec a{{4, 64, 64, 4}, Activation::relu, OutputHead::linear};
    const MlpSpec b{{4, 32, 1}, Activation::tanh, OutputHead::softmax};
    auto pa = init_params(a, 1);
    pa[3] = -0.0;
    pa[5] = 1e-310;   // subnormal
    const auto pb = init_params(b, 2);
    const auto path = std::filesystem::temp_directory_path() / "rrm_unit_weights.ckpt";
    save_checkpoint(path, {{a, pa}, {b, pb}});
    const auto loaded = load_checkpoint(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].spec == a);
    CHECK(loaded[1].spec == b);
    CHECK(std::memcmp(loaded[0].params.data(), pa.data(), pa.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(loaded[1].params.data(), pb.data(), pb.size() * sizeof(double)) == 0);
    std::filesystem::remove(path);

    std::stringstream bad;
    bad << "NOPE";
    CHECK_THROWS_AS(read_weights(bad), CheckpointError);
    std::stringstream truncated;
    write_weights(truncated, b, pb);
    std::string text = truncated.str();
    text.resize(text.size() - 8);
    std::stringstream cut(text);
    CHECK_THROWS_AS(read_weights(cut), CheckpointError);
    CHECK_THROWS_AS(write_weights(truncated, b, ParamVector(3, 0.0)), CheckpointError);
}
