#include "rrm/approximator.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rrm {

void MlpSpec::validate() const
{
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("MlpSpec: need at least an input and an output layer");
    for (int s : layer_sizes) {
        if (s < 1)
            throw std::invalid_argument("MlpSpec: layer sizes must be >= 1");
    }
}

std::size_t MlpSpec::param_count() const
{
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
        total += static_cast<std::size_t>(layer_sizes[l] + 1) * layer_sizes[l + 1];
    return total;
}

std::string describe(const MlpSpec& spec)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < spec.layer_sizes.size(); ++i)
        os << (i ? "-" : "") << spec.layer_sizes[i];
    os << (spec.activation == Activation::relu ? " relu" : " tanh");
    os << (spec.output_head == OutputHead::linear ? "/linear" : "/softmax");
    return os.str();
}

namespace {

using MatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;

struct LayerView {
    std::size_t weight_offset;
    std::size_t bias_offset;
    int fan_in;
    int fan_out;
};

std::vector<LayerView> layer_views(const MlpSpec& spec)
{
    std::vector<LayerView> views;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        const int in = spec.layer_sizes[l];
        const int out = spec.layer_sizes[l + 1];
        views.push_back({offset, offset + static_cast<std::size_t>(in) * out, in, out});
        offset += static_cast<std::size_t>(in + 1) * out;
    }
    return views;
}

void check_params(const ParamVector& params, const MlpSpec& spec)
{
    spec.validate();
    if (params.size() != spec.param_count())
        throw std::invalid_argument("parameter vector length " + std::to_string(params.size())
                                    + " does not match " + describe(spec));
}

void apply_activation(Eigen::MatrixXd& z, Activation act)
{
    if (act == Activation::relu)
        z = z.cwiseMax(0.0);
    else
        z = z.array().tanh().matrix();
}

void softmax_columns(Eigen::MatrixXd& z)
{
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        auto col = z.col(c);
        const double peak = col.maxCoeff();
        col = (col.array() - peak).exp().matrix();
        col /= col.sum();
    }
}

} // namespace

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed)
{
    spec.validate();
    ParamVector params(spec.param_count(), 0.0);
    std::mt19937_64 rng(seed);
    for (const auto& layer : layer_views(spec)) {
        const double limit = spec.activation == Activation::relu
                                 ? std::sqrt(6.0 / layer.fan_in)
                                 : std::sqrt(6.0 / (layer.fan_in + layer.fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        const std::size_t count = static_cast<std::size_t>(layer.fan_in) * layer.fan_out;
        for (std::size_t i = 0; i < count; ++i)
            params[layer.weight_offset + i] = dist(rng);
    }
    return params;
}

Eigen::MatrixXd forward_batch(const ParamVector& params, const MlpSpec& spec, const Eigen::MatrixXd& inputs,
                              ForwardCache* cache)
{
    check_params(params, spec);
    if (inputs.rows() != spec.input_size())
        throw std::invalid_argument("forward: input has " + std::to_string(inputs.rows())
                                    + " rows, network expects " + std::to_string(spec.input_size()));
    const auto views = layer_views(spec);
    if (cache) {
        cache->activations.clear();
        cache->activations.reserve(views.size() + 1);
    }

    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < views.size(); ++l) {
        const auto& v = views[l];
        MatMap w(params.data() + v.weight_offset, v.fan_out, v.fan_in);
        VecMap b(params.data() + v.bias_offset, v.fan_out);
        Eigen::MatrixXd z = w * a;
        z.colwise() += b;
        if (cache)
            cache->activations.push_back(std::move(a));
        if (l + 1 < views.size())
            apply_activation(z, spec.activation);
        a = std::move(z);
    }
    if (cache)
        cache->logits = a;
    if (spec.output_head == OutputHead::softmax)
        softmax_columns(a);
    if (cache)
        cache->activations.push_back(a);
    return a;
}

void backward_batch(const ParamVector& params, const MlpSpec& spec, const ForwardCache& cache,
                    const Eigen::MatrixXd& upstream, ParamVector& grad, GradientAt at)
{
    check_params(params, spec);
    const auto views = layer_views(spec);
    if (cache.activations.size() != views.size() + 1)
        throw std::invalid_argument("backward: cache does not come from this network");
    const Eigen::MatrixXd& output = cache.activations.back();
    if (upstream.rows() != output.rows() || upstream.cols() != output.cols())
        throw std::invalid_argument("backward: upstream gradient shape mismatch");
    if (grad.size() != params.size())
        grad.assign(params.size(), 0.0);

    Eigen::MatrixXd delta;
    if (spec.output_head == OutputHead::softmax && at == GradientAt::output) {
        // d(g . p)/dz = p * (g - g . p)
        const Eigen::RowVectorXd dot = (upstream.array() * output.array()).colwise().sum();
        delta = (output.array() * (upstream.rowwise() - dot).array()).matrix();
    } else {
        delta = upstream;
    }

    for (std::size_t li = views.size(); li-- > 0;) {
        const auto& v = views[li];
        const Eigen::MatrixXd& a_in = cache.activations[li];
        Eigen::Map<Eigen::MatrixXd> gw(grad.data() + v.weight_offset, v.fan_out, v.fan_in);
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + v.bias_offset, v.fan_out);
        gw.noalias() += delta * a_in.transpose();
        gb += delta.rowwise().sum();
        if (li == 0)
            break;
        MatMap w(params.data() + v.weight_offset, v.fan_out, v.fan_in);
        Eigen::MatrixXd back = w.transpose() * delta;
        if (spec.activation == Activation::relu)
            delta = (back.array() * (a_in.array() > 0.0).cast<double>()).matrix();
        else
            delta = (back.array() * (1.0 - a_in.array().square())).matrix();
    }
}

std::vector<double> forward(const ParamVector& params, const MlpSpec& spec, std::span<const double> input)
{
    Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
    const Eigen::MatrixXd y = forward_batch(params, spec, x);
    return {y.data(), y.data() + y.size()};
}

ParamVector backward(const ParamVector& params, const MlpSpec& spec, std::span<const double> input,
                     std::span<const double> upstream)
{
    if (static_cast<int>(upstream.size()) != spec.output_size())
        throw std::invalid_argument("backward: upstream gradient length mismatch");
    Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
    ForwardCache cache;
    forward_batch(params, spec, x, &cache);
    Eigen::MatrixXd g = Eigen::Map<const Eigen::VectorXd>(upstream.data(), static_cast<Eigen::Index>(upstream.size()));
    ParamVector grad(params.size(), 0.0);
    backward_batch(params, spec, cache, g, grad);
    return grad;
}

AdamState make_optimizer(std::size_t params, double learning_rate, OptimizerKind kind)
{
    AdamState s;
    s.kind = kind;
    s.learning_rate = learning_rate;
    s.m.assign(params, 0.0);
    s.v.assign(params, 0.0);
    return s;
}

void adam_step(ParamVector& params, const ParamVector& grad, AdamState& state)
{
    if (grad.size() != params.size())
        throw std::invalid_argument("adam_step: gradient length mismatch");
    if (state.kind == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i)
            params[i] -= state.learning_rate * grad[i];
        ++state.step;
        return;
    }
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

double clip_grad_norm(ParamVector& grad, double max_norm)
{
    double sq = 0.0;
    for (double g : grad)
        sq += g * g;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& g : grad)
            g *= scale;
    }
    return norm;
}

void polyak_update_in_place(ParamVector& target, const ParamVector& online, double tau)
{
    if (target.size() != online.size())
        throw std::invalid_argument("polyak_update: length mismatch");
    if (!(tau > 0.0 && tau <= 1.0))
        throw std::invalid_argument("polyak_update: tau must lie in (0, 1]");
    for (std::size_t i = 0; i < target.size(); ++i)
        target[i] = (1.0 - tau) * target[i] + tau * online[i];
}

ParamVector polyak_update(const ParamVector& target, const ParamVector& online, double tau)
{
    ParamVector out = target;
    polyak_update_in_place(out, online, tau);
    return out;
}

} // namespace rrm
