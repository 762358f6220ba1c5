#pragma once

// Fully connected network with hand-written backpropagation over a flat
// parameter vector, plus Adam/SGD and Polyak averaging.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rrm {

enum class Activation : std::uint8_t { relu = 0, tanh = 1 };
enum class OutputHead : std::uint8_t { linear = 0, softmax = 1 };

struct MlpSpec {
    std::vector<int> layer_sizes;   // input, hidden..., output
    Activation activation = Activation::relu;
    OutputHead output_head = OutputHead::linear;

    void validate() const;
    std::size_t param_count() const;
    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t layers() const { return layer_sizes.size() - 1; }

    friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

std::string describe(const MlpSpec& spec);

/// Flat weights and biases. Layer l stores W_l (fan_out x fan_in, column-major) then b_l.
using ParamVector = std::vector<double>;

/// He-uniform weights for relu, Glorot-uniform for tanh; zero biases.
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

/// Intermediate values kept from a batched forward pass. Columns are samples.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> activations;   // [0] = input, back() = head output
    Eigen::MatrixXd logits;                     // pre-head output of the last layer
};

Eigen::MatrixXd forward_batch(const ParamVector& params, const MlpSpec& spec,
                              const Eigen::MatrixXd& inputs, ForwardCache* cache = nullptr);

enum class GradientAt { output, logits };

/// Accumulates into grad the gradient of sum_b upstream(:, b) . y(:, b), where y
/// is the head output (GradientAt::output) or the last-layer logits.
void backward_batch(const ParamVector& params, const MlpSpec& spec, const ForwardCache& cache,
                    const Eigen::MatrixXd& upstream, ParamVector& grad,
                    GradientAt at = GradientAt::output);

std::vector<double> forward(const ParamVector& params, const MlpSpec& spec,
                            std::span<const double> input);

/// Gradient of upstream . forward(input) with respect to params.
ParamVector backward(const ParamVector& params, const MlpSpec& spec, std::span<const double> input,
                     std::span<const double> upstream);

enum class OptimizerKind { adam, sgd };

struct AdamState {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;
    ParamVector m;
    ParamVector v;
};

AdamState make_optimizer(std::size_t params, double learning_rate,
                         OptimizerKind kind = OptimizerKind::adam);

/// One descent step; plain SGD applies theta -= lr * grad.
void adam_step(ParamVector& params, const ParamVector& grad, AdamState& state);

/// Rescales grad in place so its L2 norm is at most max_norm; returns the norm before clipping.
double clip_grad_norm(ParamVector& grad, double max_norm);

/// (1 - tau) * target + tau * online.
ParamVector polyak_update(const ParamVector& target, const ParamVector& online, double tau);
void polyak_update_in_place(ParamVector& target, const ParamVector& online, double tau);

} // namespace rrm
