#pragma once

#include "harbench/rng.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace harbench {
struct WindowSet;
}

namespace harbench::nn {

// Architecture: conv(16,k7) -> pool2 -> conv(32,k11) -> pool2 -> fc32 -> fc24 -> out.
// Valid convolutions on 100-sample windows trace 100 -> 94 -> 47 -> 37 -> 18.
inline constexpr std::size_t kInputLength = 100;
inline constexpr std::size_t kConv1Filters = 16;
inline constexpr std::size_t kConv1Kernel = 7;
inline constexpr std::size_t kConv2Filters = 32;
inline constexpr std::size_t kConv2Kernel = 11;
inline constexpr std::size_t kFc1Units = 32;
inline constexpr std::size_t kFc2Units = 24;
inline constexpr std::size_t kConv1Length = kInputLength - kConv1Kernel + 1;  // 94
inline constexpr std::size_t kPool1Length = kConv1Length / 2;                 // 47
inline constexpr std::size_t kConv2Length = kPool1Length - kConv2Kernel + 1;  // 37
inline constexpr std::size_t kPool2Length = kConv2Length / 2;                 // 18
inline constexpr std::size_t kFlatten = kPool2Length * kConv2Filters;         // 576
inline constexpr std::size_t kDefaultClasses = 5;

struct Hyperparams {
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double dropout_rate = 0.3;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 3000;
    std::size_t patience = 50;
    double min_delta = 1e-4;
    std::uint64_t seed = 42;

    /// Throws Error{InvalidValue} naming the offending field.
    void validate() const;

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

inline constexpr std::size_t kTensorCount = 10;
inline constexpr std::array<std::string_view, kTensorCount> kTensorNames = {
    "conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias", "fc1.weight",
    "fc1.bias",     "fc2.weight", "fc2.bias",     "out.weight", "out.bias"};

/// Trainable tensors. Layouts: conv weights [out][in][k], dense weights [out][in].
/// Also used for gradients and Adam moments.
struct NetworkParams {
    std::size_t modality = 0;
    std::size_t classes = kDefaultClasses;
    std::vector<double> conv1_w, conv1_b;
    std::vector<double> conv2_w, conv2_b;
    std::vector<double> fc1_w, fc1_b;
    std::vector<double> fc2_w, fc2_b;
    std::vector<double> out_w, out_b;

    static NetworkParams zeros(std::size_t modality, std::size_t classes = kDefaultClasses);

    std::array<std::span<double>, kTensorCount> tensors();
    std::array<std::span<const double>, kTensorCount> tensors() const;

    /// Sum of allocated tensor sizes.
    std::size_t size() const;

    friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

using Gradients = NetworkParams;

/// Closed-form trainable parameter count: 112 N + 25 C + 24936.
std::size_t param_count(std::size_t modality, std::size_t classes = kDefaultClasses);

/// He-uniform weights (bound sqrt(6 / fan_in)), zero biases. The output layer
/// bound is scaled by kOutputInitScale so the initial softmax is near uniform.
/// Throws Error{UnsupportedModality} unless modality is 6, 9, 12 or 18.
inline constexpr double kOutputInitScale = 0.02;
NetworkParams init_network(std::size_t modality, std::size_t classes, std::uint64_t seed);

struct AdamState {
    NetworkParams m;
    NetworkParams v;
    std::uint64_t t = 0;

    static AdamState for_params(const NetworkParams& params);
};

enum class Mode { Train, Eval };

struct Conv1dShape {
    std::size_t length;        // input rows
    std::size_t in_channels;
    std::size_t out_channels;
    std::size_t kernel;

    std::size_t out_length() const noexcept { return length - kernel + 1; }
};

/// Valid cross-correlation: out[t][o] = b[o] + sum_{c,k} in[t+k][c] w[o][c][k].
/// `input` is (length x in_channels) row-major. Throws Error{ShapeMismatch}.
std::vector<double> conv1d(std::span<const double> input, std::span<const double> weights,
                           std::span<const double> biases, const Conv1dShape& shape);

/// Accumulates weight/bias gradients; writes the input gradient when
/// `grad_input` is non-empty (overwrites it).
void conv1d_backward(std::span<const double> input, std::span<const double> weights,
                     std::span<const double> grad_output, const Conv1dShape& shape,
                     std::span<double> grad_weights, std::span<double> grad_biases,
                     std::span<double> grad_input);

struct PoolResult {
    std::vector<double> output;           // (length / 2) x channels
    std::vector<std::uint32_t> argmax;    // input row index per output cell
};

/// Width-2 stride-2 max pooling over rows; a trailing odd row is dropped and
/// ties go to the earlier row.
PoolResult maxpool(std::span<const double> input, std::size_t length, std::size_t channels);

/// Routes each output gradient to its argmax row; returns (length x channels).
std::vector<double> maxpool_backward(std::span<const double> grad_output,
                                     std::span<const std::uint32_t> argmax, std::size_t length,
                                     std::size_t channels);

/// Inverted dropout: zeroes each value with probability `rate` and scales
/// survivors by 1 / (1 - rate). `mask` receives the per-value factor.
void apply_dropout(std::span<double> values, double rate, Rng& rng, std::span<double> mask);

/// Everything backward() needs for one batch.
struct ForwardCache {
    std::size_t batch = 0;
    std::size_t modality = 0;
    std::vector<double> input;                     // B x 100 x N
    std::vector<double> conv1_act;                 // B x 94 x 16, post-ReLU
    std::vector<std::uint32_t> pool1_argmax;       // B x 47 x 16
    std::vector<double> pool1_mask;                // dropout scale per cell, empty in Eval
    std::vector<double> pool1_out;                 // after dropout
    std::vector<double> conv2_act;                 // B x 37 x 32
    std::vector<std::uint32_t> pool2_argmax;       // B x 18 x 32
    std::vector<double> pool2_mask;
    std::vector<double> flat;                      // B x 576, after dropout
    std::vector<double> fc1_act;                   // B x 32, post-ReLU
    std::vector<double> fc1_mask;
    std::vector<double> fc1_out;
    std::vector<double> fc2_act;                   // B x 24
    std::vector<double> fc2_mask;
    std::vector<double> fc2_out;
    std::vector<double> logits;                    // B x C
};

struct ForwardResult {
    std::vector<double> probs;  // B x C
    ForwardCache cache;
};

/// Runs the network on a (B x 100 x N) batch. Train mode applies inverted
/// dropout drawn from `rng`; Eval mode never touches it.
/// Throws Error{ShapeMismatch} or Error{NonFiniteInput}.
ForwardResult forward(const NetworkParams& params, std::span<const double> batch,
                      std::size_t batch_size, Mode mode, double dropout_rate, Rng& rng);

/// Eval-mode class probabilities.
std::vector<double> predict_proba(const NetworkParams& params, std::span<const double> batch,
                                  std::size_t batch_size);

/// Row-wise softmax with max subtraction.
std::vector<double> softmax(std::span<const double> logits, std::size_t classes);

inline constexpr double kProbFloor = 1e-12;

/// Mean negative log-likelihood of the true class.
double cross_entropy(std::span<const double> probs, std::span<const int> labels,
                     std::size_t classes);

struct LossAndGrad {
    double loss = 0.0;
    Gradients grads;
};

/// Cross-entropy and its gradient with respect to every parameter.
LossAndGrad loss_and_grad(const NetworkParams& params, const ForwardCache& cache,
                          std::span<const double> probs, std::span<const int> labels);

/// One bias-corrected Adam update. Throws Error{NonFiniteGradient}.
void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               const Hyperparams& hyper);

/// Argmax per row of a (rows x classes) matrix, lowest index on ties.
std::vector<int> argmax_rows(std::span<const double> probs, std::size_t classes);

/// Argmax class per window, lowest index on ties.
std::vector<int> predict(const NetworkParams& params, const WindowSet& windows);

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Eval-mode loss and accuracy over a whole window set.
Evaluation evaluate(const NetworkParams& params, const WindowSet& windows);

// Checkpoint: magic "HRBN" | u32 version | u32 modality | u32 classes
// | f64 tensors in declaration order, little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(std::ostream& out, const NetworkParams& params);
NetworkParams load_checkpoint(std::istream& in);

}  // namespace harbench::nn
