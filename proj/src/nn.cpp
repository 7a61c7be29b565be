#include "harbench/nn.hpp"

#include "harbench/error.hpp"
#include "harbench/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

namespace harbench::nn {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const std::size_t blocks = n - n % 4;
    std::size_t i = 0;
    for (; i < blocks; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// [o][c][k] -> [o][k*Cin + c], so each output is a contiguous dot product.
std::vector<double> pack_kernel(std::span<const double> weights, const Conv1dShape& s) {
    std::vector<double> packed(weights.size());
    for (std::size_t o = 0; o < s.out_channels; ++o)
        for (std::size_t c = 0; c < s.in_channels; ++c)
            for (std::size_t k = 0; k < s.kernel; ++k)
                packed[(o * s.kernel + k) * s.in_channels + c] =
                    weights[(o * s.in_channels + c) * s.kernel + k];
    return packed;
}

void unpack_kernel_add(std::span<const double> packed, const Conv1dShape& s, std::span<double> weights) {
    for (std::size_t o = 0; o < s.out_channels; ++o)
        for (std::size_t c = 0; c < s.in_channels; ++c)
            for (std::size_t k = 0; k < s.kernel; ++k)
                weights[(o * s.in_channels + c) * s.kernel + k] +=
                    packed[(o * s.kernel + k) * s.in_channels + c];
}

void conv_forward_packed(const double* input, const double* packed, const double* biases,
                         const Conv1dShape& s, double* out) {
    const std::size_t span = s.kernel * s.in_channels;
    const std::size_t out_len = s.out_length();
    for (std::size_t t = 0; t < out_len; ++t) {
        const double* window = input + t * s.in_channels;
        for (std::size_t o = 0; o < s.out_channels; ++o) {
            out[t * s.out_channels + o] = biases[o] + dot(window, packed + o * span, span);
        }
    }
}

// grad_packed/grad_biases accumulate; grad_input (nullable) accumulates.
void conv_backward_packed(const double* input, const double* packed, const double* grad_out,
                          const Conv1dShape& s, double* grad_packed, double* grad_biases,
                          double* grad_input) {
    const std::size_t span = s.kernel * s.in_channels;
    const std::size_t out_len = s.out_length();
    for (std::size_t t = 0; t < out_len; ++t) {
        const double* window = input + t * s.in_channels;
        for (std::size_t o = 0; o < s.out_channels; ++o) {
            const double g = grad_out[t * s.out_channels + o];
            if (g == 0.0) continue;
            grad_biases[o] += g;
            axpy(g, window, grad_packed + o * span, span);
            if (grad_input != nullptr) axpy(g, packed + o * span, grad_input + t * s.in_channels, span);
        }
    }
}

void relu_inplace(double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void pool_forward(const double* input, std::size_t length, std::size_t channels, double* out,
                  std::uint32_t* argmax) {
    const std::size_t out_len = length / 2;
    for (std::size_t t = 0; t < out_len; ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double a = input[(2 * t) * channels + c];
            const double b = input[(2 * t + 1) * channels + c];
            const bool second = b > a;
            out[t * channels + c] = second ? b : a;
            argmax[t * channels + c] = static_cast<std::uint32_t>(second ? 2 * t + 1 : 2 * t);
        }
    }
}

void pool_backward(const double* grad_out, const std::uint32_t* argmax, std::size_t out_len,
                   std::size_t channels, double* grad_in) {
    for (std::size_t t = 0; t < out_len; ++t)
        for (std::size_t c = 0; c < channels; ++c)
            grad_in[argmax[t * channels + c] * channels + c] += grad_out[t * channels + c];
}

void dense_forward(const double* input, const std::vector<double>& w, const std::vector<double>& b,
                   std::size_t in, std::size_t out_n, double* out) {
    for (std::size_t o = 0; o < out_n; ++o) out[o] = b[o] + dot(w.data() + o * in, input, in);
}

void dense_backward(const double* input, const std::vector<double>& w, const double* grad_out,
                    std::size_t in, std::size_t out_n, std::vector<double>& grad_w,
                    std::vector<double>& grad_b, double* grad_in) {
    for (std::size_t o = 0; o < out_n; ++o) {
        const double g = grad_out[o];
        if (g == 0.0) continue;
        grad_b[o] += g;
        axpy(g, input, grad_w.data() + o * in, in);
        if (grad_in != nullptr) axpy(g, w.data() + o * in, grad_in, in);
    }
}

void dropout(double* values, std::size_t n, double rate, Rng& rng, double* mask) {
    const double scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < n; ++i) {
        mask[i] = rng.uniform() < rate ? 0.0 : scale;
        values[i] *= mask[i];
    }
}

const Conv1dShape& conv2_shape() {
    static const Conv1dShape s{kPool1Length, kConv1Filters, kConv2Filters, kConv2Kernel};
    return s;
}

Conv1dShape conv1_shape(std::size_t modality) {
    return {kInputLength, modality, kConv1Filters, kConv1Kernel};
}

template <typename Params>
auto tensor_array(Params& p) {
    using Span = std::conditional_t<std::is_const_v<Params>, std::span<const double>, std::span<double>>;
    return std::array<Span, kTensorCount>{p.conv1_w, p.conv1_b, p.conv2_w, p.conv2_b, p.fc1_w,
                                          p.fc1_b,   p.fc2_w,   p.fc2_b,   p.out_w,   p.out_b};
}

}  // namespace

void Hyperparams::validate() const {
    auto bad = [](const char* key, const std::string& why) {
        throw Error(ErrorKind::InvalidValue, fmt::format("{}: {}", key, why));
    };
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("lr", "must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) bad("adam_beta1", "must lie in [0, 1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) bad("adam_beta2", "must lie in [0, 1)");
    if (!(adam_epsilon > 0.0)) bad("adam_epsilon", "must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) bad("dropout_rate", "must lie in [0, 1)");
    if (batch_size < 1) bad("batch_size", "must be >= 1");
    if (max_epochs < 1) bad("max_epochs", "must be >= 1");
    if (patience < 1) bad("patience", "must be >= 1");
    if (!(min_delta >= 0.0)) bad("min_delta", "must be >= 0");
}

NetworkParams NetworkParams::zeros(std::size_t modality, std::size_t classes) {
    NetworkParams p;
    p.modality = modality;
    p.classes = classes;
    p.conv1_w.assign(kConv1Filters * modality * kConv1Kernel, 0.0);
    p.conv1_b.assign(kConv1Filters, 0.0);
    p.conv2_w.assign(kConv2Filters * kConv1Filters * kConv2Kernel, 0.0);
    p.conv2_b.assign(kConv2Filters, 0.0);
    p.fc1_w.assign(kFc1Units * kFlatten, 0.0);
    p.fc1_b.assign(kFc1Units, 0.0);
    p.fc2_w.assign(kFc2Units * kFc1Units, 0.0);
    p.fc2_b.assign(kFc2Units, 0.0);
    p.out_w.assign(classes * kFc2Units, 0.0);
    p.out_b.assign(classes, 0.0);
    return p;
}

std::array<std::span<double>, kTensorCount> NetworkParams::tensors() { return tensor_array(*this); }

std::array<std::span<const double>, kTensorCount> NetworkParams::tensors() const {
    return tensor_array(*this);
}

std::size_t NetworkParams::size() const {
    std::size_t n = 0;
    for (const auto& t : tensors()) n += t.size();
    return n;
}

std::size_t param_count(std::size_t modality, std::size_t classes) {
    return kConv1Filters * (kConv1Kernel * modality + 1) +
           kConv2Filters * (kConv1Filters * kConv2Kernel + 1) + (kFlatten * kFc1Units + kFc1Units) +
           (kFc1Units * kFc2Units + kFc2Units) + (kFc2Units * classes + classes);
}

NetworkParams init_network(std::size_t modality, std::size_t classes, std::uint64_t seed) {
    if (modality != 6 && modality != 9 && modality != 12 && modality != 18) {
        throw Error(ErrorKind::UnsupportedModality,
                    fmt::format("modality {} is not one of 6, 9, 12, 18", modality));
    }
    if (classes < 2) throw Error(ErrorKind::InvalidArgument, "need at least two classes");

    NetworkParams p = NetworkParams::zeros(modality, classes);
    Rng rng(seed);
    auto fill = [&](std::vector<double>& w, std::size_t fan_in, double scale) {
        const double bound = scale * std::sqrt(6.0 / static_cast<double>(fan_in));
        for (auto& x : w) x = rng.uniform(-bound, bound);
    };
    fill(p.conv1_w, modality * kConv1Kernel, 1.0);
    fill(p.conv2_w, kConv1Filters * kConv2Kernel, 1.0);
    fill(p.fc1_w, kFlatten, 1.0);
    fill(p.fc2_w, kFc1Units, 1.0);
    fill(p.out_w, kFc2Units, kOutputInitScale);
    return p;
}

AdamState AdamState::for_params(const NetworkParams& params) {
    AdamState s;
    s.m = NetworkParams::zeros(params.modality, params.classes);
    s.v = NetworkParams::zeros(params.modality, params.classes);
    return s;
}

void apply_dropout(std::span<double> values, double rate, Rng& rng, std::span<double> mask) {
    if (mask.size() != values.size()) throw Error(ErrorKind::ShapeMismatch, "dropout mask size differs");
    dropout(values.data(), values.size(), rate, rng, mask.data());
}

std::vector<double> conv1d(std::span<const double> input, std::span<const double> weights,
                           std::span<const double> biases, const Conv1dShape& shape) {
    if (shape.kernel == 0 || shape.length < shape.kernel ||
        input.size() != shape.length * shape.in_channels ||
        weights.size() != shape.out_channels * shape.in_channels * shape.kernel ||
        biases.size() != shape.out_channels) {
        throw Error(ErrorKind::ShapeMismatch, "conv1d: inconsistent shapes");
    }
    const auto packed = pack_kernel(weights, shape);
    std::vector<double> out(shape.out_length() * shape.out_channels);
    conv_forward_packed(input.data(), packed.data(), biases.data(), shape, out.data());
    return out;
}

void conv1d_backward(std::span<const double> input, std::span<const double> weights,
                     std::span<const double> grad_output, const Conv1dShape& shape,
                     std::span<double> grad_weights, std::span<double> grad_biases,
                     std::span<double> grad_input) {
    if (input.size() != shape.length * shape.in_channels ||
        weights.size() != shape.out_channels * shape.in_channels * shape.kernel ||
        grad_output.size() != shape.out_length() * shape.out_channels ||
        grad_weights.size() != weights.size() || grad_biases.size() != shape.out_channels ||
        (!grad_input.empty() && grad_input.size() != input.size())) {
        throw Error(ErrorKind::ShapeMismatch, "conv1d_backward: inconsistent shapes");
    }
    const auto packed = pack_kernel(weights, shape);
    std::vector<double> grad_packed(weights.size(), 0.0);
    if (!grad_input.empty()) std::fill(grad_input.begin(), grad_input.end(), 0.0);
    conv_backward_packed(input.data(), packed.data(), grad_output.data(), shape, grad_packed.data(),
                         grad_biases.data(), grad_input.empty() ? nullptr : grad_input.data());
    unpack_kernel_add(grad_packed, shape, grad_weights);
}

PoolResult maxpool(std::span<const double> input, std::size_t length, std::size_t channels) {
    if (length < 2 || input.size() != length * channels) {
        throw Error(ErrorKind::ShapeMismatch, "maxpool: inconsistent shapes");
    }
    PoolResult r;
    r.output.resize((length / 2) * channels);
    r.argmax.resize(r.output.size());
    pool_forward(input.data(), length, channels, r.output.data(), r.argmax.data());
    return r;
}

std::vector<double> maxpool_backward(std::span<const double> grad_output,
                                     std::span<const std::uint32_t> argmax, std::size_t length,
                                     std::size_t channels) {
    if (grad_output.size() != argmax.size() || grad_output.size() != (length / 2) * channels) {
        throw Error(ErrorKind::ShapeMismatch, "maxpool_backward: inconsistent shapes");
    }
    std::vector<double> grad_in(length * channels, 0.0);
    pool_backward(grad_output.data(), argmax.data(), length / 2, channels, grad_in.data());
    return grad_in;
}

std::vector<double> softmax(std::span<const double> logits, std::size_t classes) {
    std::vector<double> out(logits.size());
    for (std::size_t r = 0; r + classes <= logits.size(); r += classes) {
        const double mx = *std::max_element(logits.begin() + r, logits.begin() + r + classes);
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            out[r + c] = std::exp(logits[r + c] - mx);
            sum += out[r + c];
        }
        for (std::size_t c = 0; c < classes; ++c) out[r + c] /= sum;
    }
    return out;
}

ForwardResult forward(const NetworkParams& params, std::span<const double> batch,
                      std::size_t batch_size, Mode mode, double dropout_rate, Rng& rng) {
    const std::size_t n = params.modality;
    const std::size_t classes = params.classes;
    if (batch_size == 0 || batch.size() != batch_size * kInputLength * n) {
        throw Error(ErrorKind::ShapeMismatch,
                    fmt::format("forward: batch of {} values does not match {} x {} x {}", batch.size(),
                                batch_size, kInputLength, n));
    }
    if (!std::all_of(batch.begin(), batch.end(), [](double v) { return std::isfinite(v); })) {
        throw Error(ErrorKind::NonFiniteInput, "forward: non-finite input value");
    }
    const bool drop = mode == Mode::Train && dropout_rate > 0.0;

    ForwardResult r;
    ForwardCache& c = r.cache;
    c.batch = batch_size;
    c.modality = n;
    c.input.assign(batch.begin(), batch.end());
    c.conv1_act.resize(batch_size * kConv1Length * kConv1Filters);
    c.pool1_argmax.resize(batch_size * kPool1Length * kConv1Filters);
    c.pool1_out.resize(batch_size * kPool1Length * kConv1Filters);
    c.conv2_act.resize(batch_size * kConv2Length * kConv2Filters);
    c.pool2_argmax.resize(batch_size * kFlatten);
    c.flat.resize(batch_size * kFlatten);
    c.fc1_act.resize(batch_size * kFc1Units);
    c.fc1_out.resize(batch_size * kFc1Units);
    c.fc2_act.resize(batch_size * kFc2Units);
    c.fc2_out.resize(batch_size * kFc2Units);
    c.logits.resize(batch_size * classes);
    if (drop) {
        c.pool1_mask.resize(c.pool1_out.size());
        c.pool2_mask.resize(c.flat.size());
        c.fc1_mask.resize(c.fc1_out.size());
        c.fc2_mask.resize(c.fc2_out.size());
    }

    const Conv1dShape s1 = conv1_shape(n);
    const Conv1dShape& s2 = conv2_shape();
    const auto packed1 = pack_kernel(params.conv1_w, s1);
    const auto packed2 = pack_kernel(params.conv2_w, s2);

    for (std::size_t b = 0; b < batch_size; ++b) {
        const double* x = c.input.data() + b * kInputLength * n;

        double* a1 = c.conv1_act.data() + b * kConv1Length * kConv1Filters;
        conv_forward_packed(x, packed1.data(), params.conv1_b.data(), s1, a1);
        relu_inplace(a1, kConv1Length * kConv1Filters);

        const std::size_t p1_off = b * kPool1Length * kConv1Filters;
        double* p1 = c.pool1_out.data() + p1_off;
        pool_forward(a1, kConv1Length, kConv1Filters, p1, c.pool1_argmax.data() + p1_off);
        if (drop) dropout(p1, kPool1Length * kConv1Filters, dropout_rate, rng, c.pool1_mask.data() + p1_off);

        double* a2 = c.conv2_act.data() + b * kConv2Length * kConv2Filters;
        conv_forward_packed(p1, packed2.data(), params.conv2_b.data(), s2, a2);
        relu_inplace(a2, kConv2Length * kConv2Filters);

        double* flat = c.flat.data() + b * kFlatten;
        pool_forward(a2, kConv2Length, kConv2Filters, flat, c.pool2_argmax.data() + b * kFlatten);
        if (drop) dropout(flat, kFlatten, dropout_rate, rng, c.pool2_mask.data() + b * kFlatten);

        double* h1 = c.fc1_act.data() + b * kFc1Units;
        dense_forward(flat, params.fc1_w, params.fc1_b, kFlatten, kFc1Units, h1);
        relu_inplace(h1, kFc1Units);
        double* h1_out = c.fc1_out.data() + b * kFc1Units;
        std::copy(h1, h1 + kFc1Units, h1_out);
        if (drop) dropout(h1_out, kFc1Units, dropout_rate, rng, c.fc1_mask.data() + b * kFc1Units);

        double* h2 = c.fc2_act.data() + b * kFc2Units;
        dense_forward(h1_out, params.fc2_w, params.fc2_b, kFc1Units, kFc2Units, h2);
        relu_inplace(h2, kFc2Units);
        double* h2_out = c.fc2_out.data() + b * kFc2Units;
        std::copy(h2, h2 + kFc2Units, h2_out);
        if (drop) dropout(h2_out, kFc2Units, dropout_rate, rng, c.fc2_mask.data() + b * kFc2Units);

        dense_forward(h2_out, params.out_w, params.out_b, kFc2Units, classes,
                      c.logits.data() + b * classes);
    }
    r.probs = softmax(c.logits, classes);
    return r;
}

std::vector<double> predict_proba(const NetworkParams& params, std::span<const double> batch,
                                  std::size_t batch_size) {
    Rng unused(0);
    return forward(params, batch, batch_size, Mode::Eval, 0.0, unused).probs;
}

double cross_entropy(std::span<const double> probs, std::span<const int> labels, std::size_t classes) {
    if (labels.empty() || probs.size() != labels.size() * classes) {
        throw Error(ErrorKind::ShapeMismatch, "cross_entropy: inconsistent shapes");
    }
    double sum = 0.0;
    for (std::size_t b = 0; b < labels.size(); ++b) {
        sum -= std::log(std::max(probs[b * classes + static_cast<std::size_t>(labels[b])], kProbFloor));
    }
    return sum / static_cast<double>(labels.size());
}

LossAndGrad loss_and_grad(const NetworkParams& params, const ForwardCache& c,
                          std::span<const double> probs, std::span<const int> labels) {
    const std::size_t batch = c.batch;
    const std::size_t n = params.modality;
    const std::size_t classes = params.classes;
    if (labels.size() != batch || probs.size() != batch * classes || c.modality != n ||
        c.input.size() != batch * kInputLength * n) {
        throw Error(ErrorKind::ShapeMismatch, "loss_and_grad: inconsistent shapes");
    }
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            throw Error(ErrorKind::ShapeMismatch, fmt::format("label {} out of range", y));
        }
    }

    LossAndGrad out;
    out.loss = cross_entropy(probs, labels, classes);
    Gradients& g = out.grads;
    g = NetworkParams::zeros(n, classes);

    const Conv1dShape s1 = conv1_shape(n);
    const Conv1dShape& s2 = conv2_shape();
    const auto packed2 = pack_kernel(params.conv2_w, s2);
    std::vector<double> g_packed1(params.conv1_w.size(), 0.0);
    std::vector<double> g_packed2(params.conv2_w.size(), 0.0);

    const bool masked = !c.pool1_mask.empty();
    const double inv_batch = 1.0 / static_cast<double>(batch);

    std::vector<double> d_logits(classes);
    std::vector<double> d_h2(kFc2Units);
    std::vector<double> d_h1(kFc1Units);
    std::vector<double> d_flat(kFlatten);
    std::vector<double> d_a2(kConv2Length * kConv2Filters);
    std::vector<double> d_p1(kPool1Length * kConv1Filters);
    std::vector<double> d_a1(kConv1Length * kConv1Filters);

    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t k = 0; k < classes; ++k) {
            const double onehot = static_cast<std::size_t>(labels[b]) == k ? 1.0 : 0.0;
            d_logits[k] = (probs[b * classes + k] - onehot) * inv_batch;
        }

        std::fill(d_h2.begin(), d_h2.end(), 0.0);
        dense_backward(c.fc2_out.data() + b * kFc2Units, params.out_w, d_logits.data(), kFc2Units,
                       classes, g.out_w, g.out_b, d_h2.data());
        for (std::size_t i = 0; i < kFc2Units; ++i) {
            if (masked) d_h2[i] *= c.fc2_mask[b * kFc2Units + i];
            if (!(c.fc2_act[b * kFc2Units + i] > 0.0)) d_h2[i] = 0.0;
        }

        std::fill(d_h1.begin(), d_h1.end(), 0.0);
        dense_backward(c.fc1_out.data() + b * kFc1Units, params.fc2_w, d_h2.data(), kFc1Units,
                       kFc2Units, g.fc2_w, g.fc2_b, d_h1.data());
        for (std::size_t i = 0; i < kFc1Units; ++i) {
            if (masked) d_h1[i] *= c.fc1_mask[b * kFc1Units + i];
            if (!(c.fc1_act[b * kFc1Units + i] > 0.0)) d_h1[i] = 0.0;
        }

        std::fill(d_flat.begin(), d_flat.end(), 0.0);
        dense_backward(c.flat.data() + b * kFlatten, params.fc1_w, d_h1.data(), kFlatten, kFc1Units,
                       g.fc1_w, g.fc1_b, d_flat.data());
        if (masked) {
            for (std::size_t i = 0; i < kFlatten; ++i) d_flat[i] *= c.pool2_mask[b * kFlatten + i];
        }

        std::fill(d_a2.begin(), d_a2.end(), 0.0);
        pool_backward(d_flat.data(), c.pool2_argmax.data() + b * kFlatten, kPool2Length, kConv2Filters,
                      d_a2.data());
        const double* a2 = c.conv2_act.data() + b * kConv2Length * kConv2Filters;
        for (std::size_t i = 0; i < d_a2.size(); ++i) {
            if (!(a2[i] > 0.0)) d_a2[i] = 0.0;
        }

        const std::size_t p1_off = b * kPool1Length * kConv1Filters;
        std::fill(d_p1.begin(), d_p1.end(), 0.0);
        conv_backward_packed(c.pool1_out.data() + p1_off, packed2.data(), d_a2.data(), s2,
                             g_packed2.data(), g.conv2_b.data(), d_p1.data());
        if (masked) {
            for (std::size_t i = 0; i < d_p1.size(); ++i) d_p1[i] *= c.pool1_mask[p1_off + i];
        }

        std::fill(d_a1.begin(), d_a1.end(), 0.0);
        pool_backward(d_p1.data(), c.pool1_argmax.data() + p1_off, kPool1Length, kConv1Filters,
                      d_a1.data());
        const double* a1 = c.conv1_act.data() + b * kConv1Length * kConv1Filters;
        for (std::size_t i = 0; i < d_a1.size(); ++i) {
            if (!(a1[i] > 0.0)) d_a1[i] = 0.0;
        }

        conv_backward_packed(c.input.data() + b * kInputLength * n, nullptr, d_a1.data(), s1,
                             g_packed1.data(), g.conv1_b.data(), nullptr);
    }
    unpack_kernel_add(g_packed1, s1, g.conv1_w);
    unpack_kernel_add(g_packed2, s2, g.conv2_w);
    return out;
}

void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               const Hyperparams& hyper) {
    auto p = params.tensors();
    const auto g = grads.tensors();
    auto m = state.m.tensors();
    auto v = state.v.tensors();
    for (std::size_t i = 0; i < kTensorCount; ++i) {
        if (g[i].size() != p[i].size() || m[i].size() != p[i].size() || v[i].size() != p[i].size()) {
            throw Error(ErrorKind::ShapeMismatch, "adam_step: gradient/state shapes differ from params");
        }
        if (!std::all_of(g[i].begin(), g[i].end(), [](double x) { return std::isfinite(x); })) {
            throw Error(ErrorKind::NonFiniteGradient,
                        fmt::format("non-finite gradient in {}", kTensorNames[i]));
        }
    }
    state.t += 1;
    const double b1 = hyper.adam_beta1;
    const double b2 = hyper.adam_beta2;
    const double t = static_cast<double>(state.t);
    const double correction1 = 1.0 - std::pow(b1, t);
    const double correction2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < kTensorCount; ++i) {
        for (std::size_t j = 0; j < p[i].size(); ++j) {
            const double gj = g[i][j];
            m[i][j] = b1 * m[i][j] + (1.0 - b1) * gj;
            v[i][j] = b2 * v[i][j] + (1.0 - b2) * gj * gj;
            const double m_hat = m[i][j] / correction1;
            const double v_hat = v[i][j] / correction2;
            p[i][j] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.adam_epsilon);
        }
    }
}

namespace {

constexpr std::size_t kEvalChunk = 256;

template <typename Fn>
void for_each_chunk(const NetworkParams& params, const WindowSet& windows, Fn&& fn) {
    if (windows.modality != params.modality) {
        throw Error(ErrorKind::ShapeMismatch,
                    fmt::format("network expects {} channels, windows have {}", params.modality,
                                windows.modality));
    }
    const std::size_t stride = windows.window_stride();
    for (std::size_t start = 0; start < windows.size(); start += kEvalChunk) {
        const std::size_t count = std::min(kEvalChunk, windows.size() - start);
        const auto chunk = std::span<const double>(windows.data).subspan(start * stride, count * stride);
        fn(start, count, predict_proba(params, chunk, count));
    }
}

std::size_t argmax_row(const double* row, std::size_t classes) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < classes; ++k) {
        if (row[k] > row[best]) best = k;
    }
    return best;
}

}  // namespace

std::vector<int> argmax_rows(std::span<const double> probs, std::size_t classes) {
    if (classes == 0 || probs.size() % classes != 0) {
        throw Error(ErrorKind::ShapeMismatch, "argmax_rows: size is not a multiple of the class count");
    }
    std::vector<int> out(probs.size() / classes);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<int>(argmax_row(probs.data() + i * classes, classes));
    }
    return out;
}

std::vector<int> predict(const NetworkParams& params, const WindowSet& windows) {
    std::vector<int> out(windows.size());
    const std::size_t classes = params.classes;
    for_each_chunk(params, windows, [&](std::size_t start, std::size_t count, const std::vector<double>& probs) {
        for (std::size_t i = 0; i < count; ++i) {
            out[start + i] = static_cast<int>(argmax_row(probs.data() + i * classes, classes));
        }
    });
    return out;
}

Evaluation evaluate(const NetworkParams& params, const WindowSet& windows) {
    if (windows.empty()) throw Error(ErrorKind::EmptyInput, "evaluate: empty window set");
    const std::size_t classes = params.classes;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for_each_chunk(params, windows, [&](std::size_t start, std::size_t count, const std::vector<double>& probs) {
        for (std::size_t i = 0; i < count; ++i) {
            const auto label = static_cast<std::size_t>(windows.labels[start + i]);
            const double* row = probs.data() + i * classes;
            loss_sum -= std::log(std::max(row[label], kProbFloor));
            if (argmax_row(row, classes) == label) ++correct;
        }
    });
    const double n = static_cast<double>(windows.size());
    return {loss_sum / n, static_cast<double>(correct) / n};
}

namespace {

constexpr char kCheckpointMagic[4] = {'H', 'R', 'B', 'N'};

void write_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

void write_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

std::uint64_t read_le(std::istream& in, int bytes) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), bytes)) {
        throw Error(ErrorKind::BadCache, "checkpoint truncated");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const NetworkParams& params) {
    out.write(kCheckpointMagic, 4);
    write_u32(out, kCheckpointVersion);
    write_u32(out, static_cast<std::uint32_t>(params.modality));
    write_u32(out, static_cast<std::uint32_t>(params.classes));
    for (const auto& t : params.tensors())
        for (double v : t) write_f64(out, v);
    if (!out) throw Error(ErrorKind::Io, "failed writing checkpoint");
}

NetworkParams load_checkpoint(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kCheckpointMagic)) {
        throw Error(ErrorKind::BadCache, "bad checkpoint magic");
    }
    const auto version = read_le(in, 4);
    if (version != kCheckpointVersion) {
        throw Error(ErrorKind::BadCache, fmt::format("unsupported checkpoint version {}", version));
    }
    const auto modality = static_cast<std::size_t>(read_le(in, 4));
    const auto classes = static_cast<std::size_t>(read_le(in, 4));
    if (modality == 0 || modality > 1024 || classes < 2 || classes > 1024) {
        throw Error(ErrorKind::BadCache, "implausible checkpoint header");
    }
    NetworkParams p = NetworkParams::zeros(modality, classes);
    for (auto& t : p.tensors())
        for (double& v : t) v = std::bit_cast<double>(read_le(in, 8));
    return p;
}

}  // namespace harbench::nn
