#include "harbench/gradcheck.hpp"

#include "harbench/nn.hpp"
#include "harbench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace harbench::nn {

namespace {

// ReLU on/off states and pool winners. Central differences are only valid
// when both perturbed evaluations share the same pattern.
bool same_activation_pattern(const ForwardCache& a, const ForwardCache& b) {
    auto same_sign = [](const std::vector<double>& x, const std::vector<double>& y) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            if ((x[i] > 0.0) != (y[i] > 0.0)) return false;
        }
        return true;
    };
    return a.pool1_argmax == b.pool1_argmax && a.pool2_argmax == b.pool2_argmax &&
           same_sign(a.conv1_act, b.conv1_act) && same_sign(a.conv2_act, b.conv2_act) &&
           same_sign(a.fc1_act, b.fc1_act) && same_sign(a.fc2_act, b.fc2_act);
}

}  // namespace

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelErrorFloor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport gradient_check(const GradCheckOptions& options) {
    Rng rng(options.seed);
    NetworkParams params = init_network(options.modality, kDefaultClasses, options.seed);
    // Non-zero biases so the bias paths carry signal.
    for (auto* b : {&params.conv1_b, &params.conv2_b, &params.fc1_b, &params.fc2_b, &params.out_b}) {
        for (double& v : *b) v = rng.uniform(-0.1, 0.1);
    }
    // Undo the small output-layer init so gradients reaching the lower layers are not tiny.
    for (double& v : params.out_w) v *= 1.0 / kOutputInitScale;

    std::vector<double> batch(options.batch * kInputLength * options.modality);
    for (double& v : batch) v = rng.normal();
    std::vector<int> labels(options.batch);
    for (int& y : labels) y = static_cast<int>(rng.below(kDefaultClasses));

    Rng unused(0);
    auto eval = [&](const NetworkParams& p) {
        return forward(p, batch, options.batch, Mode::Eval, 0.0, unused);
    };
    const auto fwd = eval(params);
    const auto analytic = loss_and_grad(params, fwd.cache, fwd.probs, labels);

    static constexpr const char* layer_names[] = {"conv1", "conv2", "fc1", "fc2", "out"};
    GradCheckReport report;
    auto tensors = params.tensors();
    const auto grads = analytic.grads.tensors();
    for (std::size_t layer = 0; layer < kTensorCount / 2; ++layer) {
        const std::size_t wi = 2 * layer;
        const std::size_t bi = wi + 1;
        const std::size_t total = tensors[wi].size() + tensors[bi].size();
        std::vector<std::size_t> order(total);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(std::span<std::size_t>(order));

        LayerCheck check{layer_names[layer], 0, 0.0};
        for (std::size_t flat : order) {
            if (check.checked >= options.samples_per_layer) break;
            const bool is_weight = flat < tensors[wi].size();
            const std::size_t t = is_weight ? wi : bi;
            const std::size_t j = is_weight ? flat : flat - tensors[wi].size();
            double& slot = tensors[t][j];
            const double saved = slot;
            slot = saved + options.step;
            const auto plus = eval(params);
            slot = saved - options.step;
            const auto minus = eval(params);
            slot = saved;
            if (!same_activation_pattern(plus.cache, minus.cache)) {
                ++report.skipped_kinks;
                continue;
            }
            const double numeric = (cross_entropy(plus.probs, labels, kDefaultClasses) -
                                    cross_entropy(minus.probs, labels, kDefaultClasses)) /
                                   (2.0 * options.step);
            check.max_rel_error = std::max(check.max_rel_error, relative_error(grads[t][j], numeric));
            ++check.checked;
        }
        report.checked += check.checked;
        report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
        report.layers.push_back(check);
    }
    return report;
}

}  // namespace harbench::nn
