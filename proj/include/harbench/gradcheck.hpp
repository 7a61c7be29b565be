#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace harbench::nn {

struct GradCheckOptions {
    std::size_t modality = 6;
    std::size_t batch = 4;
    std::size_t samples_per_layer = 256;  // capped at the layer's parameter count
    double step = 1e-5;
    std::uint64_t seed = 1;
};

struct LayerCheck {
    std::string layer;
    std::size_t checked = 0;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<LayerCheck> layers;  // conv1, conv2, fc1, fc2, out
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    /// Coordinates whose +/- step crossed a ReLU or pooling boundary; not
    /// counted in `checked` and replaced by the next sampled coordinate.
    std::size_t skipped_kinks = 0;
};

/// Error denominator floor: |a - n| / max(|a|, |n|, kRelErrorFloor).
inline constexpr double kRelErrorFloor = 1e-6;

double relative_error(double analytic, double numeric);

/// Compares analytic gradients with central differences on a random
/// network, batch and labels (dropout disabled). Coordinates whose
/// perturbation flips a ReLU or pooling decision are skipped.
GradCheckReport gradient_check(const GradCheckOptions& options);

}  // namespace harbench::nn
