#pragma once

#include "harbench/nn.hpp"
#include "harbench/pamap2.hpp"
#include "harbench/pipeline.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace harbench {

struct RunConfig {
    std::filesystem::path data_root;
    std::vector<char> combos;  // catalog order
    nn::Hyperparams hyper;
    FitScope scope = FitScope::TrainOnly;
    AccelRange accel_range = AccelRange::G16;
    std::size_t subsample = 1;
    std::size_t max_gap = kDefaultMaxGap;
    std::size_t jobs = 1;
    std::filesystem::path out_dir = "harbench_out";

    RunConfig();
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines (`#` starts a comment), then applies
/// `overrides` in order. Throws Error{UnknownKey} or Error{InvalidValue}.
RunConfig load_config(std::string_view text, const ConfigOverrides& overrides = {});

/// Applies a single key; shared by file parsing and command-line overrides.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Fully resolved configuration in the same format load_config() reads.
std::string to_config_text(const RunConfig& config);

std::string to_string(FitScope scope);
std::string to_string(AccelRange range);

}  // namespace harbench
