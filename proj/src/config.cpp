#include "harbench/config.hpp"

#include "harbench/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <sstream>

namespace harbench {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void invalid(std::string_view key, std::string_view value, std::string_view why) {
    throw Error(ErrorKind::InvalidValue, fmt::format("{}: invalid value '{}' ({})", key, value, why));
}

template <typename T>
T parse_unsigned(std::string_view key, std::string_view value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) invalid(key, value, "expected an unsigned integer");
    return out;
}

double parse_double(std::string_view key, std::string_view value) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) invalid(key, value, "expected a number");
    return out;
}

std::vector<char> parse_combos(std::string_view key, std::string_view value) {
    if (value == "all") {
        std::vector<char> all;
        for (const auto& c : combination_catalog()) all.push_back(c.id);
        return all;
    }
    std::vector<char> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        const auto comma = value.find(',', pos);
        const auto item = trim(value.substr(pos, comma == std::string_view::npos ? value.npos : comma - pos));
        if (item.size() != 1 || item[0] < 'a' || item[0] > 'o') invalid(key, value, "expected letters a-o or 'all'");
        if (std::find(out.begin(), out.end(), item[0]) == out.end()) out.push_back(item[0]);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) invalid(key, value, "no combinations selected");
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

RunConfig::RunConfig() {
    for (const auto& c : combination_catalog()) combos.push_back(c.id);
}

std::string to_string(FitScope scope) { return scope == FitScope::Global ? "global" : "train"; }
std::string to_string(AccelRange range) { return range == AccelRange::G6 ? "6g" : "16g"; }

void set_config_value(RunConfig& config, std::string_view raw_key, std::string_view raw_value) {
    std::string key(trim(raw_key));
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string_view value = trim(raw_value);
    auto& h = config.hyper;

    if (key == "data_root") {
        config.data_root = std::string(value);
    } else if (key == "combos") {
        config.combos = parse_combos(key, value);
    } else if (key == "seed") {
        h.seed = parse_unsigned<std::uint64_t>(key, value);
    } else if (key == "lr") {
        h.learning_rate = parse_double(key, value);
    } else if (key == "batch_size") {
        h.batch_size = parse_unsigned<std::size_t>(key, value);
    } else if (key == "max_epochs") {
        h.max_epochs = parse_unsigned<std::size_t>(key, value);
    } else if (key == "patience") {
        h.patience = parse_unsigned<std::size_t>(key, value);
    } else if (key == "min_delta") {
        h.min_delta = parse_double(key, value);
    } else if (key == "dropout_rate") {
        h.dropout_rate = parse_double(key, value);
    } else if (key == "norm_scope") {
        if (value == "train") config.scope = FitScope::TrainOnly;
        else if (value == "global") config.scope = FitScope::Global;
        else invalid(key, value, "expected 'train' or 'global'");
    } else if (key == "accel_range") {
        if (value == "16g") config.accel_range = AccelRange::G16;
        else if (value == "6g") config.accel_range = AccelRange::G6;
        else invalid(key, value, "expected '16g' or '6g'");
    } else if (key == "subsample") {
        config.subsample = parse_unsigned<std::size_t>(key, value);
        if (config.subsample < 1) invalid(key, value, "must be >= 1");
    } else if (key == "max_gap") {
        config.max_gap = parse_unsigned<std::size_t>(key, value);
    } else if (key == "jobs") {
        config.jobs = parse_unsigned<std::size_t>(key, value);
        if (config.jobs < 1) invalid(key, value, "must be >= 1");
    } else if (key == "out") {
        if (value.empty()) invalid(key, value, "must not be empty");
        config.out_dir = std::string(value);
    } else {
        throw Error(ErrorKind::UnknownKey, fmt::format("unknown configuration key '{}'", key));
    }
}

RunConfig load_config(std::string_view text, const ConfigOverrides& overrides) {
    RunConfig config;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorKind::InvalidValue, fmt::format("config line {}: expected 'key = value'", line_no));
        }
        set_config_value(config, view.substr(0, eq), view.substr(eq + 1));
    }
    for (const auto& [key, value] : overrides) set_config_value(config, key, value);
    config.hyper.validate();
    return config;
}

std::string to_config_text(const RunConfig& config) {
    const auto& h = config.hyper;
    std::string combos;
    for (char c : config.combos) {
        if (!combos.empty()) combos += ',';
        combos += c;
    }
    std::string out;
    auto line = [&](std::string_view key, const std::string& value) {
        out += fmt::format("{} = {}\n", key, value);
    };
    line("data_root", config.data_root.string());
    line("combos", combos);
    line("seed", fmt::format("{}", h.seed));
    line("lr", fmt::format("{}", h.learning_rate));
    line("batch_size", fmt::format("{}", h.batch_size));
    line("max_epochs", fmt::format("{}", h.max_epochs));
    line("patience", fmt::format("{}", h.patience));
    line("min_delta", fmt::format("{}", h.min_delta));
    line("dropout_rate", fmt::format("{}", h.dropout_rate));
    line("norm_scope", to_string(config.scope));
    line("accel_range", to_string(config.accel_range));
    line("subsample", fmt::format("{}", config.subsample));
    line("max_gap", fmt::format("{}", config.max_gap));
    line("jobs", fmt::format("{}", config.jobs));
    line("out", config.out_dir.string());
    return out;
}

}  // namespace harbench
