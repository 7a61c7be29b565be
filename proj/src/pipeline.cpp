#include "harbench/pipeline.hpp"

#include "harbench/error.hpp"
#include "harbench/gaps.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <ostream>
#include <set>

namespace harbench {

namespace {

std::vector<ChannelId> pick(std::initializer_list<Location> locations,
                            std::initializer_list<SensorKind> kinds) {
    std::vector<ChannelId> out;
    for (const auto& ch : all_channels()) {
        const bool loc = std::find(locations.begin(), locations.end(), ch.location) != locations.end();
        const bool kind = std::find(kinds.begin(), kinds.end(), ch.kind) != kinds.end();
        if (loc && kind) out.push_back(ch);
    }
    return out;
}

std::vector<SignalCombination> make_catalog() {
    using L = Location;
    constexpr auto acc = SensorKind::Accel;
    constexpr auto gyro = SensorKind::Gyro;
    return {
        {'a', "Gyrometer", pick({L::Hand, L::Chest, L::Ankle}, {gyro})},
        {'b', "Accelerometer", pick({L::Hand, L::Chest, L::Ankle}, {acc})},
        {'c', "All 3 IMUs", pick({L::Hand, L::Chest, L::Ankle}, {acc, gyro})},
        {'d', "Ankle IMU", pick({L::Ankle}, {acc, gyro})},
        {'e', "Hand IMU", pick({L::Hand}, {acc, gyro})},
        {'f', "Chest IMU", pick({L::Chest}, {acc, gyro})},
        {'g', "Hand and Ankle Gyrometer", pick({L::Hand, L::Ankle}, {gyro})},
        {'h', "Hand and Ankle Accelerometer", pick({L::Hand, L::Ankle}, {acc})},
        {'i', "Hand and Ankle IMU", pick({L::Hand, L::Ankle}, {acc, gyro})},
        {'j', "Chest and Ankle Gyrometer", pick({L::Chest, L::Ankle}, {gyro})},
        {'k', "Chest and Ankle Accelerometer", pick({L::Chest, L::Ankle}, {acc})},
        {'l', "Chest and Ankle IMU", pick({L::Chest, L::Ankle}, {acc, gyro})},
        {'m', "Hand and Chest Gyrometer", pick({L::Hand, L::Chest}, {gyro})},
        {'n', "Hand and Chest Accelerometer", pick({L::Hand, L::Chest}, {acc})},
        {'o', "Hand and Chest IMU", pick({L::Hand, L::Chest}, {acc, gyro})},
    };
}

bool row_is_finite(std::span<const double> cleaned, std::size_t row) {
    const auto r = cleaned.subspan(row * kChannelCount, kChannelCount);
    return std::all_of(r.begin(), r.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

const std::vector<SignalCombination>& combination_catalog() {
    static const std::vector<SignalCombination> catalog = make_catalog();
    return catalog;
}

const SignalCombination& find_combination(char id) {
    for (const auto& combo : combination_catalog()) {
        if (combo.id == id) return combo;
    }
    throw Error(ErrorKind::InvalidValue, fmt::format("unknown combination '{}'", id));
}

SignalCombination all_channels_combination() {
    const auto chans = all_channels();
    return {'*', "All channels", {chans.begin(), chans.end()}};
}

void WindowSet::append(const WindowSet& other) {
    if (other.empty()) return;
    if (empty() && modality == 0) modality = other.modality;
    if (modality != other.modality) {
        throw Error(ErrorKind::ChannelMismatch,
                    fmt::format("cannot append {}-channel windows to {}-channel set", other.modality,
                                modality));
    }
    data.insert(data.end(), other.data.begin(), other.data.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    origins.insert(origins.end(), other.origins.begin(), other.origins.end());
}

std::size_t window_count(std::size_t segment_length) noexcept {
    if (segment_length < kWindowLength) return 0;
    return (segment_length - kWindowLength) / kWindowStride + 1;
}

WindowSet segment_windows(const ActivitySegment& segment, int segment_index,
                          std::span<const double> cleaned, const SignalCombination& combo) {
    const std::size_t length = segment.length();
    if (cleaned.size() != length * kChannelCount) {
        throw Error(ErrorKind::ShapeMismatch, "cleaned block does not match segment length");
    }
    WindowSet out;
    out.modality = combo.modality();

    // Prefix count of rows containing a missing cell.
    std::vector<std::size_t> bad_prefix(length + 1, 0);
    for (std::size_t r = 0; r < length; ++r) {
        bad_prefix[r + 1] = bad_prefix[r] + (row_is_finite(cleaned, r) ? 0 : 1);
    }

    const std::size_t count = window_count(length);
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t start = w * kWindowStride;
        if (bad_prefix[start + kWindowLength] != bad_prefix[start]) continue;
        for (std::size_t t = 0; t < kWindowLength; ++t) {
            const std::size_t row = (start + t) * kChannelCount;
            for (const auto& ch : combo.channels) out.data.push_back(cleaned[row + ch.index()]);
        }
        out.labels.push_back(segment.class_label);
        out.origins.push_back({segment.subject_id, segment_index, start});
    }
    return out;
}

WindowSet subject_windows(const SubjectRecording& rec, const LabelMap& label_map,
                          const SignalCombination& combo, std::size_t max_gap) {
    WindowSet out;
    out.modality = combo.modality();
    const auto segments = extract_segments(rec, label_map);
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const auto& seg = segments[s];
        if (seg.length() < kWindowLength) continue;
        const auto block = std::span<const double>(rec.values)
                               .subspan(seg.begin * kChannelCount, seg.length() * kChannelCount);
        const auto cleaned = clean_missing_columns(block, kChannelCount, max_gap);
        out.append(segment_windows(seg, static_cast<int>(s), cleaned, combo));
    }
    return out;
}

WindowSet select_channels(const WindowSet& full, const SignalCombination& combo) {
    if (full.modality != kChannelCount) {
        throw Error(ErrorKind::ChannelMismatch, "channel selection needs an 18-channel window set");
    }
    WindowSet out;
    out.modality = combo.modality();
    out.labels = full.labels;
    out.origins = full.origins;
    out.data.reserve(full.size() * kWindowLength * out.modality);
    const std::size_t rows = full.size() * kWindowLength;
    for (std::size_t r = 0; r < rows; ++r) {
        for (const auto& ch : combo.channels) out.data.push_back(full.data[r * kChannelCount + ch.index()]);
    }
    return out;
}

WindowSet subsample(const WindowSet& windows, std::size_t every) {
    if (every == 0) throw Error(ErrorKind::InvalidArgument, "subsample factor must be >= 1");
    if (every == 1) return windows;
    WindowSet out;
    out.modality = windows.modality;
    for (std::size_t i = 0; i < windows.size(); i += every) {
        const auto w = windows.window(i);
        out.data.insert(out.data.end(), w.begin(), w.end());
        out.labels.push_back(windows.labels[i]);
        out.origins.push_back(windows.origins[i]);
    }
    return out;
}

ChannelStats fit_stats(const WindowSet& windows, FitScope scope) {
    if (windows.empty() || windows.modality == 0) {
        throw Error(ErrorKind::EmptyInput, "cannot fit statistics on an empty window set");
    }
    const std::size_t n_ch = windows.modality;
    std::vector<double> mean(n_ch, 0.0);
    std::vector<double> m2(n_ch, 0.0);
    const std::size_t rows = windows.size() * kWindowLength;
    for (std::size_t r = 0; r < rows; ++r) {
        const double k = static_cast<double>(r + 1);
        for (std::size_t c = 0; c < n_ch; ++c) {
            const double x = windows.data[r * n_ch + c];
            const double delta = x - mean[c];
            mean[c] += delta / k;
            m2[c] += delta * (x - mean[c]);
        }
    }
    ChannelStats stats;
    stats.scope = scope;
    stats.mean = std::move(mean);
    stats.stddev.resize(n_ch);
    for (std::size_t c = 0; c < n_ch; ++c) {
        stats.stddev[c] = std::sqrt(std::max(0.0, m2[c] / static_cast<double>(rows)));
    }
    return stats;
}

WindowSet apply_stats(const ChannelStats& stats, const WindowSet& windows) {
    const std::size_t n_ch = windows.modality;
    if (stats.mean.size() != n_ch || stats.stddev.size() != n_ch) {
        throw Error(ErrorKind::ChannelMismatch,
                    fmt::format("statistics for {} channels applied to {}-channel windows",
                                stats.mean.size(), n_ch));
    }
    WindowSet out = windows;
    std::vector<double> inv(n_ch);
    for (std::size_t c = 0; c < n_ch; ++c) inv[c] = 1.0 / std::max(stats.stddev[c], kStdFloor);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const std::size_t c = i % n_ch;
        out.data[i] = (out.data[i] - stats.mean[c]) * inv[c];
    }
    return out;
}

FoldData build_fold_datasets(std::span<const WindowSet> per_subject,
                             std::span<const int> train_subjects, int val_subject,
                             FitScope scope) {
    const std::set<int> train_ids(train_subjects.begin(), train_subjects.end());
    if (train_ids.count(val_subject) != 0) {
        throw Error(ErrorKind::Leakage,
                    fmt::format("validation subject {} is also a training subject", val_subject));
    }

    const std::size_t modality = per_subject.empty() ? 0 : per_subject.front().modality;
    WindowSet train;
    WindowSet val;
    WindowSet all;
    train.modality = val.modality = all.modality = modality;
    for (const auto& set : per_subject) {
        if (scope == FitScope::Global) all.append(set);
        for (std::size_t i = 0; i < set.size(); ++i) {
            const int subject = set.origins[i].subject_id;
            WindowSet* dest = subject == val_subject ? &val
                              : train_ids.count(subject) ? &train
                                                         : nullptr;
            if (dest == nullptr) continue;
            if (set.modality != modality) {
                throw Error(ErrorKind::ChannelMismatch, "per-subject window sets differ in modality");
            }
            const auto w = set.window(i);
            dest->data.insert(dest->data.end(), w.begin(), w.end());
            dest->labels.push_back(set.labels[i]);
            dest->origins.push_back(set.origins[i]);
        }
    }
    if (train.empty()) throw Error(ErrorKind::EmptyInput, "fold has no training windows");
    if (val.empty()) {
        throw Error(ErrorKind::EmptyInput,
                    fmt::format("fold has no windows for validation subject {}", val_subject));
    }

    std::set<int> train_seen;
    for (const auto& o : train.origins) train_seen.insert(o.subject_id);
    for (const auto& o : val.origins) {
        if (train_seen.count(o.subject_id) != 0) {
            throw Error(ErrorKind::Leakage,
                        fmt::format("subject {} appears in both train and validation", o.subject_id));
        }
    }

    FoldData fold;
    fold.stats = fit_stats(scope == FitScope::Global ? all : train, scope);
    fold.train = apply_stats(fold.stats, train);
    fold.val = apply_stats(fold.stats, val);
    return fold;
}

void write_windows_csv(std::ostream& out, const WindowSet& windows) {
    for (std::size_t i = 0; i < windows.size(); ++i) {
        out << windows.origins[i].subject_id << ',' << windows.labels[i] << ','
            << windows.origins[i].offset;
        for (double v : windows.window(i)) out << ',' << fmt::format("{}", v);
        out << '\n';
    }
}

}  // namespace harbench
