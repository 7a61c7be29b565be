#pragma once

#include "harbench/channels.hpp"
#include "harbench/pamap2.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace harbench {

inline constexpr std::size_t kWindowLength = 100;  // 1 s at 100 Hz
inline constexpr std::size_t kWindowStride = 25;   // 75% overlap
inline constexpr std::size_t kDefaultMaxGap = 20;

struct SignalCombination {
    char id = 'a';
    std::string name;  // row label used in reports, without the "(x)" suffix
    std::vector<ChannelId> channels;

    std::size_t modality() const noexcept { return channels.size(); }
    std::string label() const { return name + " (" + id + ")"; }
};

/// The 15 input combinations a..o.
const std::vector<SignalCombination>& combination_catalog();

/// Throws Error{InvalidValue} for letters outside a..o.
const SignalCombination& find_combination(char id);

/// Every channel, in canonical order; not part of the catalog.
SignalCombination all_channels_combination();

struct WindowOrigin {
    int subject_id = 0;
    int segment_index = 0;
    std::size_t offset = 0;  // start sample within the segment

    friend bool operator==(const WindowOrigin&, const WindowOrigin&) = default;
};

/// A batch of labelled windows, stored as windows x 100 x modality.
struct WindowSet {
    std::size_t modality = 0;
    std::vector<double> data;
    std::vector<int> labels;
    std::vector<WindowOrigin> origins;

    std::size_t size() const noexcept { return labels.size(); }
    bool empty() const noexcept { return labels.empty(); }
    std::size_t window_stride() const noexcept { return kWindowLength * modality; }
    std::span<const double> window(std::size_t i) const {
        return std::span<const double>(data).subspan(i * window_stride(), window_stride());
    }

    /// Throws Error{ChannelMismatch} if modalities differ (an empty set adopts `other`'s).
    void append(const WindowSet& other);
};

/// floor((L - 100) / 25) + 1 for L >= 100, else 0.
std::size_t window_count(std::size_t segment_length) noexcept;

/// Windows one cleaned segment. `cleaned` holds segment.length() rows of all
/// 18 channels. Windows touching a NaN in any of the 18 channels are dropped
/// so every combination sees the same windows.
WindowSet segment_windows(const ActivitySegment& segment, int segment_index,
                          std::span<const double> cleaned, const SignalCombination& combo);

/// Segments, cleans and windows a whole recording for one combination.
WindowSet subject_windows(const SubjectRecording& rec, const LabelMap& label_map,
                          const SignalCombination& combo, std::size_t max_gap = kDefaultMaxGap);

/// Projects an 18-channel window set onto a combination's channels.
WindowSet select_channels(const WindowSet& full, const SignalCombination& combo);

/// Keeps windows 0, k, 2k, ...
WindowSet subsample(const WindowSet& windows, std::size_t every);

enum class FitScope { TrainOnly, Global };

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // population
    FitScope scope = FitScope::TrainOnly;
};

inline constexpr double kStdFloor = 1e-8;

/// Per-channel mean and population std over every cell. Throws Error{EmptyInput}.
ChannelStats fit_stats(const WindowSet& windows, FitScope scope);

/// (x - mean) / max(std, 1e-8). Throws Error{ChannelMismatch}.
WindowSet apply_stats(const ChannelStats& stats, const WindowSet& windows);

struct FoldData {
    WindowSet train;
    WindowSet val;
    ChannelStats stats;
};

/// Splits per-subject window sets into a standardized train/validation pair.
/// TrainOnly fits on the training subjects; Global fits on every set in
/// `per_subject`. Throws Error{Leakage} if the validation subject is also a
/// training subject or provenance overlaps.
FoldData build_fold_datasets(std::span<const WindowSet> per_subject,
                             std::span<const int> train_subjects, int val_subject,
                             FitScope scope);

/// Debug dump: one row per window: subject,label,offset,flattened values.
void write_windows_csv(std::ostream& out, const WindowSet& windows);

}  // namespace harbench
