#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace harbench {

/// Generator for PAMAP2-format protocol files with activity-dependent
/// periodic signals, per-subject offsets, sensor noise and dropouts. Used
/// by tests and demos when the real dataset is not at hand.
struct SyntheticOptions {
    std::vector<int> subjects = {101, 102, 103, 104, 105, 106, 107, 108, 109};
    double seconds_per_activity = 20.0;
    std::size_t transient_samples = 150;
    std::uint64_t seed = 7;
    /// Raw activity codes left out per subject. By default subject 109 has no stairs.
    std::map<int, std::vector<int>> omitted = {{109, {12, 13}}};
    bool dropouts = true;
};

std::string synthetic_subject_text(int subject_id, const SyntheticOptions& options);

/// Writes subjectNNN.dat files into `dir` (created if missing).
void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticOptions& options);

}  // namespace harbench
