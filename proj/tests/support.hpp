#pragma once

#include "harbench/pamap2.hpp"
#include "harbench/pipeline.hpp"
#include "harbench/synthetic.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace harbench::testing {

/// Parsed synthetic dataset shared across tests (9 subjects, 109 without stairs).
inline const std::vector<SubjectRecording>& synthetic_recordings() {
    static const std::vector<SubjectRecording> recs = [] {
        SyntheticOptions options;
        options.seconds_per_activity = 12.0;
        std::vector<SubjectRecording> out;
        for (int s : options.subjects) {
            std::istringstream in(synthetic_subject_text(s, options));
            out.push_back(parse_subject_file(in, s));
        }
        return out;
    }();
    return recs;
}

/// 18-channel window sets of the eligible synthetic subjects.
inline const std::vector<WindowSet>& synthetic_full_windows() {
    static const std::vector<WindowSet> sets = [] {
        const auto& recs = synthetic_recordings();
        const auto labels = default_label_map();
        const auto eligible = eligible_subjects(recs, labels);
        std::vector<WindowSet> out;
        for (const auto& rec : recs) {
            if (std::find(eligible.begin(), eligible.end(), rec.subject_id) == eligible.end()) continue;
            out.push_back(subject_windows(rec, labels, all_channels_combination()));
        }
        return out;
    }();
    return sets;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("harbench_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace harbench::testing
