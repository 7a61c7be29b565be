#pragma once

#include "harbench/channels.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace harbench {

/// Which accelerometer triple of each IMU block to keep.
enum class AccelRange : unsigned char { G16, G6 };

inline constexpr int kNumClasses = 5;

/// One participant's protocol recording restricted to the 18 inertial channels.
/// Missing cells are quiet NaN.
struct SubjectRecording {
    int subject_id = 0;
    AccelRange accel_range = AccelRange::G16;
    std::vector<double> timestamps;
    std::vector<int> activity_ids;
    std::vector<double> values;  // samples x 18, row-major

    std::size_t size() const noexcept { return timestamps.size(); }
    std::span<const double> sample(std::size_t i) const {
        return std::span<const double>(values).subspan(i * kChannelCount, kChannelCount);
    }
    double at(std::size_t i, ChannelId ch) const { return values[i * kChannelCount + ch.index()]; }
};

/// Maps raw dataset activity codes to class labels 0..4.
using LabelMap = std::map<int, int>;

/// sitting=2, standing=3, walking=4, ascending stairs=12, descending stairs=13.
LabelMap default_label_map();

/// Human-readable names for class labels 0..4.
const char* class_name(int label);

/// True for codes listed in the PAMAP2 documentation (0 = transient).
bool is_known_activity_code(int code) noexcept;

struct ActivitySegment {
    int subject_id = 0;
    int class_label = 0;
    std::size_t begin = 0;  // inclusive
    std::size_t end = 0;    // exclusive

    std::size_t length() const noexcept { return end - begin; }
};

/// Parses a PAMAP2 protocol file (54 whitespace-separated fields per line).
/// Throws Error{MalformedLine} with the 1-based line number, or Error{EmptyFile}.
SubjectRecording parse_subject_file(std::istream& source, int subject_id,
                                     AccelRange range = AccelRange::G16);

SubjectRecording load_subject_file(const std::filesystem::path& path, int subject_id,
                                   AccelRange range = AccelRange::G16);

/// Extracts the subject id from names like "subject105.dat"; -1 if no match.
int subject_id_from_filename(const std::filesystem::path& path);

/// Loads every subjectNNN.dat under `root`, ascending by id.
std::vector<SubjectRecording> load_data_root(const std::filesystem::path& root,
                                             AccelRange range = AccelRange::G16);

/// Maximal runs of samples whose code is in `label_map`. `label_map` must
/// hold exactly 5 codes mapping onto distinct labels 0..4.
std::vector<ActivitySegment> extract_segments(const SubjectRecording& rec,
                                              const LabelMap& label_map);

/// Subjects having, for every class, a segment with at least 100 consecutive
/// clean samples (after interpolating gaps of at most `max_gap` samples).
/// Throws Error{InsufficientSubjects} when fewer than two qualify.
std::vector<int> eligible_subjects(std::span<const SubjectRecording> recordings,
                                   const LabelMap& label_map, std::size_t max_gap = 20);

// Binary columnar cache. Layout (little-endian):
//   magic "HRBC" | u32 version | u32 subject id | u32 accel range | u64 samples
//   | f64 timestamps[samples] | 18 x f64 channel[samples] | i16 activity[samples]
inline constexpr std::uint32_t kCacheVersion = 1;

void write_cache(std::ostream& out, const SubjectRecording& rec);
SubjectRecording read_cache(std::istream& in);

}  // namespace harbench
