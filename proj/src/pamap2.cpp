#include "harbench/pamap2.hpp"

#include "harbench/error.hpp"
#include "harbench/gaps.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <regex>
#include <string>
#include <string_view>

namespace harbench {

namespace {

constexpr std::size_t kFieldsPerLine = 54;
constexpr std::size_t kImuBlockStart = 3;
constexpr std::size_t kImuBlockWidth = 17;
constexpr std::size_t kAcc16Offset = 1;
constexpr std::size_t kAcc6Offset = 4;
constexpr std::size_t kGyroOffset = 7;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

// Splits on whitespace into `out`; returns the field count (may exceed out.size()).
std::size_t split_fields(std::string_view line, std::array<std::string_view, kFieldsPerLine>& out) {
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && !is_space(line[j])) ++j;
        if (count < out.size()) out[count] = line.substr(i, j - i);
        ++count;
        i = j;
    }
    return count;
}

bool parse_number(std::string_view token, double& value) {
    if (token == "NaN" || token == "nan" || token == "NAN") {
        value = kNaN;
        return true;
    }
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    return ec == std::errc() && ptr == last;
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
    throw Error(ErrorKind::MalformedLine, fmt::format("line {}: {}", line_no, why));
}

template <typename T>
void put_le(std::ostream& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
    U bits = std::bit_cast<U>(value);
    char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(bytes, sizeof(U));
}

template <typename T>
T get_le(std::istream& in) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
    unsigned char bytes[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
        throw Error(ErrorKind::BadCache, "cache truncated");
    }
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

constexpr char kCacheMagic[4] = {'H', 'R', 'B', 'C'};

}  // namespace

LabelMap default_label_map() { return {{2, 0}, {3, 1}, {4, 2}, {12, 3}, {13, 4}}; }

const char* class_name(int label) {
    static constexpr const char* names[] = {"sitting", "standing", "walking", "ascending stairs",
                                            "descending stairs"};
    return (label >= 0 && label < kNumClasses) ? names[label] : "unknown";
}

bool is_known_activity_code(int code) noexcept {
    static constexpr int codes[] = {0, 1, 2, 3, 4, 5, 6, 7, 9, 10, 11, 12, 13, 16, 17, 18, 19, 20, 24};
    return std::find(std::begin(codes), std::end(codes), code) != std::end(codes);
}

SubjectRecording parse_subject_file(std::istream& source, int subject_id, AccelRange range) {
    SubjectRecording rec;
    rec.subject_id = subject_id;
    rec.accel_range = range;

    const std::size_t acc_offset = range == AccelRange::G16 ? kAcc16Offset : kAcc6Offset;
    std::array<std::string_view, kFieldsPerLine> fields;
    std::array<double, kChannelCount> row{};
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(source, line)) {
        ++line_no;
        const std::size_t count = split_fields(line, fields);
        if (count == 0) continue;
        if (count != kFieldsPerLine) {
            malformed(line_no, fmt::format("expected {} fields, found {}", kFieldsPerLine, count));
        }

        double timestamp = 0.0;
        double activity = 0.0;
        if (!parse_number(fields[0], timestamp) || !std::isfinite(timestamp)) {
            malformed(line_no, fmt::format("bad timestamp '{}'", fields[0]));
        }
        if (!parse_number(fields[1], activity) || !std::isfinite(activity) ||
            activity != std::floor(activity) || !is_known_activity_code(static_cast<int>(activity))) {
            malformed(line_no, fmt::format("bad activity id '{}'", fields[1]));
        }
        if (!rec.timestamps.empty() && timestamp <= rec.timestamps.back()) {
            malformed(line_no, "timestamp does not increase");
        }
        for (std::size_t f = 2; f < kFieldsPerLine; ++f) {
            double v;
            if (!parse_number(fields[f], v)) {
                malformed(line_no, fmt::format("field {} is not a number: '{}'", f + 1, fields[f]));
            }
            if (f < kImuBlockStart) continue;
            const std::size_t rel = (f - kImuBlockStart) % kImuBlockWidth;
            const auto loc = static_cast<Location>((f - kImuBlockStart) / kImuBlockWidth);
            if (rel >= acc_offset && rel < acc_offset + 3) {
                row[ChannelId{loc, SensorKind::Accel, static_cast<Axis>(rel - acc_offset)}.index()] = v;
            } else if (rel >= kGyroOffset && rel < kGyroOffset + 3) {
                row[ChannelId{loc, SensorKind::Gyro, static_cast<Axis>(rel - kGyroOffset)}.index()] = v;
            }
        }
        rec.timestamps.push_back(timestamp);
        rec.activity_ids.push_back(static_cast<int>(activity));
        rec.values.insert(rec.values.end(), row.begin(), row.end());
    }
    if (rec.timestamps.empty()) {
        throw Error(ErrorKind::EmptyFile, fmt::format("subject {}: no samples", subject_id));
    }
    return rec;
}

SubjectRecording load_subject_file(const std::filesystem::path& path, int subject_id,
                                   AccelRange range) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, fmt::format("cannot open {}", path.string()));
    try {
        return parse_subject_file(in, subject_id, range);
    } catch (const Error& e) {
        throw Error(e.kind(), fmt::format("{}: {}", path.filename().string(), e.what()));
    }
}

int subject_id_from_filename(const std::filesystem::path& path) {
    static const std::regex pattern(R"(subject(\d{3})\.dat)");
    std::smatch m;
    const std::string name = path.filename().string();
    if (!std::regex_match(name, m, pattern)) return -1;
    return std::stoi(m[1].str());
}

std::vector<SubjectRecording> load_data_root(const std::filesystem::path& root, AccelRange range) {
    std::error_code ec;
    if (!std::filesystem::is_directory(root, ec)) {
        throw Error(ErrorKind::Io, fmt::format("data root {} is not a directory", root.string()));
    }
    std::vector<std::pair<int, std::filesystem::path>> files;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        const int id = subject_id_from_filename(entry.path());
        if (id >= 0 && entry.is_regular_file()) files.emplace_back(id, entry.path());
    }
    if (files.empty()) {
        throw Error(ErrorKind::Io, fmt::format("no subjectNNN.dat files under {}", root.string()));
    }
    std::sort(files.begin(), files.end());
    std::vector<SubjectRecording> out;
    out.reserve(files.size());
    for (const auto& [id, path] : files) out.push_back(load_subject_file(path, id, range));
    return out;
}

std::vector<ActivitySegment> extract_segments(const SubjectRecording& rec, const LabelMap& label_map) {
    if (label_map.size() != static_cast<std::size_t>(kNumClasses)) {
        throw Error(ErrorKind::InvalidArgument, "label map must cover exactly 5 activity codes");
    }
    std::array<bool, kNumClasses> used{};
    for (const auto& [code, label] : label_map) {
        if (label < 0 || label >= kNumClasses || used[label]) {
            throw Error(ErrorKind::InvalidArgument, "label map must assign distinct labels 0..4");
        }
        used[label] = true;
    }

    std::vector<ActivitySegment> segments;
    const auto& codes = rec.activity_ids;
    std::size_t i = 0;
    while (i < codes.size()) {
        std::size_t j = i + 1;
        while (j < codes.size() && codes[j] == codes[i]) ++j;
        if (auto it = label_map.find(codes[i]); it != label_map.end()) {
            segments.push_back({rec.subject_id, it->second, i, j});
        }
        i = j;
    }
    return segments;
}

std::vector<int> eligible_subjects(std::span<const SubjectRecording> recordings,
                                   const LabelMap& label_map, std::size_t max_gap) {
    std::vector<int> eligible;
    for (const auto& rec : recordings) {
        std::array<bool, kNumClasses> has_class{};
        for (const auto& seg : extract_segments(rec, label_map)) {
            if (has_class[seg.class_label] || seg.length() < 100) continue;
            const auto block = std::span<const double>(rec.values)
                                   .subspan(seg.begin * kChannelCount, seg.length() * kChannelCount);
            const auto cleaned = clean_missing_columns(block, kChannelCount, max_gap);
            std::size_t run = 0;
            for (std::size_t r = 0; r < seg.length() && run < 100; ++r) {
                const auto first = cleaned.begin() + static_cast<std::ptrdiff_t>(r * kChannelCount);
                const bool clean = std::all_of(first, first + kChannelCount,
                                               [](double v) { return std::isfinite(v); });
                run = clean ? run + 1 : 0;
            }
            if (run >= 100) has_class[seg.class_label] = true;
        }
        if (std::all_of(has_class.begin(), has_class.end(), [](bool b) { return b; })) {
            eligible.push_back(rec.subject_id);
        }
    }
    std::sort(eligible.begin(), eligible.end());
    if (eligible.size() < 2) {
        throw Error(ErrorKind::InsufficientSubjects,
                    fmt::format("{} eligible subject(s); at least 2 required", eligible.size()));
    }
    return eligible;
}

void write_cache(std::ostream& out, const SubjectRecording& rec) {
    out.write(kCacheMagic, 4);
    put_le<std::uint32_t>(out, kCacheVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.subject_id));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.accel_range));
    put_le<std::uint64_t>(out, rec.size());
    for (double t : rec.timestamps) put_le<double>(out, t);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        for (std::size_t i = 0; i < rec.size(); ++i) put_le<double>(out, rec.values[i * kChannelCount + c]);
    }
    for (int a : rec.activity_ids) put_le<std::int16_t>(out, static_cast<std::int16_t>(a));
    if (!out) throw Error(ErrorKind::Io, "failed writing cache");
}

SubjectRecording read_cache(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kCacheMagic)) {
        throw Error(ErrorKind::BadCache, "bad cache magic");
    }
    const auto version = get_le<std::uint32_t>(in);
    if (version != kCacheVersion) {
        throw Error(ErrorKind::BadCache, fmt::format("unsupported cache version {}", version));
    }
    SubjectRecording rec;
    rec.subject_id = static_cast<int>(get_le<std::uint32_t>(in));
    const auto range = get_le<std::uint32_t>(in);
    if (range > 1) throw Error(ErrorKind::BadCache, "bad accel range in cache");
    rec.accel_range = static_cast<AccelRange>(range);
    const auto n = get_le<std::uint64_t>(in);
    if (n == 0 || n > (std::uint64_t{1} << 32)) throw Error(ErrorKind::BadCache, "bad sample count");
    rec.timestamps.resize(n);
    rec.values.resize(n * kChannelCount);
    rec.activity_ids.resize(n);
    for (auto& t : rec.timestamps) t = get_le<double>(in);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        for (std::size_t i = 0; i < n; ++i) rec.values[i * kChannelCount + c] = get_le<double>(in);
    }
    for (auto& a : rec.activity_ids) a = get_le<std::int16_t>(in);
    return rec;
}

}  // namespace harbench
