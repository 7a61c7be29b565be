#include "harbench/error.hpp"
#include "harbench/gaps.hpp"
#include "harbench/pipeline.hpp"
#include "harbench/rng.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

using namespace harbench;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Independent two-pass mean / population std over one channel.
std::pair<double, double> two_pass(const WindowSet& ws, std::size_t channel) {
    const std::size_t rows = ws.size() * kWindowLength;
    long double sum = 0;
    for (std::size_t r = 0; r < rows; ++r) sum += ws.data[r * ws.modality + channel];
    const double mean = static_cast<double>(sum / rows);
    long double ss = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        const long double d = ws.data[r * ws.modality + channel] - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(static_cast<double>(ss / rows))};
}

WindowSet constant_windows(std::size_t count, std::size_t modality, double value) {
    WindowSet ws;
    ws.modality = modality;
    ws.data.assign(count * kWindowLength * modality, value);
    ws.labels.assign(count, 0);
    ws.origins.assign(count, WindowOrigin{101, 0, 0});
    return ws;
}

WindowSet random_windows(std::size_t count, std::size_t modality, std::uint64_t seed) {
    Rng rng(seed);
    WindowSet ws = constant_windows(count, modality, 0.0);
    for (std::size_t i = 0; i < ws.data.size(); ++i) {
        const std::size_t c = i % modality;
        ws.data[i] = 3.0 * static_cast<double>(c) + (1.0 + static_cast<double>(c)) * rng.normal();
    }
    return ws;
}

// Segment of `length` samples whose cell value encodes (row, channel).
std::vector<double> ramp_block(std::size_t length) {
    std::vector<double> block(length * kChannelCount);
    for (std::size_t r = 0; r < length; ++r)
        for (std::size_t c = 0; c < kChannelCount; ++c) block[r * kChannelCount + c] = 1000.0 * r + c;
    return block;
}

}  // namespace

TEST_CASE("catalog has the fifteen combinations") {
    const auto& cat = combination_catalog();
    REQUIRE(cat.size() == 15);
    std::string ids;
    std::map<std::size_t, int> modality_counts;
    for (const auto& c : cat) {
        ids += c.id;
        ++modality_counts[c.modality()];
        CHECK(std::is_sorted(c.channels.begin(), c.channels.end()));
    }
    CHECK(ids == "abcdefghijklmno");
    CHECK(modality_counts == std::map<std::size_t, int>{{6, 9}, {9, 2}, {12, 3}, {18, 1}});

    const auto& c = find_combination('c');
    CHECK(c.modality() == 18);

    const auto& l = find_combination('l');
    CHECK(l.modality() == 12);
    CHECK(l.label() == "Chest and Ankle IMU (l)");
    for (const auto& ch : l.channels) CHECK(ch.location != Location::Hand);

    const auto& g = find_combination('g');
    CHECK(g.modality() == 6);
    for (const auto& ch : g.channels) {
        CHECK(ch.kind == SensorKind::Gyro);
        CHECK(ch.location != Location::Chest);
    }
    CHECK_THROWS_AS(find_combination('p'), Error);
}

TEST_CASE("clean_missing interpolates short interior gaps only") {
    CHECK(clean_missing(std::vector<double>{1, kNaN, 3}, 1) == std::vector<double>{1, 2, 3});
    CHECK(clean_missing(std::vector<double>{1, 2, 3}, 0) == std::vector<double>{1, 2, 3});

    std::vector<double> long_gap(40, 1.0);
    std::fill(long_gap.begin() + 5, long_gap.begin() + 35, kNaN);
    const auto out = clean_missing(long_gap, 20);
    CHECK(std::count_if(out.begin(), out.end(), [](double v) { return std::isnan(v); }) == 30);

    // Boundary: a gap of exactly max_gap is filled, one longer is not.
    CHECK(clean_missing(std::vector<double>{0, kNaN, kNaN, 3}, 2) == std::vector<double>{0, 1, 2, 3});
    CHECK(std::isnan(clean_missing(std::vector<double>{0, kNaN, kNaN, kNaN, 4}, 2)[2]));

    // Edge gaps have only one neighbour and stay missing.
    const auto edges = clean_missing(std::vector<double>{kNaN, 1, 2, kNaN}, 5);
    CHECK(std::isnan(edges[0]));
    CHECK(std::isnan(edges[3]));
}

TEST_CASE("window count matches offset enumeration for L in [0, 500]") {
    for (std::size_t length = 0; length <= 500; ++length) {
        std::size_t enumerated = 0;
        for (std::size_t off = 0; off + kWindowLength <= length; off += kWindowStride) ++enumerated;
        CHECK(window_count(length) == enumerated);
    }
    CHECK(window_count(100) == 1);
    CHECK(window_count(175) == 4);
    CHECK(window_count(99) == 0);
}

TEST_CASE("segment_windows slices 100-sample windows at stride 25") {
    const auto combo = find_combination('d');
    const ActivitySegment seg{104, 2, 1000, 1175};
    const auto block = ramp_block(175);
    const auto ws = segment_windows(seg, 3, block, combo);
    REQUIRE(ws.size() == 4);
    CHECK(ws.modality == 6);
    for (std::size_t w = 0; w < 4; ++w) {
        CHECK(ws.origins[w] == WindowOrigin{104, 3, 25 * w});
        CHECK(ws.labels[w] == 2);
        const auto win = ws.window(w);
        for (std::size_t t = 0; t < kWindowLength; ++t) {
            for (std::size_t k = 0; k < combo.channels.size(); ++k) {
                CHECK(win[t * 6 + k] == 1000.0 * (25 * w + t) + combo.channels[k].index());
            }
        }
    }
    // Consecutive windows share exactly 75 samples.
    for (std::size_t w = 0; w + 1 < ws.size(); ++w) {
        const auto a = ws.window(w);
        const auto b = ws.window(w + 1);
        CHECK(std::equal(a.begin() + 25 * 6, a.end(), b.begin()));
        CHECK_FALSE(std::equal(a.begin(), a.begin() + 6, b.begin()));
    }

    CHECK(segment_windows({104, 2, 0, 99}, 0, ramp_block(99), combo).empty());
    CHECK(segment_windows({104, 2, 0, 100}, 0, ramp_block(100), combo).size() == 1);
}

TEST_CASE("windows touching missing cells are dropped for every combination") {
    auto block = ramp_block(175);
    // Hand gyro (not part of combo d) missing at row 30: windows starting at 0 and 25 go.
    block[30 * kChannelCount + ChannelId{Location::Hand, SensorKind::Gyro, Axis::Y}.index()] = kNaN;
    const auto ws = segment_windows({101, 0, 0, 175}, 0, block, find_combination('d'));
    REQUIRE(ws.size() == 2);
    CHECK(ws.origins[0].offset == 50);
    CHECK(ws.origins[1].offset == 75);
    for (double v : ws.data) CHECK(std::isfinite(v));
}

TEST_CASE("select_channels agrees with direct windowing") {
    const auto& rec = testing::synthetic_recordings()[2];
    const auto labels = default_label_map();
    const auto full = subject_windows(rec, labels, all_channels_combination());
    for (char id : {'a', 'f', 'l'}) {
        const auto& combo = find_combination(id);
        const auto direct = subject_windows(rec, labels, combo);
        const auto selected = select_channels(full, combo);
        CHECK(direct.data == selected.data);
        CHECK(direct.labels == selected.labels);
        CHECK(direct.origins == selected.origins);
    }
}

TEST_CASE("every synthetic window lies inside one labelled segment") {
    const auto labels = default_label_map();
    for (const auto& rec : testing::synthetic_recordings()) {
        const auto segs = extract_segments(rec, labels);
        const auto ws = subject_windows(rec, labels, all_channels_combination());
        for (std::size_t i = 0; i < ws.size(); ++i) {
            const auto& o = ws.origins[i];
            REQUIRE(o.segment_index < static_cast<int>(segs.size()));
            const auto& seg = segs[static_cast<std::size_t>(o.segment_index)];
            CHECK(o.offset + kWindowLength <= seg.length());
            CHECK(seg.class_label == ws.labels[i]);
            for (std::size_t t = 0; t < kWindowLength; ++t) {
                CHECK(labels.at(rec.activity_ids[seg.begin + o.offset + t]) == ws.labels[i]);
            }
        }
    }
}

TEST_CASE("fit_stats") {
    SUBCASE("constant channel") {
        const auto stats = fit_stats(constant_windows(3, 2, 5.0), FitScope::TrainOnly);
        CHECK(stats.mean == std::vector<double>{5.0, 5.0});
        CHECK(stats.stddev == std::vector<double>{0.0, 0.0});
    }
    SUBCASE("two-point channel") {
        WindowSet ws = constant_windows(2, 1, 0.0);
        std::fill(ws.data.begin() + kWindowLength, ws.data.end(), 2.0);
        const auto stats = fit_stats(ws, FitScope::Global);
        CHECK(stats.mean[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(stats.stddev[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(stats.scope == FitScope::Global);
    }
    SUBCASE("matches a two-pass oracle") {
        const auto ws = random_windows(37, 5, 11);
        const auto stats = fit_stats(ws, FitScope::TrainOnly);
        for (std::size_t c = 0; c < 5; ++c) {
            const auto [mean, sd] = two_pass(ws, c);
            CHECK(std::abs(stats.mean[c] - mean) < 1e-12);
            CHECK(std::abs(stats.stddev[c] - sd) < 1e-12);
        }
    }
    SUBCASE("empty input") {
        WindowSet empty;
        empty.modality = 3;
        CHECK_THROWS_AS(fit_stats(empty, FitScope::TrainOnly), Error);
    }
}

TEST_CASE("apply_stats standardizes") {
    SUBCASE("fitted data gets zero mean, unit std") {
        const auto ws = random_windows(50, 4, 3);
        const auto z = apply_stats(fit_stats(ws, FitScope::TrainOnly), ws);
        for (std::size_t c = 0; c < 4; ++c) {
            const auto [mean, sd] = two_pass(z, c);
            CHECK(std::abs(mean) < 1e-9);
            CHECK(std::abs(sd - 1.0) < 1e-9);
        }
        CHECK(z.labels == ws.labels);
        CHECK(z.origins == ws.origins);

        // Re-fitting the standardized data gives (0, 1), so a second pass is ~identity.
        const auto again = apply_stats(fit_stats(z, FitScope::TrainOnly), z);
        for (std::size_t i = 0; i < z.data.size(); ++i) CHECK(std::abs(again.data[i] - z.data[i]) < 1e-9);
    }
    SUBCASE("constant channel maps to zeros") {
        const auto ws = constant_windows(2, 1, 7.5);
        const auto z = apply_stats(fit_stats(ws, FitScope::TrainOnly), ws);
        for (double v : z.data) CHECK(v == 0.0);
    }
    SUBCASE("explicit statistics") {
        ChannelStats stats{{1.0}, {2.0}, FitScope::TrainOnly};
        const auto z = apply_stats(stats, constant_windows(1, 1, 5.0));
        CHECK(z.data[0] == 2.0);
    }
    SUBCASE("channel mismatch") {
        ChannelStats stats{{1.0}, {2.0}, FitScope::TrainOnly};
        try {
            apply_stats(stats, constant_windows(1, 2, 5.0));
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::ChannelMismatch);
        }
    }
}

TEST_CASE("fold datasets keep subjects apart") {
    const auto& full = testing::synthetic_full_windows();
    const auto& combo = find_combination('e');
    std::vector<WindowSet> per_subject;
    for (const auto& s : full) per_subject.push_back(select_channels(s, combo));
    const std::vector<int> train = {101, 102, 103, 104, 105, 106, 107};

    const auto fold = build_fold_datasets(per_subject, train, 108, FitScope::TrainOnly);
    CHECK(fold.train.modality == 6);
    CHECK(fold.val.modality == 6);
    std::set<int> train_ids, val_ids;
    for (const auto& o : fold.train.origins) train_ids.insert(o.subject_id);
    for (const auto& o : fold.val.origins) val_ids.insert(o.subject_id);
    CHECK(train_ids == std::set<int>(train.begin(), train.end()));
    CHECK(val_ids == std::set<int>{108});

    // Train-only statistics: the training set is centred, the held-out subject is not.
    double max_val_mean = 0.0;
    for (std::size_t c = 0; c < 6; ++c) {
        CHECK(std::abs(two_pass(fold.train, c).first) < 1e-9);
        max_val_mean = std::max(max_val_mean, std::abs(two_pass(fold.val, c).first));
    }
    CHECK(max_val_mean > 1e-3);

    SUBCASE("global scope fits on every subject") {
        const auto global = build_fold_datasets(per_subject, train, 108, FitScope::Global);
        WindowSet all;
        for (const auto& s : per_subject) all.append(s);
        const auto expected = fit_stats(all, FitScope::Global);
        CHECK(global.stats.mean == expected.mean);
        CHECK(global.stats.stddev == expected.stddev);
        CHECK(global.stats.scope == FitScope::Global);
    }
    SUBCASE("validation subject among training subjects") {
        const std::vector<int> leaky = {101, 108};
        try {
            build_fold_datasets(per_subject, leaky, 108, FitScope::TrainOnly);
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Leakage);
        }
    }
}

TEST_CASE("subsample keeps every k-th window") {
    const auto ws = random_windows(10, 2, 1);
    const auto sub = subsample(ws, 4);
    REQUIRE(sub.size() == 3);
    CHECK(std::equal(sub.window(1).begin(), sub.window(1).end(), ws.window(4).begin()));
    CHECK(subsample(ws, 1).data == ws.data);
}

TEST_CASE("window CSV dump has one row per window") {
    auto ws = constant_windows(2, 1, 0.5);
    ws.origins[1].offset = 25;
    ws.labels[1] = 3;
    std::ostringstream out;
    write_windows_csv(out, ws);
    std::istringstream in(out.str());
    std::string row;
    std::vector<std::string> rows;
    while (std::getline(in, row)) rows.push_back(row);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].rfind("101,3,25,0.5,", 0) == 0);
    CHECK(std::count(rows[0].begin(), rows[0].end(), ',') == 3 + 99);
}
