#include "harbench/synthetic.hpp"

#include "harbench/error.hpp"
#include "harbench/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

namespace harbench {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kGravity = 9.80665;

struct Motion {
    int code;
    std::array<std::array<double, 3>, 3> posture;  // gravity direction per IMU
    double gait_hz;                                 // 0 for static activities
    std::array<double, 3> amplitude;                // per IMU, m/s^2
    double vertical_bias;                           // stair-specific vertical component
};

// hand, chest, ankle
const std::array<Motion, 6>& motions() {
    static const std::array<Motion, 6> table = {{
        {1, {{{0.1, 0.2, 0.97}, {0.05, 0.1, 0.99}, {0.1, 0.05, 0.99}}}, 0.0, {0.05, 0.02, 0.02}, 0.0},
        {2, {{{0.6, 0.6, 0.5}, {0.95, 0.1, 0.3}, {0.5, 0.1, 0.86}}}, 0.0, {0.15, 0.05, 0.05}, 0.0},
        {3, {{{0.95, 0.2, 0.2}, {0.99, 0.05, 0.1}, {0.98, 0.1, 0.15}}}, 0.0, {0.2, 0.08, 0.1}, 0.0},
        {4, {{{0.9, 0.3, 0.3}, {0.98, 0.1, 0.15}, {0.95, 0.2, 0.2}}}, 1.8, {3.0, 1.6, 6.0}, 0.0},
        {12, {{{0.85, 0.35, 0.4}, {0.93, 0.3, 0.2}, {0.9, 0.35, 0.25}}}, 1.45, {2.6, 1.9, 5.0}, 1.2},
        {13, {{{0.88, 0.3, 0.35}, {0.96, -0.2, 0.2}, {0.92, 0.1, 0.35}}}, 1.95, {3.2, 2.3, 7.0}, -1.0},
    }};
    return table;
}

std::string number(double v) { return std::isnan(v) ? std::string("NaN") : fmt::format("{:.6f}", v); }

}  // namespace

std::string synthetic_subject_text(int subject_id, const SyntheticOptions& options) {
    Rng rng(options.seed * 1000003ULL + static_cast<std::uint64_t>(subject_id));
    const double freq_scale = rng.uniform(0.9, 1.1);
    const double amp_scale = rng.uniform(0.8, 1.2);
    std::array<double, 9> tilt{};
    for (double& t : tilt) t = rng.uniform(-0.15, 0.15);

    const auto omitted_it = options.omitted.find(subject_id);
    auto omitted = [&](int code) {
        return omitted_it != options.omitted.end() &&
               std::find(omitted_it->second.begin(), omitted_it->second.end(), code) !=
                   omitted_it->second.end();
    };

    std::string text;
    std::size_t row = 0;
    auto emit = [&](int code, const Motion* motion, std::size_t count) {
        // One short dropout per IMU per activity, plus a long hand dropout while walking.
        std::array<std::size_t, 3> gap_start{};
        std::array<std::size_t, 3> gap_len{};
        if (options.dropouts && motion != nullptr && count > 200) {
            for (std::size_t imu = 0; imu < 3; ++imu) {
                gap_start[imu] = 50 + rng.below(count - 100);
                gap_len[imu] = 2 + rng.below(7);
            }
            if (code == 4) {
                gap_start[0] = count / 2;
                gap_len[0] = 40;
            }
        }
        const double phase = rng.uniform(0.0, kTwoPi);
        for (std::size_t i = 0; i < count; ++i, ++row) {
            const double t = static_cast<double>(row) * 0.01;
            text += fmt::format("{:.2f} {} ", static_cast<double>(564 + row) / 100.0, code);
            text += row % 11 == 0 ? fmt::format("{}", 80 + static_cast<int>(rng.below(40))) : "NaN";
            for (std::size_t imu = 0; imu < 3; ++imu) {
                const bool missing = gap_len[imu] > 0 && i >= gap_start[imu] && i < gap_start[imu] + gap_len[imu];
                std::array<double, 3> acc{};
                std::array<double, 3> gyro{};
                if (motion != nullptr) {
                    const double f = motion->gait_hz * freq_scale;
                    const double amp = motion->amplitude[imu] * amp_scale;
                    for (std::size_t a = 0; a < 3; ++a) {
                        const double dir = motion->posture[imu][a] + tilt[imu * 3 + a];
                        double dyn = 0.0;
                        double rot = 0.0;
                        if (f > 0.0) {
                            const double arg = kTwoPi * f * t + phase + 1.3 * static_cast<double>(a);
                            dyn = amp * (std::sin(arg) + 0.35 * std::sin(2.0 * arg)) / (1.0 + static_cast<double>(a));
                            rot = 0.35 * amp * std::cos(arg) / (1.0 + 0.5 * static_cast<double>(a));
                            if (a == 0) dyn += motion->vertical_bias * (1.0 + std::sin(0.5 * arg));
                        } else {
                            dyn = amp * std::sin(kTwoPi * 0.3 * t + phase + static_cast<double>(a));
                        }
                        acc[a] = kGravity * dir + dyn + 0.3 * rng.normal();
                        gyro[a] = rot + 0.05 * rng.normal();
                    }
                } else {
                    for (std::size_t a = 0; a < 3; ++a) {
                        acc[a] = kGravity * 0.6 + 2.0 * rng.normal();
                        gyro[a] = 0.5 * rng.normal();
                    }
                }
                const double nan = std::nan("");
                text += ' ' + number(missing ? nan : 31.0 + 0.1 * rng.normal());
                for (double v : acc) text += ' ' + number(missing ? nan : v);
                for (double v : acc) text += ' ' + number(missing ? nan : v + 0.05 * rng.normal());
                for (double v : gyro) text += ' ' + number(missing ? nan : v);
                for (int m = 0; m < 3; ++m) text += ' ' + number(missing ? nan : rng.uniform(-40.0, 40.0));
                text += missing ? " NaN NaN NaN NaN" : " 1.000000 0.000000 0.000000 0.000000";
            }
            text += '\n';
        }
    };

    const auto samples = static_cast<std::size_t>(options.seconds_per_activity * 100.0);
    emit(0, nullptr, options.transient_samples);
    for (const auto& motion : motions()) {
        if (omitted(motion.code)) continue;
        const std::size_t count = motion.code == 1 ? samples / 2 : samples;
        emit(motion.code, &motion, count);
        emit(0, nullptr, options.transient_samples);
    }
    return text;
}

void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticOptions& options) {
    std::filesystem::create_directories(dir);
    for (int subject : options.subjects) {
        const auto path = dir / fmt::format("subject{}.dat", subject);
        std::ofstream out(path, std::ios::binary);
        out << synthetic_subject_text(subject, options);
        if (!out) throw Error(ErrorKind::Io, fmt::format("cannot write {}", path.string()));
    }
}

}  // namespace harbench
