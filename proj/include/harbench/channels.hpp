#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <string>

namespace harbench {

enum class Location : unsigned char { Hand, Chest, Ankle };
enum class SensorKind : unsigned char { Accel, Gyro };
enum class Axis : unsigned char { X, Y, Z };

inline constexpr std::size_t kChannelCount = 18;

/// One inertial channel. Ordered by location, then kind, then axis; the
/// ordinal of that ordering is the column index in every 18-channel array.
struct ChannelId {
    Location location;
    SensorKind kind;
    Axis axis;

    constexpr std::size_t index() const noexcept {
        return static_cast<std::size_t>(location) * 6 + static_cast<std::size_t>(kind) * 3 +
               static_cast<std::size_t>(axis);
    }

    static constexpr ChannelId from_index(std::size_t i) noexcept {
        return {static_cast<Location>(i / 6), static_cast<SensorKind>((i / 3) % 2),
                static_cast<Axis>(i % 3)};
    }

    friend constexpr auto operator<=>(const ChannelId& a, const ChannelId& b) noexcept {
        return a.index() <=> b.index();
    }
    friend constexpr bool operator==(const ChannelId& a, const ChannelId& b) noexcept {
        return a.index() == b.index();
    }
};

/// All 18 channels in canonical order.
std::array<ChannelId, kChannelCount> all_channels() noexcept;

/// e.g. "chest_gyro_y"
std::string channel_name(ChannelId id);

}  // namespace harbench
