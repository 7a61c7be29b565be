#include "harbench/channels.hpp"

namespace harbench {

std::array<ChannelId, kChannelCount> all_channels() noexcept {
    std::array<ChannelId, kChannelCount> out{};
    for (std::size_t i = 0; i < kChannelCount; ++i) out[i] = ChannelId::from_index(i);
    return out;
}

std::string channel_name(ChannelId id) {
    static constexpr const char* locations[] = {"hand", "chest", "ankle"};
    static constexpr const char* kinds[] = {"acc", "gyro"};
    static constexpr const char* axes[] = {"x", "y", "z"};
    return std::string(locations[static_cast<int>(id.location)]) + "_" +
           kinds[static_cast<int>(id.kind)] + "_" + axes[static_cast<int>(id.axis)];
}

}  // namespace harbench
