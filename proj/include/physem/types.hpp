#pragma once

#include <cstdint>

namespace physem {

/// Region identifiers are positive; 0 marks a pixel that belongs to no region yet.
using RegionId = std::uint32_t;
inline constexpr RegionId kUncommitted = 0;

/// Exact per-region accumulator: pixel count and integer luminance sum.
struct RegionStats {
    std::uint64_t count = 0;
    std::uint64_t sum = 0;

    double mean() const noexcept {
        return count == 0 ? 0.0 : static_cast<double>(sum) / static_cast<double>(count);
    }

    void add(std::uint8_t value) noexcept {
        ++count;
        sum += value;
    }

    void remove(std::uint8_t value) noexcept {
        --count;
        sum -= value;
    }

    friend bool operator==(const RegionStats&, const RegionStats&) = default;
};

}  // namespace physem
