#pragma once

#include <cstdint>

namespace tipi {

/// Independent random streams derived from one session seed.
enum class Stream : std::uint32_t {
    kInitialWeights = 1,
    kSensorNoise = 2,
    kSchedule = 3,
};

/// Deterministic 64-bit seed for the given stream, mixed through std::seed_seq.
std::uint64_t derive_seed(std::uint64_t seed, Stream stream);

}  // namespace tipi
