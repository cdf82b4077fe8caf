#pragma once

// Independent random streams split from one root seed. A stream is fixed by
// (root, tag, indices), so results do not depend on scheduling.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "ffeq/channel.hpp"
#include "ffeq/modem.hpp"

namespace ffeq::harness {

enum class Stream : std::uint32_t {
    Channel = 1,
    Bits = 2,
    Noise = 3,
    Csi = 4,
    Validation = 5,
};

inline std::mt19937_64 make_stream(std::uint64_t root, Stream tag, std::initializer_list<std::uint64_t> indices = {}) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                                     static_cast<std::uint32_t>(tag)};
    for (auto i : indices) {
        words.push_back(static_cast<std::uint32_t>(i));
        words.push_back(static_cast<std::uint32_t>(i >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

template <class Rng>
Bits random_bits(Rng& rng, std::size_t n) {
    Bits out(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0) word = rng();
        out[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
    }
    return out;
}

/// n samples of CN(0, 1).
template <class Rng>
ComplexVector unit_noise(Rng& rng, Index n) {
    ComplexVector w(n);
    for (Index i = 0; i < n; ++i) w[i] = complex_gaussian(rng, 1.0);
    return w;
}

}  // namespace ffeq::harness
