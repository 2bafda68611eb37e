#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>

namespace mew {

// splitmix64 mixing step. Seed derivation is built from this function only so
// that any other implementation can reproduce the exact stream assignment:
//   stream_seed(master, k) = splitmix64(splitmix64(master) + k)
// where k = 0 is the run's configuration stream (e.g. exp-transform weights)
// and k = 1 + i is the stream of chain i.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) + stream);
}

inline std::uint64_t chain_seed(std::uint64_t master, std::uint64_t chain_index) {
    return stream_seed(master, 1 + chain_index);
}

// Explicit per-chain random stream. mt19937_64 is fully specified by the
// standard, and all deriving of doubles/integers below is done from raw bits,
// so identical seeds give identical streams on every platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in (0, 1]; never 0, so ln() of a draw is always finite
    double uniform_open01() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // unbiased uniform integer in [0, n)
    std::size_t uniform_index(std::size_t n) {
        assert(n > 0);
        const std::uint64_t un = n;
        const std::uint64_t threshold = (0 - un) % un;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return static_cast<std::size_t>(r % un);
        }
    }

    // exponential with rate lambda via inverse CDF (keeps the stream portable)
    double exponential(double lambda) {
        return -std::log(uniform_open01()) / lambda;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace mew
