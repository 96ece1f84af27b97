#pragma once

#include <cstdint>

namespace proxci {

// Counter-based random source.
//
// Every variate is a pure function of (seed, stream, index):
//
//   key   = mix(mix(mix(seed) ^ stream) ^ index)
//   mix   = SplitMix64 finalizer (Steele, Lea & Flood 2014):
//             z += 0x9e3779b97f4a7c15
//             z  = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//             z  = (z ^ (z >> 27)) * 0x94d049bb133111eb
//             z  =  z ^ (z >> 31)
//   u     = ((key >> 11) + 0.5) * 2^-53          in (0, 1)
//   z     = Phi^-1(u)  via Wichura's AS241 (PPND16), relative error ~1e-16
//
// No state is carried between draws, so sampling is independent of thread
// count and evaluation order.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    constexpr std::uint64_t bits(std::uint64_t stream, std::uint64_t index) const noexcept {
        return mix(mix(mix(seed_) ^ stream) ^ index);
    }

    // Open interval (0, 1).
    constexpr double uniform(std::uint64_t stream, std::uint64_t index) const noexcept {
        return (static_cast<double>(bits(stream, index) >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal(std::uint64_t stream, std::uint64_t index) const noexcept;

    // Derive an independent child seed, e.g. one per benchmark replicate.
    constexpr std::uint64_t derive(std::uint64_t tag) const noexcept {
        return mix(seed_ ^ mix(tag + 0x632be59bd9b4e019ULL));
    }

    constexpr std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

// Inverse standard normal CDF (AS241 / PPND16).
double normal_quantile(double p) noexcept;

}  // namespace proxci
