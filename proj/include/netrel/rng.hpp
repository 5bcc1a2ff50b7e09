#ifndef NETREL_RNG_HPP
#define NETREL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <span>

namespace netrel {

// Counter-based random stream. Each stream is keyed by an arbitrary list of
// 64-bit words (seed, event index, sample index, ...), so the draw assigned
// to a given sample never depends on scheduling or worker count.
class Rng {
public:
    explicit Rng(uint64_t key) : state_(key) {}

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static uint64_t derive_key(std::initializer_list<uint64_t> parts) {
        uint64_t k = 0x2545f4914f6cdd1dULL;
        for (uint64_t p : parts) k = mix(k ^ mix(p));
        return k;
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1), never exactly 0 (safe for logs).
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes two uniforms per call.
    double normal() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (size_t i = items.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_u64() % i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    uint64_t state_;
};

}  // namespace netrel

#endif
