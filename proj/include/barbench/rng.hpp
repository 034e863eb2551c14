#pragma once

#include <cstdint>
#include <random>

namespace barbench {

// splitmix64; used only to spread a root seed into substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class StreamKind : std::uint64_t {
    arrival = 1,
    service = 2,
    routing = 3,
    gaussian = 4,   // SRBM driving noise
    grid = 5,       // random theta-grid points
    generic = 6,
};

// One substream per (root seed, kind, index). Substream seeds are derived by
// a fixed splitmix64 chain, so the m-th draw of a given stream is identical
// across runs and across the networks of a heavy-traffic sequence (common
// random numbers).
class RngStream {
public:
    RngStream(std::uint64_t root_seed, StreamKind kind, std::uint64_t index)
        : engine_(splitmix64(splitmix64(root_seed ^ 0x5851f42d4c957f2dULL) ^
                             splitmix64(static_cast<std::uint64_t>(kind) * 0x100000001b3ULL + index))) {}

    // Strictly inside (0,1): takes the top 53 bits and centers in the cell.
    double uniform01() {
        const std::uint64_t bits = engine_() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        // Box-Muller with a cached spare; consumes two uniforms per pair.
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace barbench
