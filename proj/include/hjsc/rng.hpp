#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace hjsc {

// Seedable RNG with explicit stream splitting. A stream is addressed by a
// 64-bit tag (or a string tag, hashed with FNV-1a); the child root is
// root ^ splitmix64(tag), so streams derived from the same seed are
// decorrelated and reproducible across runs and platforms.
//
// Gaussian and uniform draws are implemented directly on top of the
// mt19937_64 bit stream (not std::*_distribution) so sequences are
// bit-identical across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : root_(mix(seed)), engine_(root_) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t hash_tag(std::string_view tag) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : tag) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

    Rng stream(std::uint64_t tag) const { return Rng(root_ ^ mix(tag), 0); }
    Rng stream(std::string_view tag) const { return stream(hash_tag(tag)); }
    Rng stream(std::string_view tag, std::uint64_t index) const {
        return stream(hash_tag(tag) ^ mix(index));
    }

    std::uint64_t bits() { return engine_(); }

    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
        std::uint64_t x;
        do {
            x = bits();
        } while (x >= limit);
        return x % n;
    }

    // Uniform on [0,1), 53-bit resolution.
    double uniform() { return double(bits() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]; safe as a log() argument.
    double uniform_pos() { return double((bits() >> 11) + 1) * 0x1.0p-53; }

    // Uniform on (-1/2, 1/2); the quantization-noise surrogate.
    double uniform_half() {
        double u;
        do {
            u = uniform() - 0.5;
        } while (u == -0.5);
        return u;
    }

    // Standard normal via Box-Muller on explicit uniforms.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    Rng(std::uint64_t root, int) : root_(root), engine_(root) {}

    std::uint64_t root_ = 0;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace hjsc
