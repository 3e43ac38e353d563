#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace exlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based derivation of the seed for stream k of a parent seed.
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t k) {
    return splitmix64(splitmix64(seed) ^ splitmix64(k + 0x632be59bd9b4e019ULL));
}

using Engine = std::mt19937_64;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double normal() { return normal_(eng_); }
    double uniform() { return unif_(eng_); }
    double uniform(double a, double b) { return a + (b - a) * unif_(eng_); }
    double exponential(double rate) { return -std::log1p(-unif_(eng_)) / rate; }
    Engine& engine() { return eng_; }

private:
    Engine eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace exlab
